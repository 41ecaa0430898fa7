//! Versioned little-endian binary model format.
//!
//! Header (24 bytes): magic `SPLATLAB`, format version (u32), SH degree (u32),
//! Gaussian count (u64). Each record is 59 f32 (236 bytes): mean, log scale,
//! rotation (r, i, j, k), opacity logit, then the 48 SH coefficients grouped by
//! channel (all red coefficients in degree order, then green, then blue).

use crate::error::{Error, Result};
use crate::gaussian::{Gaussian, MAX_SH_DEGREE, SH_COEFFS};
use nalgebra::{Vector3, Vector4};
use std::path::Path;

pub const MAGIC: &[u8; 8] = b"SPLATLAB";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_BYTES: usize = 24;
pub const RECORD_FLOATS: usize = 3 + 3 + 4 + 1 + 3 * SH_COEFFS;
pub const RECORD_BYTES: usize = RECORD_FLOATS * 4;

#[derive(Clone, Debug, PartialEq)]
pub struct SplatModel {
    pub sh_degree: u32,
    pub gaussians: Vec<Gaussian<f32>>,
}

impl SplatModel {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_BYTES + RECORD_BYTES * self.gaussians.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.sh_degree.to_le_bytes());
        out.extend_from_slice(&(self.gaussians.len() as u64).to_le_bytes());
        for g in &self.gaussians {
            for v in record(g) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_BYTES {
            return Err(Error::Truncated(format!(
                "{} bytes is shorter than the model header",
                bytes.len()
            )));
        }
        if &bytes[..8] != MAGIC {
            return Err(Error::Format("not a splat model (bad magic)".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
        let version = u32_at(8);
        if version != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let sh_degree = u32_at(12);
        if sh_degree as usize > MAX_SH_DEGREE {
            return Err(Error::Format(format!(
                "SH degree {sh_degree} exceeds {MAX_SH_DEGREE}"
            )));
        }
        let count = u64::from_le_bytes(bytes[16..24].try_into().expect("8 bytes"));
        let body = &bytes[HEADER_BYTES..];
        let expected = (count as u128) * RECORD_BYTES as u128;
        if (body.len() as u128) < expected {
            return Err(Error::Truncated(format!(
                "header declares {count} Gaussians ({expected} bytes) but only {} bytes follow",
                body.len()
            )));
        }
        if (body.len() as u128) > expected {
            return Err(Error::Format(format!(
                "{} trailing bytes after the last record",
                body.len() as u128 - expected
            )));
        }
        let gaussians = body
            .chunks_exact(RECORD_BYTES)
            .map(|rec| {
                let f: Vec<f32> = rec
                    .chunks_exact(4)
                    .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
                    .collect();
                from_record(&f)
            })
            .collect();
        Ok(Self {
            sh_degree,
            gaussians,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.is_file() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        Self::decode(&std::fs::read(path)?)
    }
}

fn record(g: &Gaussian<f32>) -> [f32; RECORD_FLOATS] {
    let mut r = [0.0; RECORD_FLOATS];
    r[0..3].copy_from_slice(g.mean.as_slice());
    r[3..6].copy_from_slice(g.log_scale.as_slice());
    r[6..10].copy_from_slice(g.rotation.as_slice());
    r[10] = g.opacity_logit;
    for c in 0..3 {
        for k in 0..SH_COEFFS {
            r[11 + c * SH_COEFFS + k] = g.sh[k][c];
        }
    }
    r
}

fn from_record(r: &[f32]) -> Gaussian<f32> {
    let mut sh = [Vector3::zeros(); SH_COEFFS];
    for (k, coeff) in sh.iter_mut().enumerate() {
        *coeff = Vector3::from_fn(|c, _| r[11 + c * SH_COEFFS + k]);
    }
    Gaussian {
        mean: Vector3::new(r[0], r[1], r[2]),
        log_scale: Vector3::new(r[3], r[4], r[5]),
        rotation: Vector4::new(r[6], r[7], r[8], r[9]),
        opacity_logit: r[10],
        sh,
    }
}
