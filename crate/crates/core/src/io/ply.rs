//! PLY export in the property layout common splat viewers read, and a reader
//! for the same layout.

use crate::error::{Error, Result};
use crate::gaussian::{Gaussian, SH_COEFFS};
use nalgebra::{Vector3, Vector4};
use std::path::Path;

const REST: usize = SH_COEFFS - 1;

pub fn property_names() -> Vec<String> {
    let mut names: Vec<String> = ["x", "y", "z", "nx", "ny", "nz"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    names.extend((0..3).map(|i| format!("f_dc_{i}")));
    names.extend((0..3 * REST).map(|i| format!("f_rest_{i}")));
    names.push("opacity".into());
    names.extend((0..3).map(|i| format!("scale_{i}")));
    names.extend((0..4).map(|i| format!("rot_{i}")));
    names
}

/// Binary little-endian PLY with one vertex per Gaussian. `f_rest_*` is
/// grouped by channel, then by coefficient.
pub fn encode_ply(gaussians: &[Gaussian<f32>]) -> Vec<u8> {
    let names = property_names();
    let mut out = format!(
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\n",
        gaussians.len()
    )
    .into_bytes();
    for n in &names {
        out.extend_from_slice(format!("property float {n}\n").as_bytes());
    }
    out.extend_from_slice(b"end_header\n");
    for g in gaussians {
        let mut v: Vec<f32> = Vec::with_capacity(names.len());
        v.extend_from_slice(g.mean.as_slice());
        v.extend_from_slice(&[0.0; 3]);
        v.extend_from_slice(g.sh[0].as_slice());
        for c in 0..3 {
            v.extend((1..SH_COEFFS).map(|k| g.sh[k][c]));
        }
        v.push(g.opacity_logit);
        v.extend_from_slice(g.log_scale.as_slice());
        v.extend_from_slice(g.rotation.as_slice());
        for x in v {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

pub fn save_ply(path: &Path, gaussians: &[Gaussian<f32>]) -> Result<()> {
    std::fs::write(path, encode_ply(gaussians))?;
    Ok(())
}

/// Reads a binary little-endian PLY whose vertex element has float
/// properties named as in [`property_names`], in any order. Missing `f_rest_*`
/// properties read as zero.
pub fn decode_ply(bytes: &[u8]) -> Result<Vec<Gaussian<f32>>> {
    let marker = b"end_header\n";
    let end = bytes
        .windows(marker.len())
        .position(|w| w == marker)
        .ok_or_else(|| Error::Format("PLY header has no end_header".into()))?;
    let header = std::str::from_utf8(&bytes[..end])
        .map_err(|_| Error::Format("PLY header is not text".into()))?;
    let mut lines = header.lines();
    if lines.next() != Some("ply") {
        return Err(Error::Format("missing 'ply' magic".into()));
    }
    let mut count = None;
    let mut props: Vec<String> = Vec::new();
    let mut in_vertex = false;
    for line in lines {
        let t: Vec<&str> = line.split_whitespace().collect();
        match t.as_slice() {
            ["format", "binary_little_endian", _] => {}
            ["format", other, ..] => {
                return Err(Error::Format(format!("unsupported PLY format {other}")))
            }
            ["element", "vertex", n] => {
                count = Some(
                    n.parse::<usize>()
                        .map_err(|_| Error::Format(format!("bad vertex count {n}")))?,
                );
                in_vertex = true;
            }
            ["element", ..] => in_vertex = false,
            ["property", "float", name] if in_vertex => props.push(name.to_string()),
            ["property", ty, _] if in_vertex => {
                return Err(Error::Format(format!("unsupported property type {ty}")))
            }
            _ => {}
        }
    }
    let count = count.ok_or_else(|| Error::Format("PLY has no vertex element".into()))?;
    let idx = |name: &str| props.iter().position(|p| p == name);
    let need =
        |name: &str| idx(name).ok_or_else(|| Error::Format(format!("PLY lacks property {name}")));
    let stride = props.len() * 4;
    let body = &bytes[end + marker.len()..];
    if body.len() < count.saturating_mul(stride) {
        return Err(Error::Truncated(format!(
            "PLY declares {count} vertices but holds {} bytes",
            body.len()
        )));
    }
    let pos = [need("x")?, need("y")?, need("z")?];
    let dc = [need("f_dc_0")?, need("f_dc_1")?, need("f_dc_2")?];
    let rest: Vec<Option<usize>> = (0..3 * REST).map(|i| idx(&format!("f_rest_{i}"))).collect();
    let opacity = need("opacity")?;
    let scale = [need("scale_0")?, need("scale_1")?, need("scale_2")?];
    let rot = [
        need("rot_0")?,
        need("rot_1")?,
        need("rot_2")?,
        need("rot_3")?,
    ];
    Ok((0..count)
        .map(|i| {
            let rec = &body[i * stride..(i + 1) * stride];
            let f =
                |p: usize| f32::from_le_bytes(rec[4 * p..4 * p + 4].try_into().expect("4 bytes"));
            let mut sh = [Vector3::zeros(); SH_COEFFS];
            sh[0] = Vector3::new(f(dc[0]), f(dc[1]), f(dc[2]));
            for c in 0..3 {
                for k in 1..SH_COEFFS {
                    sh[k][c] = rest[c * REST + k - 1].map_or(0.0, f);
                }
            }
            Gaussian {
                mean: Vector3::new(f(pos[0]), f(pos[1]), f(pos[2])),
                rotation: Vector4::new(f(rot[0]), f(rot[1]), f(rot[2]), f(rot[3])),
                log_scale: Vector3::new(f(scale[0]), f(scale[1]), f(scale[2])),
                opacity_logit: f(opacity),
                sh,
            }
        })
        .collect())
}

pub fn load_ply(path: &Path) -> Result<Vec<Gaussian<f32>>> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    decode_ply(&std::fs::read(path)?)
}
