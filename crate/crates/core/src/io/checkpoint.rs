//! Training checkpoints: parameters, Adam moments, density statistics and
//! the iteration counter in one little-endian file. Values are stored as f64,
//! so f32 state round-trips exactly.

use crate::error::{Error, Result};
use crate::gaussian::{Gaussian, NUM_PARAMS};
use crate::optim::{DensityStats, Moments, TrainState};
use crate::real::Real;
use std::path::Path;

pub const MAGIC: &[u8; 8] = b"SPLATCKP";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_BYTES: usize = 32;
const RECORD_VALUES: usize = 3 * NUM_PARAMS + 3;

pub fn encode_checkpoint<T: Real>(state: &TrainState<T>) -> Vec<u8> {
    let n = state.gaussians.len();
    let mut out = Vec::with_capacity(HEADER_BYTES + n * RECORD_VALUES * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(state.active_sh_degree as u32).to_le_bytes());
    out.extend_from_slice(&state.iteration.to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    let mut put = |v: f64| out.extend_from_slice(&v.to_le_bytes());
    for i in 0..n {
        let m = &state.moments[i];
        for v in state.gaussians[i]
            .to_params()
            .iter()
            .chain(&m.m)
            .chain(&m.v)
        {
            put(v.as_f64());
        }
        put(state.stats.grad_accum[i]);
        put(state.stats.grad_count[i] as f64);
        put(state.stats.max_radius[i]);
    }
    out
}

pub fn decode_checkpoint<T: Real>(bytes: &[u8]) -> Result<TrainState<T>> {
    if bytes.len() < HEADER_BYTES {
        return Err(Error::Truncated("checkpoint header".into()));
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::Format("not a checkpoint (bad magic)".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let degree = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
    let iteration = u64::from_le_bytes(bytes[16..24].try_into().expect("8 bytes"));
    let count = u64::from_le_bytes(bytes[24..32].try_into().expect("8 bytes"));
    let body = &bytes[HEADER_BYTES..];
    let record = RECORD_VALUES * 8;
    if (body.len() as u128) != count as u128 * record as u128 {
        return Err(Error::Truncated(format!(
            "checkpoint declares {count} Gaussians but holds {} record bytes",
            body.len()
        )));
    }
    let n = count as usize;
    let mut state = TrainState {
        gaussians: Vec::with_capacity(n),
        moments: Vec::with_capacity(n),
        stats: DensityStats::default(),
        iteration,
        active_sh_degree: degree,
    };
    for rec in body.chunks_exact(record) {
        let v: Vec<f64> = rec
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        let arr = |o: usize| -> [T; NUM_PARAMS] { std::array::from_fn(|i| T::lit(v[o + i])) };
        state.gaussians.push(Gaussian::from_params(&arr(0)));
        state.moments.push(Moments {
            m: arr(NUM_PARAMS),
            v: arr(2 * NUM_PARAMS),
        });
        let s = 3 * NUM_PARAMS;
        state.stats.grad_accum.push(v[s]);
        state.stats.grad_count.push(v[s + 1] as u32);
        state.stats.max_radius.push(v[s + 2]);
    }
    Ok(state)
}

pub fn save_checkpoint<T: Real>(path: &Path, state: &TrainState<T>) -> Result<()> {
    // Write-then-rename keeps the previous checkpoint intact if writing fails.
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, encode_checkpoint(state))?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint<T: Real>(path: &Path) -> Result<TrainState<T>> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    decode_checkpoint(&std::fs::read(path)?)
}
