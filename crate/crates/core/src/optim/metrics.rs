use super::loss::ssim;
use crate::error::Result;
use crate::image::Image;
use crate::real::Real;
use serde::{Deserialize, Serialize, Serializer};

/// Peak signal-to-noise ratio in dB for images in [0, 1]; `+∞` for identical images.
pub fn psnr<T: Real>(a: &Image<T>, b: &Image<T>) -> Result<f64> {
    a.same_size(b)?;
    let mse = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x.as_f64() - y.as_f64()).powi(2))
        .sum::<f64>()
        / a.data.len().max(1) as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (1.0 / mse).log10())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    #[serde(serialize_with = "serialize_db")]
    pub psnr: f64,
    pub ssim: f64,
}

pub fn compute_metrics<T: Real>(render: &Image<T>, ground_truth: &Image<T>) -> Result<Metrics> {
    Ok(Metrics {
        psnr: psnr(render, ground_truth)?,
        ssim: ssim(render, ground_truth)?.as_f64(),
    })
}

/// JSON has no infinity; a perfect match is written as the string `"inf"`.
pub fn serialize_db<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() && *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}
