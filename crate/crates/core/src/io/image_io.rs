//! PNG/JPEG input and PNG output with sRGB ↔ linear conversion.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::real::Real;
use std::path::Path;

pub fn srgb_to_linear(v: f64) -> f64 {
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

pub fn linear_to_srgb(v: f64) -> f64 {
    if v <= 0.0031308 {
        v * 12.92
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

/// Decodes an image file into linear RGB; alpha is dropped.
pub fn load_image<T: Real>(path: &Path) -> Result<Image<T>> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let rgb = image::ImageReader::open(path)?
        .with_guessed_format()?
        .decode()?
        .to_rgb32f();
    let (w, h) = rgb.dimensions();
    let data = rgb
        .into_raw()
        .into_iter()
        .map(|v| T::lit(srgb_to_linear(v.clamp(0.0, 1.0) as f64)))
        .collect();
    Image::from_vec(w, h, data)
}

/// 8-bit sRGB bytes of a linear image, clamped to [0, 1].
pub fn to_srgb8<T: Real>(img: &Image<T>) -> Vec<u8> {
    img.data
        .iter()
        .map(|v| (linear_to_srgb(v.as_f64().clamp(0.0, 1.0)) * 255.0).round() as u8)
        .collect()
}

pub fn save_png<T: Real>(path: &Path, img: &Image<T>) -> Result<()> {
    image::save_buffer_with_format(
        path,
        &to_srgb8(img),
        img.width,
        img.height,
        image::ExtendedColorType::Rgb8,
        image::ImageFormat::Png,
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transfer_functions_invert() {
        for i in 0..=100 {
            let v = i as f64 / 100.0;
            assert!((srgb_to_linear(linear_to_srgb(v)) - v).abs() < 1e-12);
        }
    }

    #[test]
    fn png_round_trip_within_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        let img = Image::<f64>::from_vec(2, 1, vec![0.0, 0.2, 0.5, 1.0, 0.05, 0.8]).unwrap();
        save_png(&p, &img).unwrap();
        let back: Image<f64> = load_image(&p).unwrap();
        assert_eq!(to_srgb8(&back), to_srgb8(&img));
    }
}
