//! Linear RGB image buffer shared by the renderer, the loss and the I/O layer.

use crate::error::{Error, Result};
use crate::real::Real;
use nalgebra::Vector3;

/// Row-major, interleaved RGB image in linear color.
#[derive(Clone, Debug, PartialEq)]
pub struct Image<T> {
    pub width: u32,
    pub height: u32,
    pub data: Vec<T>,
}

impl<T: Real> Image<T> {
    pub fn new(width: u32, height: u32) -> Self {
        Self::filled(width, height, Vector3::zeros())
    }

    pub fn filled(width: u32, height: u32, color: Vector3<T>) -> Self {
        let n = width as usize * height as usize;
        let mut data = Vec::with_capacity(n * 3);
        for _ in 0..n {
            data.extend_from_slice(&[color.x, color.y, color.z]);
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn from_vec(width: u32, height: u32, data: Vec<T>) -> Result<Self> {
        if data.len() != width as usize * height as usize * 3 {
            return Err(Error::InvalidArgument(format!(
                "image buffer holds {} values, expected {}",
                data.len(),
                width as usize * height as usize * 3
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    #[inline]
    pub fn num_pixels(&self) -> usize {
        self.width as usize * self.height as usize
    }

    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> Vector3<T> {
        let i = 3 * (y as usize * self.width as usize + x as usize);
        Vector3::new(self.data[i], self.data[i + 1], self.data[i + 2])
    }

    #[inline]
    pub fn set_pixel(&mut self, x: u32, y: u32, c: Vector3<T>) {
        let i = 3 * (y as usize * self.width as usize + x as usize);
        self.data[i] = c.x;
        self.data[i + 1] = c.y;
        self.data[i + 2] = c.z;
    }

    pub fn same_size<U>(&self, other: &Image<U>) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::ResolutionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> Image<U> {
        Image {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }

    /// Box-filter downsample to `width`×`height`. Each destination pixel
    /// averages the source pixels whose centers fall inside its footprint.
    pub fn downsample(&self, width: u32, height: u32) -> Image<T> {
        if width == self.width && height == self.height {
            return self.clone();
        }
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        let mut out = Image::new(width, height);
        for y in 0..height {
            let y0 = ((y as f64 * sy).floor() as u32).min(self.height - 1);
            let y1 = (((y + 1) as f64 * sy).ceil() as u32).clamp(y0 + 1, self.height);
            for x in 0..width {
                let x0 = ((x as f64 * sx).floor() as u32).min(self.width - 1);
                let x1 = (((x + 1) as f64 * sx).ceil() as u32).clamp(x0 + 1, self.width);
                let mut acc = Vector3::zeros();
                for yy in y0..y1 {
                    for xx in x0..x1 {
                        acc += self.pixel(xx, yy);
                    }
                }
                let n = T::lit(((y1 - y0) * (x1 - x0)) as f64);
                out.set_pixel(x, y, acc / n);
            }
        }
        out
    }
}
