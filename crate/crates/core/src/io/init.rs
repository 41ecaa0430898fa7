//! Initial Gaussian sets: one per SfM point, or uniformly random in a box.

use super::knn::mean_knn_distance;
use crate::gaussian::sh::dc_from_color;
use crate::gaussian::{Camera, Gaussian};
use crate::real::{logit, Real};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const INITIAL_OPACITY: f64 = 0.1;
/// Neighbors averaged for the initial scale.
pub const SCALE_NEIGHBORS: usize = 3;
/// Floor on the initial scale so coincident points stay finite.
pub const MIN_INITIAL_SCALE: f64 = 1e-7;
/// Fewer points than this and the SfM cloud is ignored.
pub const MIN_SFM_POINTS: usize = 4;

/// Isotropic Gaussians at `points`, sized by the mean distance to their
/// three nearest neighbors. `fallback_scale` is used for a lone point.
pub fn gaussians_at<T: Real>(
    points: &[Vector3<f64>],
    colors: &[Vector3<f64>],
    fallback_scale: f64,
) -> Vec<Gaussian<T>> {
    let dists = mean_knn_distance(points, SCALE_NEIGHBORS);
    let opacity = T::lit(logit(INITIAL_OPACITY));
    points
        .iter()
        .zip(colors)
        .zip(dists)
        .map(|((p, c), d)| {
            let scale = d.unwrap_or(fallback_scale).max(MIN_INITIAL_SCALE);
            Gaussian::isotropic(
                p.map(T::lit),
                T::lit(scale.ln()),
                opacity,
                dc_from_color(&c.map(T::lit)),
            )
        })
        .collect()
}

/// Axis-aligned box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Bounds {
    pub fn around(points: impl IntoIterator<Item = Vector3<f64>>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let (min, max) = it.fold((first, first), |(lo, hi), p| (lo.inf(&p), hi.sup(&p)));
        Some(Self { min, max })
    }

    /// Same center, every side `factor` times as long.
    pub fn scaled(&self, factor: f64) -> Self {
        let c = (self.min + self.max) * 0.5;
        let h = (self.max - self.min) * (0.5 * factor);
        Self {
            min: c - h,
            max: c + h,
        }
    }

    /// Cube centered on the box whose side is `factor` times the longest side.
    pub fn cube(&self, factor: f64) -> Self {
        let c = (self.min + self.max) * 0.5;
        let h = Vector3::repeat((self.max - self.min).max() * 0.5 * factor);
        Self {
            min: c - h,
            max: c + h,
        }
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }
}

/// The box random initialization samples when no explicit bounds are given:
/// a cube three times the size of the camera centers' bounding box.
pub fn camera_cube<T: Real>(cameras: &[Camera<T>]) -> Option<Bounds> {
    Bounds::around(cameras.iter().map(|c| c.center().map(|v| v.as_f64()))).map(|b| b.cube(3.0))
}

/// `count` Gaussians uniform in `bounds` with random colors, sized by the
/// nearest-neighbor rule over the samples.
pub fn init_random<T: Real>(bounds: &Bounds, count: usize, seed: u64) -> Vec<Gaussian<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vector3<f64>> = (0..count)
        .map(|_| Vector3::from_fn(|a, _| sample_axis(&mut rng, bounds.min[a], bounds.max[a])))
        .collect();
    let colors: Vec<Vector3<f64>> = (0..count)
        .map(|_| Vector3::from_fn(|_, _| rng.random::<f64>()))
        .collect();
    let fallback = (bounds.max - bounds.min).max() * 0.1;
    gaussians_at(&points, &colors, fallback)
}

fn sample_axis<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}
