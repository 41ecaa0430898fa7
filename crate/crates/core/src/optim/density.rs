//! Adaptive density control: clone, split, prune and opacity reset.

use super::adam::Moments;
use super::config::TrainConfig;
use crate::gaussian::{rotation_matrix, Gaussian};
use crate::real::{logit, Real};
use nalgebra::Vector3;
use rand::Rng;
use rand_distr::StandardNormal;

/// Per-Gaussian statistics gathered between densification steps.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DensityStats {
    /// Sum of view-space positional gradient norms.
    pub grad_accum: Vec<f64>,
    /// Number of views in which the Gaussian was rendered.
    pub grad_count: Vec<u32>,
    /// Largest footprint radius seen, as a fraction of the image height.
    pub max_radius: Vec<f64>,
}

impl DensityStats {
    pub fn new(n: usize) -> Self {
        Self {
            grad_accum: vec![0.0; n],
            grad_count: vec![0; n],
            max_radius: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.grad_accum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grad_accum.is_empty()
    }

    pub fn observe(&mut self, i: usize, grad_norm: f64, radius_fraction: f64) {
        self.grad_accum[i] += grad_norm;
        self.grad_count[i] += 1;
        self.max_radius[i] = self.max_radius[i].max(radius_fraction);
    }

    pub fn mean_grad(&self, i: usize) -> f64 {
        match self.grad_count[i] {
            0 => 0.0,
            c => self.grad_accum[i] / c as f64,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DensifyReport {
    pub cloned: usize,
    pub split: usize,
    pub pruned: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Action {
    Keep,
    Clone,
    Split,
    Prune,
}

/// Clones, splits and prunes in one pass. Size-based pruning only runs when
/// `prune_large` is set (after the first opacity reset). Gaussians marked for pruning are
/// not densified, and Gaussians created here are not pruned in the same call.
/// Moments of new Gaussians start at zero; `stats` is reset to the new size.
pub fn densify_and_prune<T: Real, R: Rng>(
    gaussians: &mut Vec<Gaussian<T>>,
    moments: &mut Vec<Moments<T>>,
    stats: &mut DensityStats,
    config: &TrainConfig,
    scene_extent: f64,
    prune_large: bool,
    rng: &mut R,
) -> DensifyReport {
    assert_eq!(gaussians.len(), moments.len());
    assert_eq!(gaussians.len(), stats.len());
    let split_threshold = config.split_scale_fraction * scene_extent;
    let world_limit = config.prune_world_fraction * scene_extent;

    let actions: Vec<Action> = gaussians
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let max_scale = g.log_scale.max().as_f64().exp();
            let too_big = prune_large
                && (max_scale > world_limit || stats.max_radius[i] > config.prune_screen_fraction);
            if g.opacity().as_f64() < config.prune_alpha || too_big {
                Action::Prune
            } else if stats.mean_grad(i) > config.densify_grad_threshold {
                if max_scale > split_threshold {
                    Action::Split
                } else {
                    Action::Clone
                }
            } else {
                Action::Keep
            }
        })
        .collect();

    let mut report = DensifyReport::default();
    let old_g = std::mem::take(gaussians);
    let old_m = std::mem::take(moments);
    let mut added = Vec::new();
    for ((g, m), action) in old_g.into_iter().zip(old_m).zip(actions) {
        match action {
            Action::Keep => {
                gaussians.push(g);
                moments.push(m);
            }
            Action::Prune => report.pruned += 1,
            Action::Clone => {
                added.push(g.clone());
                gaussians.push(g);
                moments.push(m);
                report.cloned += 1;
            }
            Action::Split => {
                added.extend(split(&g, config.split_factor, rng));
                report.split += 1;
            }
        }
    }
    moments.extend(std::iter::repeat_n(Moments::zero(), added.len()));
    gaussians.extend(added);
    *stats = DensityStats::new(gaussians.len());
    report
}

/// Two children drawn from the parent's density, each with the parent's
/// scale divided by `factor`.
pub fn split<T: Real, R: Rng>(parent: &Gaussian<T>, factor: f64, rng: &mut R) -> [Gaussian<T>; 2] {
    let rot = rotation_matrix(&parent.rotation).unwrap_or_else(|_| nalgebra::Matrix3::identity());
    let scale = parent.scale();
    let shrink = T::lit(factor.ln());
    std::array::from_fn(|_| {
        let z = Vector3::from_fn(|i, _| T::lit(rng.sample::<f64, _>(StandardNormal)) * scale[i]);
        let mut child = parent.clone();
        child.mean += rot * z;
        child.log_scale = parent.log_scale.map(|s| s - shrink);
        child
    })
}

/// Sets every opacity to `value` and clears the opacity moments.
pub fn reset_opacity<T: Real>(
    gaussians: &mut [Gaussian<T>],
    moments: &mut [Moments<T>],
    value: f64,
) {
    let target = T::lit(logit(value));
    for (g, m) in gaussians.iter_mut().zip(moments.iter_mut()) {
        g.opacity_logit = target;
        m.m[crate::gaussian::layout::OPACITY] = T::zero();
        m.v[crate::gaussian::layout::OPACITY] = T::zero();
    }
}
