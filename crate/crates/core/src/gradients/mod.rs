//! Hand-derived backward pass: pixel gradients → blend → conic → screen
//! covariance → 3D covariance → scale/rotation, plus mean, opacity and SH.

mod blend;
mod covariance;
mod projection;

pub use blend::backward_blend;
pub use covariance::{
    backward_conic_to_cov2d, backward_conic_to_cov3d, backward_cov3d_to_scale_rotation,
};
pub use projection::backward_projection;

use crate::gaussian::{layout, NUM_PARAMS, SH_COEFFS};
use crate::real::Real;
use nalgebra::{Vector2, Vector3, Vector4};
use std::ops::{AddAssign, Mul};

/// Gradients w.r.t. one projected splat's screen-space quantities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplatGrads<T: Real> {
    pub d_mean2d: Vector2<T>,
    /// Gradient w.r.t. the conic's upper-triangle entries (a, b, c).
    pub d_conic: [T; 3],
    pub d_color: Vector3<T>,
    pub d_alpha: T,
}

impl<T: Real> SplatGrads<T> {
    pub fn zero() -> Self {
        Self {
            d_mean2d: Vector2::zeros(),
            d_conic: [T::zero(); 3],
            d_color: Vector3::zeros(),
            d_alpha: T::zero(),
        }
    }
}

impl<T: Real> AddAssign for SplatGrads<T> {
    fn add_assign(&mut self, o: Self) {
        self.d_mean2d += o.d_mean2d;
        for (a, b) in self.d_conic.iter_mut().zip(o.d_conic) {
            *a += b;
        }
        self.d_color += o.d_color;
        self.d_alpha += o.d_alpha;
    }
}

/// Gradients w.r.t. one Gaussian's unconstrained parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianGrads<T: Real> {
    pub d_mean: Vector3<T>,
    pub d_rotation: Vector4<T>,
    pub d_log_scale: Vector3<T>,
    pub d_opacity_logit: T,
    pub d_sh: [Vector3<T>; SH_COEFFS],
    /// ‖∂L/∂mean2d‖ for the view that produced these gradients, with the
    /// screen position measured in normalized device coordinates ([-1, 1]).
    pub view_pos_grad_norm: T,
}

impl<T: Real> GaussianGrads<T> {
    pub fn zero() -> Self {
        Self {
            d_mean: Vector3::zeros(),
            d_rotation: Vector4::zeros(),
            d_log_scale: Vector3::zeros(),
            d_opacity_logit: T::zero(),
            d_sh: [Vector3::zeros(); SH_COEFFS],
            view_pos_grad_norm: T::zero(),
        }
    }

    /// Flattened in the same order as [`crate::gaussian::Gaussian::to_params`].
    pub fn to_params(&self) -> [T; NUM_PARAMS] {
        let mut p = [T::zero(); NUM_PARAMS];
        p[layout::MEAN..layout::MEAN + 3].copy_from_slice(self.d_mean.as_slice());
        p[layout::ROTATION..layout::ROTATION + 4].copy_from_slice(self.d_rotation.as_slice());
        p[layout::LOG_SCALE..layout::LOG_SCALE + 3].copy_from_slice(self.d_log_scale.as_slice());
        p[layout::OPACITY] = self.d_opacity_logit;
        for (k, c) in self.d_sh.iter().enumerate() {
            p[layout::SH + 3 * k..layout::SH + 3 * k + 3].copy_from_slice(c.as_slice());
        }
        p
    }

    pub fn is_finite(&self) -> bool {
        self.to_params().iter().all(|v| v.is_finite()) && self.view_pos_grad_norm.is_finite()
    }
}

impl<T: Real> AddAssign<&GaussianGrads<T>> for GaussianGrads<T> {
    fn add_assign(&mut self, o: &GaussianGrads<T>) {
        self.d_mean += o.d_mean;
        self.d_rotation += o.d_rotation;
        self.d_log_scale += o.d_log_scale;
        self.d_opacity_logit += o.d_opacity_logit;
        for (a, b) in self.d_sh.iter_mut().zip(o.d_sh.iter()) {
            *a += b;
        }
        self.view_pos_grad_norm += o.view_pos_grad_norm;
    }
}

impl<T: Real> Mul<T> for GaussianGrads<T> {
    type Output = Self;
    fn mul(mut self, s: T) -> Self {
        self.d_mean *= s;
        self.d_rotation *= s;
        self.d_log_scale *= s;
        self.d_opacity_logit *= s;
        for c in self.d_sh.iter_mut() {
            *c *= s;
        }
        self.view_pos_grad_norm *= s;
        self
    }
}
