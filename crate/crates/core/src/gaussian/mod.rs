//! The anisotropic Gaussian primitive, its covariance factorization, the
//! pinhole camera and world→screen projection, and SH color evaluation.

mod camera;
mod project;
pub mod sh;

pub use camera::Camera;
pub use project::{
    eval_gaussian_2d, project, projection_jacobian, PixelRect, ProjectedSplat, GUARD_BAND,
    LOW_PASS_FLOOR,
};
pub use sh::{evaluate_sh, sh_basis, sh_basis_with_grad, SH_C0};

use crate::error::{Error, Result};
use crate::real::{sigmoid, Real};
use nalgebra::{Matrix3, Vector3, Vector4};

/// Highest supported SH degree.
pub const MAX_SH_DEGREE: usize = 3;
/// Coefficients per color channel at degree 3.
pub const SH_COEFFS: usize = (MAX_SH_DEGREE + 1) * (MAX_SH_DEGREE + 1);
/// Number of scalar parameters per Gaussian in flattened form.
pub const NUM_PARAMS: usize = 3 + 4 + 3 + 1 + 3 * SH_COEFFS;

/// Offsets of each parameter group inside the flattened parameter vector.
pub mod layout {
    pub const MEAN: usize = 0;
    pub const ROTATION: usize = 3;
    pub const LOG_SCALE: usize = 7;
    pub const OPACITY: usize = 10;
    /// SH coefficient `k`, channel `c` lives at `SH + 3 * k + c`.
    pub const SH: usize = 11;
}

/// One splat primitive in its unconstrained (optimizable) parameterization.
#[derive(Clone, Debug, PartialEq)]
pub struct Gaussian<T: Real> {
    pub mean: Vector3<T>,
    /// Quaternion stored as (r, i, j, k); normalized before use.
    pub rotation: Vector4<T>,
    /// Log of the per-axis standard deviation.
    pub log_scale: Vector3<T>,
    pub opacity_logit: T,
    /// RGB coefficient per SH basis function, degree-ordered.
    pub sh: [Vector3<T>; SH_COEFFS],
}

impl<T: Real> Gaussian<T> {
    /// Isotropic, axis-aligned Gaussian with the given view-independent color
    /// coefficient.
    pub fn isotropic(mean: Vector3<T>, log_scale: T, opacity_logit: T, dc: Vector3<T>) -> Self {
        let mut sh = [Vector3::zeros(); SH_COEFFS];
        sh[0] = dc;
        Self {
            mean,
            rotation: Vector4::new(T::one(), T::zero(), T::zero(), T::zero()),
            log_scale: Vector3::repeat(log_scale),
            opacity_logit,
            sh,
        }
    }

    #[inline]
    pub fn scale(&self) -> Vector3<T> {
        self.log_scale.map(|s| s.exp())
    }

    #[inline]
    pub fn opacity(&self) -> T {
        sigmoid(self.opacity_logit)
    }

    pub fn covariance(&self) -> Result<Matrix3<T>> {
        assemble_covariance(&self.rotation, &self.log_scale)
    }

    pub fn to_params(&self) -> [T; NUM_PARAMS] {
        let mut p = [T::zero(); NUM_PARAMS];
        p[layout::MEAN..layout::MEAN + 3].copy_from_slice(self.mean.as_slice());
        p[layout::ROTATION..layout::ROTATION + 4].copy_from_slice(self.rotation.as_slice());
        p[layout::LOG_SCALE..layout::LOG_SCALE + 3].copy_from_slice(self.log_scale.as_slice());
        p[layout::OPACITY] = self.opacity_logit;
        for (k, c) in self.sh.iter().enumerate() {
            p[layout::SH + 3 * k..layout::SH + 3 * k + 3].copy_from_slice(c.as_slice());
        }
        p
    }

    pub fn from_params(p: &[T; NUM_PARAMS]) -> Self {
        let v3 = |o: usize| Vector3::new(p[o], p[o + 1], p[o + 2]);
        let mut sh = [Vector3::zeros(); SH_COEFFS];
        for (k, c) in sh.iter_mut().enumerate() {
            *c = v3(layout::SH + 3 * k);
        }
        Self {
            mean: v3(layout::MEAN),
            rotation: Vector4::new(
                p[layout::ROTATION],
                p[layout::ROTATION + 1],
                p[layout::ROTATION + 2],
                p[layout::ROTATION + 3],
            ),
            log_scale: v3(layout::LOG_SCALE),
            opacity_logit: p[layout::OPACITY],
            sh,
        }
    }

    pub fn cast<U: Real>(&self) -> Gaussian<U> {
        let c = |v: T| U::lit(v.as_f64());
        Gaussian {
            mean: self.mean.map(c),
            rotation: self.rotation.map(c),
            log_scale: self.log_scale.map(c),
            opacity_logit: c(self.opacity_logit),
            sh: self.sh.map(|v| v.map(c)),
        }
    }
}

/// Normalizes a quaternion, rejecting zero (and non-finite) input.
pub fn normalize_quaternion<T: Real>(q: &Vector4<T>) -> Result<Vector4<T>> {
    let n = q.norm();
    if !(n > T::zero()) || !n.is_finite() {
        return Err(Error::InvalidPrimitive(format!(
            "rotation quaternion has norm {n}"
        )));
    }
    Ok(q / n)
}

/// Rotation matrix of a unit quaternion (r, i, j, k).
pub fn unit_quaternion_to_matrix<T: Real>(q: &Vector4<T>) -> Matrix3<T> {
    let (r, x, y, z) = (q[0], q[1], q[2], q[3]);
    let one = T::one();
    let two = T::lit(2.0);
    Matrix3::new(
        one - two * (y * y + z * z),
        two * (x * y - r * z),
        two * (x * z + r * y),
        two * (x * y + r * z),
        one - two * (x * x + z * z),
        two * (y * z - r * x),
        two * (x * z - r * y),
        two * (y * z + r * x),
        one - two * (x * x + y * y),
    )
}

pub fn rotation_matrix<T: Real>(q: &Vector4<T>) -> Result<Matrix3<T>> {
    Ok(unit_quaternion_to_matrix(&normalize_quaternion(q)?))
}

/// Σ = R S Sᵀ Rᵀ with R from the normalized quaternion and S = diag(exp(log_scale)).
pub fn assemble_covariance<T: Real>(
    rotation: &Vector4<T>,
    log_scale: &Vector3<T>,
) -> Result<Matrix3<T>> {
    let r = rotation_matrix(rotation)?;
    let m = r * Matrix3::from_diagonal(&log_scale.map(|s| s.exp()));
    Ok(m * m.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;

    macro_rules! assert_mat_eq {
        ($a:expr, $b:expr, $tol:expr) => {{
            let (a, b) = (&$a, &$b);
            assert!((a - b).amax() <= $tol, "{a} != {b}");
        }};
    }

    #[test]
    fn identity_covariance() {
        let q = Vector4::new(1.0, 0.0, 0.0, 0.0);
        let c = assemble_covariance(&q, &Vector3::zeros()).unwrap();
        assert_mat_eq!(c, Matrix3::<f64>::identity(), 1e-15);
    }

    #[test]
    fn axis_scaling_squares_into_variance() {
        let q = Vector4::new(1.0, 0.0, 0.0, 0.0);
        let c = assemble_covariance(&q, &Vector3::new(2f64.ln(), 0.0, 0.0)).unwrap();
        assert_mat_eq!(
            c,
            Matrix3::from_diagonal(&Vector3::new(4.0, 1.0, 1.0)),
            1e-14
        );
    }

    #[test]
    fn quarter_turn_about_z_swaps_axes() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let q = Vector4::new(h, 0.0, 0.0, h);
        let c = assemble_covariance(&q, &Vector3::new(2f64.ln(), 0.0, 0.0)).unwrap();
        assert_mat_eq!(
            c,
            Matrix3::from_diagonal(&Vector3::new(1.0, 4.0, 1.0)),
            1e-14
        );
    }

    #[test]
    fn zero_quaternion_is_rejected() {
        let err = assemble_covariance(&Vector4::<f64>::zeros(), &Vector3::zeros());
        assert!(matches!(err, Err(Error::InvalidPrimitive(_))));
    }

    #[test]
    fn params_round_trip() {
        let mut g = Gaussian::isotropic(
            Vector3::new(1.0, 2.0, 3.0),
            -1.0,
            0.5,
            Vector3::new(0.1, 0.2, 0.3),
        );
        g.sh[7] = Vector3::new(4.0, 5.0, 6.0);
        g.rotation = Vector4::new(0.1, 0.2, 0.3, 0.4);
        assert_eq!(Gaussian::from_params(&g.to_params()), g);
        assert_eq!(g.to_params()[layout::SH + 3 * 7 + 1], 5.0);
    }
}
