use super::sh::evaluate_sh;
use super::{assemble_covariance, Camera, Gaussian};
use crate::real::Real;
use nalgebra::{Matrix2, Matrix2x3, Vector2, Vector3};

/// Variance (px²) added to both diagonal entries of every screen covariance.
pub const LOW_PASS_FLOOR: f64 = 0.3;
/// Means whose normalized device coordinates exceed this factor of the image
/// half-extent are rejected.
pub const GUARD_BAND: f64 = 1.3;

/// Inclusive range of pixel indices whose centers lie inside a splat's
/// `radius` box.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PixelRect {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl PixelRect {
    /// Pixels `(x, y)` with `|x + ½ - cx| ≤ r` and `|y + ½ - cy| ≤ r`,
    /// clipped to the image. `None` if no pixel qualifies.
    pub fn around<T: Real>(
        center: &Vector2<T>,
        radius: u32,
        width: u32,
        height: u32,
    ) -> Option<Self> {
        let r = radius as f64;
        let (cx, cy) = (center.x.as_f64(), center.y.as_f64());
        let x0 = (cx - r - 0.5).ceil().max(0.0);
        let y0 = (cy - r - 0.5).ceil().max(0.0);
        let x1 = (cx + r - 0.5).floor().min(width as f64 - 1.0);
        let y1 = (cy + r - 0.5).floor().min(height as f64 - 1.0);
        if x0 > x1 || y0 > y1 {
            return None;
        }
        Some(Self {
            x0: x0 as u32,
            y0: y0 as u32,
            x1: x1 as u32,
            y1: y1 as u32,
        })
    }

    #[inline(always)]
    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }
}

/// A Gaussian after projection into one camera.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectedSplat<T: Real> {
    /// Pixel-space mean; pixel `(x, y)` has its center at `(x + ½, y + ½)`.
    pub mean2d: Vector2<T>,
    /// Upper triangle (a, b, c) of the inverse screen covariance [[a, b], [b, c]].
    pub conic: [T; 3],
    /// Floored screen covariance (upper triangle) the conic was inverted from.
    pub cov2d: [T; 3],
    /// View-space z.
    pub depth: T,
    /// 3σ extent of the dominant axis, rounded up to whole pixels.
    pub radius: u32,
    /// Pixels this splat may contribute to.
    pub rect: PixelRect,
    pub color: Vector3<T>,
    pub alpha: T,
    /// Exponents below this put the blend weight under the skip threshold
    /// (with a safety margin), so the falloff need not be evaluated.
    pub min_power: T,
}

/// Jacobian of the pinhole projection at view-space point `v`.
#[inline]
pub fn projection_jacobian<T: Real>(v: &Vector3<T>, focal: &Vector2<T>) -> Matrix2x3<T> {
    let inv_z = T::one() / v.z;
    let inv_z2 = inv_z * inv_z;
    Matrix2x3::new(
        focal.x * inv_z,
        T::zero(),
        -focal.x * v.x * inv_z2,
        T::zero(),
        focal.y * inv_z,
        -focal.y * v.y * inv_z2,
    )
}

/// Projects one Gaussian. Returns `None` when it is culled: behind the near
/// plane, outside the guard band, with an invalid rotation, with a degenerate
/// screen covariance, or with a footprint that misses every pixel.
pub fn project<T: Real>(
    g: &Gaussian<T>,
    cam: &Camera<T>,
    sh_degree: usize,
) -> Option<ProjectedSplat<T>> {
    let view = cam.to_view(&g.mean);
    if !(view.z >= cam.near) {
        return None;
    }
    let mean2d = Vector2::new(
        cam.focal.x * view.x / view.z + cam.principal_point.x,
        cam.focal.y * view.y / view.z + cam.principal_point.y,
    );
    let (hw, hh) = (
        T::lit(cam.width as f64 * 0.5),
        T::lit(cam.height as f64 * 0.5),
    );
    let band = T::lit(GUARD_BAND);
    if !(crate::real::abs(mean2d.x - hw) <= band * hw
        && crate::real::abs(mean2d.y - hh) <= band * hh)
    {
        return None;
    }

    let cov3d = assemble_covariance(&g.rotation, &g.log_scale).ok()?;
    let u = projection_jacobian(&view, &cam.focal) * cam.rotation;
    let full: Matrix2<T> = u * cov3d * u.transpose();
    let floor = T::lit(LOW_PASS_FLOOR);
    let (a, b, c) = (full[(0, 0)] + floor, full[(0, 1)], full[(1, 1)] + floor);
    let det = a * c - b * b;
    if !(det > T::zero()) {
        return None;
    }
    let inv_det = T::one() / det;
    let conic = [c * inv_det, -b * inv_det, a * inv_det];

    let half = T::lit(0.5);
    let mid = half * (a + c);
    let spread = (half * (a - c) * half * (a - c) + b * b).sqrt();
    let lambda_max = mid + spread;
    let radius = (3.0 * lambda_max.as_f64().sqrt()).ceil();
    if !radius.is_finite() || radius > u32::MAX as f64 {
        return None;
    }
    let radius = radius as u32;
    let rect = PixelRect::around(&mean2d, radius, cam.width, cam.height)?;

    let dir = (g.mean - cam.center()).normalize();
    Some(ProjectedSplat {
        mean2d,
        conic,
        cov2d: [a, b, c],
        depth: view.z,
        radius,
        rect,
        color: evaluate_sh(&g.sh, sh_degree, &dir),
        alpha: g.opacity(),
        min_power: skip_power(g.opacity()),
    })
}

/// Largest exponent `p` for which `alpha·exp(p)` is certainly below the
/// blend-weight threshold, less a margin far wider than rounding error.
pub fn skip_power<T: Real>(alpha: T) -> T {
    let p = (crate::raster::ALPHA_MIN / alpha.as_f64()).ln() - 1e-3;
    if p.is_nan() {
        T::lit(f64::NEG_INFINITY)
    } else {
        T::lit(p)
    }
}

/// exp(-½ dᵀ A d) with d = pixel - mean2d and A the conic. A positive
/// exponent (only possible for an indefinite conic) yields 0.
#[inline]
pub fn eval_gaussian_2d<T: Real>(conic: &[T; 3], mean2d: &Vector2<T>, pixel: &Vector2<T>) -> T {
    let dx = pixel.x - mean2d.x;
    let dy = pixel.y - mean2d.y;
    let power = -T::lit(0.5) * (conic[0] * dx * dx + conic[2] * dy * dy) - conic[1] * dx * dy;
    if power > T::zero() {
        return T::zero();
    }
    power.exp()
}
