//! Per-pixel blend-weight rule shared by the forward and backward passes.

use crate::gaussian::ProjectedSplat;
use crate::real::Real;
use nalgebra::Vector2;

/// Blend weights below this are skipped entirely.
pub const ALPHA_MIN: f64 = 1.0 / 255.0;
/// Upper clamp on a single splat's blend weight.
pub const ALPHA_MAX: f64 = 0.99;
/// Blending stops before transmittance would drop below this
/// (accumulated opacity above 0.9999).
pub const TRANSMITTANCE_MIN: f64 = 1e-4;

/// Blend weight of one splat at one pixel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Weight<T> {
    /// Clamped weight actually blended.
    pub alpha: T,
    /// Gaussian falloff value at the pixel center.
    pub falloff: T,
    /// Whether the 0.99 upper clamp was active.
    pub clamped: bool,
}

/// Center of pixel `(x, y)`.
#[inline(always)]
pub fn pixel_center<T: Real>(x: u32, y: u32) -> Vector2<T> {
    Vector2::new(T::lit(x as f64 + 0.5), T::lit(y as f64 + 0.5))
}

/// Weight of `splat` at pixel `(x, y)`, or `None` if the pixel is outside
/// its footprint or the weight falls below [`ALPHA_MIN`].
#[inline(always)]
pub fn splat_weight<T: Real>(splat: &ProjectedSplat<T>, x: u32, y: u32) -> Option<Weight<T>> {
    if !splat.rect.contains(x, y) {
        return None;
    }
    let center = pixel_center::<T>(x, y);
    let (dx, dy) = (center.x - splat.mean2d.x, center.y - splat.mean2d.y);
    let [a, b, c] = splat.conic;
    let power = -T::lit(0.5) * (a * dx * dx + c * dy * dy) - b * dx * dy;
    if power < splat.min_power {
        return None;
    }
    let falloff = if power > T::zero() {
        T::zero()
    } else {
        power.exp()
    };
    let raw = splat.alpha * falloff;
    let max = T::lit(ALPHA_MAX);
    let (alpha, clamped) = if raw > max { (max, true) } else { (raw, false) };
    if alpha < T::lit(ALPHA_MIN) {
        return None;
    }
    Some(Weight {
        alpha,
        falloff,
        clamped,
    })
}
