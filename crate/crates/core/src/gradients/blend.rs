use super::SplatGrads;
use crate::gaussian::ProjectedSplat;
use crate::raster::blend::{pixel_center, splat_weight};
use crate::real::Real;
use nalgebra::{Vector2, Vector3};

/// Back-to-front gradient of one pixel's blended color.
///
/// `ids` is the pixel's tile range truncated after its last contributor.
/// Intermediate transmittances are recovered from `final_transmittance` by
/// dividing out each blended splat's `(1 - a)`. Splats the forward pass
/// skipped (outside the footprint or below the weight threshold) are skipped
/// identically here.
pub fn backward_blend<T: Real>(
    pixel: (u32, u32),
    d_pixel: &Vector3<T>,
    final_transmittance: T,
    ids: &[u32],
    splats: &[ProjectedSplat<T>],
    background: &Vector3<T>,
    grads: &mut [SplatGrads<T>],
) {
    let (x, y) = pixel;
    let center: Vector2<T> = pixel_center(x, y);
    let mut transmittance = final_transmittance;
    // Color contributed by everything behind the current splat, background included.
    let mut behind = background * final_transmittance;
    let mut behind_dot = behind.dot(d_pixel);
    for &id in ids.iter().rev() {
        let s = &splats[id as usize];
        let Some(w) = splat_weight(s, x, y) else {
            continue;
        };
        let one_minus = T::one() - w.alpha;
        transmittance /= one_minus;
        let g = &mut grads[id as usize];
        let blend = w.alpha * transmittance;
        g.d_color += d_pixel * blend;

        let d_weight = transmittance * s.color.dot(d_pixel) - behind_dot / one_minus;
        behind += s.color * blend;
        behind_dot = behind.dot(d_pixel);

        if w.clamped {
            continue;
        }
        g.d_alpha += w.falloff * d_weight;
        let d_falloff = s.alpha * d_weight;
        let d_power = d_falloff * w.falloff;
        let dx = center.x - s.mean2d.x;
        let dy = center.y - s.mean2d.y;
        let [a, b, c] = s.conic;
        g.d_mean2d += Vector2::new(a * dx + b * dy, b * dx + c * dy) * d_power;
        let half = T::lit(0.5);
        g.d_conic[0] -= half * dx * dx * d_power;
        g.d_conic[1] -= dx * dy * d_power;
        g.d_conic[2] -= half * dy * dy * d_power;
    }
}
