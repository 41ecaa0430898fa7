use super::covariance::{
    backward_conic_to_cov2d, backward_conic_to_cov3d, backward_cov3d_to_scale_rotation,
};
use super::{GaussianGrads, SplatGrads};
use crate::gaussian::sh::{num_coeffs, sh_basis_with_grad, COLOR_OFFSET};
use crate::gaussian::{assemble_covariance, projection_jacobian, Camera, Gaussian, ProjectedSplat};
use crate::real::Real;
use nalgebra::Vector3;

/// Chains one splat's screen-space gradients back to its Gaussian's
/// parameters, including the dependence of the projection Jacobian on the
/// view-space mean and of the SH viewing direction on the mean.
pub fn backward_projection<T: Real>(
    g: &Gaussian<T>,
    cam: &Camera<T>,
    sh_degree: usize,
    splat: &ProjectedSplat<T>,
    sg: &SplatGrads<T>,
) -> GaussianGrads<T> {
    let mut out = GaussianGrads::zero();
    let half = T::lit(0.5);
    out.view_pos_grad_norm = nalgebra::Vector2::new(
        sg.d_mean2d.x * half * T::lit(cam.width as f64),
        sg.d_mean2d.y * half * T::lit(cam.height as f64),
    )
    .norm();

    let alpha = splat.alpha;
    out.d_opacity_logit = sg.d_alpha * alpha * (T::one() - alpha);

    // Color: clamped SH expansion along the camera→mean direction.
    let offset = g.mean - cam.center();
    let dist = offset.norm();
    let dir = offset / dist;
    let (basis, basis_grad) = sh_basis_with_grad(&dir, sh_degree);
    let used = num_coeffs(sh_degree.min(3));
    let mut raw = Vector3::repeat(T::lit(COLOR_OFFSET));
    for (c, b) in g.sh.iter().zip(&basis).take(used) {
        raw += c * *b;
    }
    let d_rgb = Vector3::from_fn(|c, _| {
        if raw[c] < T::zero() {
            T::zero()
        } else {
            sg.d_color[c]
        }
    });
    let mut d_dir = Vector3::zeros();
    for k in 0..used {
        out.d_sh[k] = d_rgb * basis[k];
        d_dir += basis_grad[k] * g.sh[k].dot(&d_rgb);
    }
    out.d_mean += (d_dir - dir * dir.dot(&d_dir)) / dist;

    // Covariance: conic → Σ′ → Σ → (scale, rotation).
    let view = cam.to_view(&g.mean);
    let j = projection_jacobian(&view, &cam.focal);
    let u = j * cam.rotation;
    let d_cov2d = backward_conic_to_cov2d(&splat.conic, &sg.d_conic);
    let d_cov3d = backward_conic_to_cov3d(&d_cov2d, &u);
    let (d_log_scale, d_rotation) =
        backward_cov3d_to_scale_rotation(&d_cov3d, &g.rotation, &g.log_scale);
    out.d_log_scale = d_log_scale;
    out.d_rotation = d_rotation;

    // Mean: through the 2D mean and through J(view).
    let cov3d = assemble_covariance(&g.rotation, &g.log_scale)
        .unwrap_or_else(|_| nalgebra::Matrix3::zeros());
    let two = T::lit(2.0);
    let d_u = d_cov2d * u * cov3d * two;
    let d_j = d_u * cam.rotation.transpose();
    let (fx, fy) = (cam.focal.x, cam.focal.y);
    let inv_z = T::one() / view.z;
    let inv_z2 = inv_z * inv_z;
    let inv_z3 = inv_z2 * inv_z;
    let (dmx, dmy) = (sg.d_mean2d.x, sg.d_mean2d.y);
    let d_view = Vector3::new(
        fx * inv_z * dmx - fx * inv_z2 * d_j[(0, 2)],
        fy * inv_z * dmy - fy * inv_z2 * d_j[(1, 2)],
        -fx * view.x * inv_z2 * dmx
            - fy * view.y * inv_z2 * dmy
            - fx * inv_z2 * d_j[(0, 0)]
            - fy * inv_z2 * d_j[(1, 1)]
            + two * fx * view.x * inv_z3 * d_j[(0, 2)]
            + two * fy * view.y * inv_z3 * d_j[(1, 2)],
    );
    out.d_mean += cam.rotation.transpose() * d_view;
    out
}
