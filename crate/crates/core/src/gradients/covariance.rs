use crate::gaussian::normalize_quaternion;
use crate::real::Real;
use nalgebra::{Matrix2, Matrix2x3, Matrix3, Vector3, Vector4};

/// Gradient w.r.t. the screen covariance Σ′ given the gradient w.r.t. its
/// inverse (conic entries a, b, c of [[a, b], [b, c]]). Returned as a
/// symmetric matrix gradient.
pub fn backward_conic_to_cov2d<T: Real>(conic: &[T; 3], d_conic: &[T; 3]) -> Matrix2<T> {
    let inv = Matrix2::new(conic[0], conic[1], conic[1], conic[2]);
    let half = T::lit(0.5);
    let g = Matrix2::new(d_conic[0], half * d_conic[1], half * d_conic[1], d_conic[2]);
    -(inv * g * inv)
}

/// Contracts the symmetric gradient of Σ′ = U Σ Uᵀ (U = J·W) through
/// ∂Σ′/∂Σᵢⱼ, giving the symmetric gradient of Σ.
pub fn backward_conic_to_cov3d<T: Real>(d_cov2d: &Matrix2<T>, u: &Matrix2x3<T>) -> Matrix3<T> {
    u.transpose() * d_cov2d * u
}

/// Gradients of the log-scale and raw (unnormalized) quaternion given the
/// symmetric gradient of Σ = M Mᵀ, M = R S.
///
/// Returns `(d_log_scale, d_rotation)`. A zero quaternion yields zero
/// rotation gradient.
pub fn backward_cov3d_to_scale_rotation<T: Real>(
    d_cov3d: &Matrix3<T>,
    rotation: &Vector4<T>,
    log_scale: &Vector3<T>,
) -> (Vector3<T>, Vector4<T>) {
    let Ok(q) = normalize_quaternion(rotation) else {
        return (Vector3::zeros(), Vector4::zeros());
    };
    let r = crate::gaussian::unit_quaternion_to_matrix(&q);
    let s = log_scale.map(|v| v.exp());
    let m = r * Matrix3::from_diagonal(&s);
    let two = T::lit(2.0);
    // ∂Σ/∂M = 2Mᵀ for symmetric upstream gradients.
    let dm = d_cov3d * m * two;

    // ∂M/∂s_k = R_{i,k} on column k.
    let d_scale = Vector3::from_fn(|k, _| (0..3).map(|i| dm[(i, k)] * r[(i, k)]).sum::<T>());
    let d_log_scale = d_scale.component_mul(&s);

    let (qr, qi, qj, qk) = (q[0], q[1], q[2], q[3]);
    let (sx, sy, sz) = (s.x, s.y, s.z);
    let z = T::zero();
    let contract = |dm_dq: Matrix3<T>| two * dm.component_mul(&dm_dq).sum();
    let d_qr = contract(Matrix3::new(
        z,
        -sy * qk,
        sz * qj,
        sx * qk,
        z,
        -sz * qi,
        -sx * qj,
        sy * qi,
        z,
    ));
    let d_qi = contract(Matrix3::new(
        z,
        sy * qj,
        sz * qk,
        sx * qj,
        -two * sy * qi,
        -sz * qr,
        sx * qk,
        sy * qr,
        -two * sz * qi,
    ));
    let d_qj = contract(Matrix3::new(
        -two * sx * qj,
        sy * qi,
        sz * qr,
        sx * qi,
        z,
        sz * qk,
        -sx * qr,
        sy * qk,
        -two * sz * qj,
    ));
    let d_qk = contract(Matrix3::new(
        -two * sx * qk,
        -sy * qr,
        sz * qi,
        sx * qr,
        -two * sy * qk,
        sz * qj,
        sx * qi,
        sy * qj,
        z,
    ));
    let d_unit = Vector4::new(d_qr, d_qi, d_qj, d_qk);
    // Through q̂ = q / ‖q‖.
    let d_rotation = (d_unit - q * q.dot(&d_unit)) / rotation.norm();
    (d_log_scale, d_rotation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::assemble_covariance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sym3(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
        let a = Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        (a + a.transpose()) * 0.5
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-6)
    }

    #[test]
    fn zero_upstream_gives_zero() {
        let u = Matrix2x3::new(1.0, 2.0, 3.0, 4.0, 5.0, 6.0);
        assert_eq!(
            backward_conic_to_cov3d(&Matrix2::zeros(), &u),
            Matrix3::zeros()
        );
        let (ds, dq) = backward_cov3d_to_scale_rotation(
            &Matrix3::zeros(),
            &Vector4::new(0.3, 0.1, -0.2, 0.5),
            &Vector3::new(0.1, -0.3, 0.2),
        );
        assert_eq!(ds, Vector3::zeros());
        assert_eq!(dq, Vector4::zeros());
    }

    #[test]
    fn axis_aligned_jacobian_projects_identity() {
        let u = Matrix2x3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
        let d = backward_conic_to_cov3d(&Matrix2::identity(), &u);
        assert_eq!(d, Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 0.0)));
    }

    #[test]
    fn identity_pose_scale_gradient() {
        let (ds, _) = backward_cov3d_to_scale_rotation(
            &Matrix3::identity(),
            &Vector4::new(1.0, 0.0, 0.0, 0.0),
            &Vector3::zeros(),
        );
        // d_s = (2, 2, 2) and exp(0) = 1 leaves it unchanged.
        assert_eq!(ds, Vector3::new(2.0, 2.0, 2.0));
    }

    #[test]
    fn cov2d_chain_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let u = Matrix2x3::from_fn(|_, _| rng.random_range(-2.0..2.0));
            let g2 = {
                let a = Matrix2::from_fn(|_, _| rng.random_range(-1.0..1.0));
                (a + a.transpose()) * 0.5
            };
            let sigma = sym3(&mut rng);
            let analytic = backward_conic_to_cov3d(&g2, &u);
            // L(Σ) = <G, U Σ Uᵀ>, perturbing Σ symmetrically.
            let loss = |s: &Matrix3<f64>| g2.component_mul(&(u * s * u.transpose())).sum();
            let h = 1e-5;
            for i in 0..3 {
                for j in 0..3 {
                    let mut e = Matrix3::zeros();
                    e[(i, j)] = h;
                    let fd = (loss(&(sigma + e)) - loss(&(sigma - e))) / (2.0 * h);
                    assert!(
                        rel_close(fd, analytic[(i, j)], 1e-6),
                        "{fd} vs {}",
                        analytic[(i, j)]
                    );
                }
            }
        }
    }

    #[test]
    fn conic_inverse_chain_matches_finite_differences() {
        let cov = [3.0, 0.7, 2.0];
        let inv = |c: &[f64; 3]| {
            let det = c[0] * c[2] - c[1] * c[1];
            [c[2] / det, -c[1] / det, c[0] / det]
        };
        let conic = inv(&cov);
        let d_conic = [0.3, -1.1, 0.8];
        let loss = |c: &[f64; 3]| {
            let k = inv(c);
            k[0] * d_conic[0] + k[1] * d_conic[1] + k[2] * d_conic[2]
        };
        let g = backward_conic_to_cov2d(&conic, &d_conic);
        let h = 1e-6;
        // Unique entries: a, b (appearing twice in the matrix), c.
        let wanted = [g[(0, 0)], 2.0 * g[(0, 1)], g[(1, 1)]];
        for k in 0..3 {
            let (mut p, mut m) = (cov, cov);
            p[k] += h;
            m[k] -= h;
            let fd = (loss(&p) - loss(&m)) / (2.0 * h);
            assert!(rel_close(fd, wanted[k], 1e-6), "{k}: {fd} vs {}", wanted[k]);
        }
    }

    #[test]
    fn scale_rotation_chain_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let q = Vector4::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let ls = Vector3::from_fn(|_, _| rng.random_range(-1.0..0.5));
            let g = sym3(&mut rng);
            let (ds, dq) = backward_cov3d_to_scale_rotation(&g, &q, &ls);
            let loss = |q: &Vector4<f64>, ls: &Vector3<f64>| {
                g.component_mul(&assemble_covariance(q, ls).unwrap()).sum()
            };
            let h = 1e-6;
            for k in 0..3 {
                let (mut p, mut m) = (ls, ls);
                p[k] += h;
                m[k] -= h;
                let fd = (loss(&q, &p) - loss(&q, &m)) / (2.0 * h);
                assert!(rel_close(fd, ds[k], 1e-5), "scale {k}: {fd} vs {}", ds[k]);
            }
            for k in 0..4 {
                let (mut p, mut m) = (q, q);
                p[k] += h;
                m[k] -= h;
                let fd = (loss(&p, &ls) - loss(&m, &ls)) / (2.0 * h);
                assert!(rel_close(fd, dq[k], 1e-5), "quat {k}: {fd} vs {}", dq[k]);
            }
        }
    }
}
