//! Real spherical harmonics up to degree 3.

use super::SH_COEFFS;
use crate::real::Real;
use nalgebra::Vector3;

pub const SH_C0: f64 = 0.282_094_791_773_878_14;
const SH_C1: f64 = 0.488_602_511_902_919_9;
const SH_C2: [f64; 5] = [
    1.092_548_430_592_079_2,
    -1.092_548_430_592_079_2,
    0.315_391_565_252_520_05,
    -1.092_548_430_592_079_2,
    0.546_274_215_296_039_6,
];
const SH_C3: [f64; 7] = [
    -0.590_043_589_926_643_5,
    2.890_611_442_640_554,
    -0.457_045_799_464_465_8,
    0.373_176_332_590_115_4,
    -0.457_045_799_464_465_8,
    1.445_305_721_320_277,
    -0.590_043_589_926_643_5,
];

/// Offset added to the SH expansion so an all-zero model renders mid-gray.
pub const COLOR_OFFSET: f64 = 0.5;

#[inline]
pub fn num_coeffs(degree: usize) -> usize {
    (degree + 1) * (degree + 1)
}

/// SH basis values at `dir`; entries above `degree` are zero.
pub fn sh_basis<T: Real>(dir: &Vector3<T>, degree: usize) -> [T; SH_COEFFS] {
    sh_basis_with_grad(dir, degree).0
}

/// SH basis values and their partial derivatives w.r.t. the (unnormalized)
/// components of `dir`.
pub fn sh_basis_with_grad<T: Real>(
    dir: &Vector3<T>,
    degree: usize,
) -> ([T; SH_COEFFS], [Vector3<T>; SH_COEFFS]) {
    let c = T::lit;
    let z0 = T::zero();
    let (x, y, z) = (dir.x, dir.y, dir.z);
    let mut b = [z0; SH_COEFFS];
    let mut g = [Vector3::zeros(); SH_COEFFS];
    b[0] = c(SH_C0);
    if degree >= 1 {
        let c1 = c(SH_C1);
        b[1] = -c1 * y;
        b[2] = c1 * z;
        b[3] = -c1 * x;
        g[1] = Vector3::new(z0, -c1, z0);
        g[2] = Vector3::new(z0, z0, c1);
        g[3] = Vector3::new(-c1, z0, z0);
    }
    if degree >= 2 {
        let k = SH_C2.map(c);
        let (xx, yy, zz) = (x * x, y * y, z * z);
        let two = c(2.0);
        b[4] = k[0] * x * y;
        b[5] = k[1] * y * z;
        b[6] = k[2] * (two * zz - xx - yy);
        b[7] = k[3] * x * z;
        b[8] = k[4] * (xx - yy);
        g[4] = Vector3::new(k[0] * y, k[0] * x, z0);
        g[5] = Vector3::new(z0, k[1] * z, k[1] * y);
        g[6] = Vector3::new(-two * k[2] * x, -two * k[2] * y, c(4.0) * k[2] * z);
        g[7] = Vector3::new(k[3] * z, z0, k[3] * x);
        g[8] = Vector3::new(two * k[4] * x, -two * k[4] * y, z0);
    }
    if degree >= 3 {
        let k = SH_C3.map(c);
        let (xx, yy, zz) = (x * x, y * y, z * z);
        let (two, three, four, six, eight) = (c(2.0), c(3.0), c(4.0), c(6.0), c(8.0));
        b[9] = k[0] * y * (three * xx - yy);
        b[10] = k[1] * x * y * z;
        b[11] = k[2] * y * (four * zz - xx - yy);
        b[12] = k[3] * z * (two * zz - three * xx - three * yy);
        b[13] = k[4] * x * (four * zz - xx - yy);
        b[14] = k[5] * z * (xx - yy);
        b[15] = k[6] * x * (xx - three * yy);
        g[9] = Vector3::new(six * k[0] * x * y, k[0] * (three * xx - three * yy), z0);
        g[10] = Vector3::new(k[1] * y * z, k[1] * x * z, k[1] * x * y);
        g[11] = Vector3::new(
            -two * k[2] * x * y,
            k[2] * (four * zz - xx - three * yy),
            eight * k[2] * y * z,
        );
        g[12] = Vector3::new(
            -six * k[3] * x * z,
            -six * k[3] * y * z,
            k[3] * (six * zz - three * xx - three * yy),
        );
        g[13] = Vector3::new(
            k[4] * (four * zz - three * xx - yy),
            -two * k[4] * x * y,
            eight * k[4] * x * z,
        );
        g[14] = Vector3::new(two * k[5] * x * z, -two * k[5] * y * z, k[5] * (xx - yy));
        g[15] = Vector3::new(k[6] * (three * xx - three * yy), -six * k[6] * x * y, z0);
    }
    (b, g)
}

/// Unclamped SH expansion plus the color offset.
pub fn sh_radiance<T: Real>(
    sh: &[Vector3<T>; SH_COEFFS],
    degree: usize,
    dir: &Vector3<T>,
) -> Vector3<T> {
    let basis = sh_basis(dir, degree);
    let mut rgb = Vector3::repeat(T::lit(COLOR_OFFSET));
    for (coef, b) in sh.iter().zip(basis.iter()).take(num_coeffs(degree.min(3))) {
        rgb += coef * *b;
    }
    rgb
}

/// RGB color seen along the unit direction `dir`, clamped at zero.
pub fn evaluate_sh<T: Real>(
    sh: &[Vector3<T>; SH_COEFFS],
    degree: usize,
    dir: &Vector3<T>,
) -> Vector3<T> {
    sh_radiance(sh, degree, dir).map(|v| v.max(T::zero()))
}

/// SH degree-0 coefficient that produces `color` under [`evaluate_sh`].
pub fn dc_from_color<T: Real>(color: &Vector3<T>) -> Vector3<T> {
    color.map(|v| (v - T::lit(COLOR_OFFSET)) / T::lit(SH_C0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_sh(seed: u64) -> [Vector3<f64>; SH_COEFFS] {
        let mut s = seed;
        let mut next = move || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        std::array::from_fn(|_| Vector3::new(next(), next(), next()))
    }

    #[test]
    fn dc_only_is_constant_plus_offset() {
        let mut sh = [Vector3::<f64>::zeros(); SH_COEFFS];
        sh[0] = Vector3::new(1.0, -0.5, 0.25);
        let a = evaluate_sh(&sh, 3, &Vector3::new(0.0, 0.0, 1.0));
        let b = evaluate_sh(&sh, 3, &Vector3::new(0.6, -0.8, 0.0));
        assert_eq!(a, b);
        assert!((a.x - (0.28209479 + 0.5)).abs() < 1e-8);
    }

    #[test]
    fn zero_coefficients_render_mid_gray() {
        let sh = [Vector3::zeros(); SH_COEFFS];
        assert_eq!(
            evaluate_sh(&sh, 3, &Vector3::new(0.0, 1.0, 0.0)),
            Vector3::repeat(0.5)
        );
    }

    #[test]
    fn masked_bands_are_inert() {
        let mut sh = random_sh(3);
        sh[0] = Vector3::repeat(0.3);
        let d = Vector3::new(0.48, 0.6, 0.64);
        assert_eq!(evaluate_sh(&sh, 0, &d), evaluate_sh(&sh, 0, &(-d)));
    }

    #[test]
    fn color_clamps_at_zero() {
        let mut sh = [Vector3::zeros(); SH_COEFFS];
        sh[0] = Vector3::new(-10.0, 0.0, 0.0);
        assert_eq!(evaluate_sh(&sh, 0, &Vector3::z()).x, 0.0);
    }

    #[test]
    fn dc_round_trips_color() {
        let c = Vector3::new(1.0, 0.0, 0.25);
        let sh = {
            let mut s = [Vector3::zeros(); SH_COEFFS];
            s[0] = dc_from_color(&c);
            s
        };
        assert!((evaluate_sh(&sh, 0, &Vector3::z()) - c).amax() < 1e-12);
    }

    #[test]
    fn basis_gradient_matches_finite_differences() {
        let d = Vector3::new(0.3f64, -0.5, 0.81);
        let (_, g) = sh_basis_with_grad(&d, 3);
        let h = 1e-6;
        for axis in 0..3 {
            let mut p = d;
            let mut m = d;
            p[axis] += h;
            m[axis] -= h;
            let (bp, bm) = (sh_basis(&p, 3), sh_basis(&m, 3));
            for k in 0..SH_COEFFS {
                let fd = (bp[k] - bm[k]) / (2.0 * h);
                assert!(
                    (fd - g[k][axis]).abs() < 1e-8,
                    "k={k} axis={axis}: {fd} vs {}",
                    g[k][axis]
                );
            }
        }
    }

    #[test]
    fn basis_is_orthonormal_on_the_sphere() {
        // Fibonacci-sphere quadrature of ∫ Y_a Y_b dω.
        let n = 20000;
        let mut gram = [[0.0f64; SH_COEFFS]; SH_COEFFS];
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        for i in 0..n {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            let b = sh_basis(&Vector3::new(r * phi.cos(), r * phi.sin(), z), 3);
            for a in 0..SH_COEFFS {
                for c in 0..SH_COEFFS {
                    gram[a][c] += b[a] * b[c] * 4.0 * std::f64::consts::PI / n as f64;
                }
            }
        }
        for a in 0..SH_COEFFS {
            for c in 0..SH_COEFFS {
                let want = if a == c { 1.0 } else { 0.0 };
                assert!(
                    (gram[a][c] - want).abs() < 2e-3,
                    "({a},{c}) = {}",
                    gram[a][c]
                );
            }
        }
    }
}
