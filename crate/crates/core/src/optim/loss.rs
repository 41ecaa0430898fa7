//! Photometric loss: (1 − λ)·L1 + λ·D-SSIM with D-SSIM = (1 − SSIM) / 2.

use crate::error::Result;
use crate::image::Image;
use crate::real::Real;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const C1: f64 = 0.01 * 0.01;
const C2: f64 = 0.03 * 0.03;

fn window<T: Real>() -> [T; SSIM_WINDOW] {
    let half = (SSIM_WINDOW / 2) as f64;
    let raw: [f64; SSIM_WINDOW] = std::array::from_fn(|i| {
        (-((i as f64 - half).powi(2)) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()
    });
    let sum: f64 = raw.iter().sum();
    raw.map(|v| T::lit(v / sum))
}

/// Separable Gaussian filter of one channel plane; samples outside the
/// image count as zero.
fn blur<T: Real>(plane: &[T], w: usize, h: usize, k: &[T; SSIM_WINDOW]) -> Vec<T> {
    let r = SSIM_WINDOW / 2;
    let mut tmp = vec![T::zero(); w * h];
    for (src, dst) in plane.chunks_exact(w).zip(tmp.chunks_exact_mut(w)) {
        for (i, kv) in k.iter().enumerate() {
            // dst[x] += kv * src[x + i - r] wherever both indices are in range.
            let (d0, s0) = if i < r { (r - i, 0) } else { (0, i - r) };
            if d0 >= w || s0 >= w {
                continue;
            }
            let n = (w - d0).min(w - s0);
            for (o, v) in dst[d0..d0 + n].iter_mut().zip(&src[s0..s0 + n]) {
                *o += *kv * *v;
            }
        }
    }
    let mut out = vec![T::zero(); w * h];
    for (y, dst) in out.chunks_exact_mut(w).enumerate() {
        let lo = y.saturating_sub(r);
        let hi = (y + r + 1).min(h);
        for yy in lo..hi {
            let kv = k[yy + r - y];
            for (o, v) in dst.iter_mut().zip(&tmp[yy * w..(yy + 1) * w]) {
                *o += kv * *v;
            }
        }
    }
    out
}

/// Mean SSIM over all pixels and channels, plus ∂SSIM/∂x when `want_grad`.
pub(crate) fn ssim_with_grad<T: Real>(
    x: &Image<T>,
    y: &Image<T>,
    want_grad: bool,
) -> (T, Option<Image<T>>) {
    let (w, h) = (x.width as usize, x.height as usize);
    let n = w * h;
    let k = window::<T>();
    let (c1, c2) = (T::lit(C1), T::lit(C2));
    let two = T::lit(2.0);
    let inv_count = T::one() / T::lit((n * 3) as f64);
    let mut total = T::zero();
    let mut grad = want_grad.then(|| Image::new(x.width, x.height));

    for ch in 0..3 {
        let xs: Vec<T> = (0..n).map(|i| x.data[3 * i + ch]).collect();
        let ys: Vec<T> = (0..n).map(|i| y.data[3 * i + ch]).collect();
        let sq = |a: &[T], b: &[T]| a.iter().zip(b).map(|(p, q)| *p * *q).collect::<Vec<T>>();
        let mu_x = blur(&xs, w, h, &k);
        let mu_y = blur(&ys, w, h, &k);
        let e_xx = blur(&sq(&xs, &xs), w, h, &k);
        let e_yy = blur(&sq(&ys, &ys), w, h, &k);
        let e_xy = blur(&sq(&xs, &ys), w, h, &k);

        let mut g_mu = vec![T::zero(); n];
        let mut g_exx = vec![T::zero(); n];
        let mut g_exy = vec![T::zero(); n];
        for i in 0..n {
            let (mx, my) = (mu_x[i], mu_y[i]);
            let var_x = e_xx[i] - mx * mx;
            let var_y = e_yy[i] - my * my;
            let cov = e_xy[i] - mx * my;
            let a1 = two * mx * my + c1;
            let a2 = two * cov + c2;
            let b1 = mx * mx + my * my + c1;
            let b2 = var_x + var_y + c2;
            let s = (a1 * a2) / (b1 * b2);
            total += s;
            if want_grad {
                let d = s * inv_count;
                // Grouped so the terms cancel exactly when x == y (then a1 == b1
                // and a2 == b2 bit for bit), keeping the gradient at a perfect
                // fit at exactly zero rather than rounding noise Adam would amplify.
                g_mu[i] = d * ((two * my / a1 - two * mx / b1) + (two * mx / b2 - two * my / a2));
                g_exx[i] = -d / b2;
                g_exy[i] = d * two / a2;
            }
        }
        if let Some(g) = grad.as_mut() {
            let bm = blur(&g_mu, w, h, &k);
            let bxx = blur(&g_exx, w, h, &k);
            let bxy = blur(&g_exy, w, h, &k);
            for i in 0..n {
                g.data[3 * i + ch] = bm[i] + two * xs[i] * bxx[i] + ys[i] * bxy[i];
            }
        }
    }
    (total * inv_count, grad)
}

/// Mean SSIM (11×11 Gaussian window, σ = 1.5, zero padding, L = 1).
pub fn ssim<T: Real>(a: &Image<T>, b: &Image<T>) -> Result<T> {
    a.same_size(b)?;
    Ok(ssim_with_grad(a, b, false).0)
}

/// Loss value and its gradient w.r.t. `render`.
pub fn loss<T: Real>(
    render: &Image<T>,
    target: &Image<T>,
    lambda_dssim: f64,
) -> Result<(T, Image<T>)> {
    render.same_size(target)?;
    let lambda = T::lit(lambda_dssim);
    let l1_weight = T::one() - lambda;
    let inv = T::one() / T::lit(render.data.len() as f64);
    let mut l1 = T::zero();
    let mut grad = Image::new(render.width, render.height);
    for ((g, r), t) in grad.data.iter_mut().zip(&render.data).zip(&target.data) {
        let d = *r - *t;
        l1 += crate::real::abs(d);
        *g = if d > T::zero() {
            l1_weight * inv
        } else if d < T::zero() {
            -l1_weight * inv
        } else {
            T::zero()
        };
    }
    let l1 = l1 * inv;
    if lambda_dssim == 0.0 {
        return Ok((l1_weight * l1, grad));
    }
    let (s, d_ssim) = ssim_with_grad(render, target, true);
    let half = T::lit(0.5);
    let value = l1_weight * l1 + lambda * (T::one() - s) * half;
    for (g, ds) in grad.data.iter_mut().zip(d_ssim.expect("requested").data) {
        *g -= lambda * half * ds;
    }
    Ok((value, grad))
}
