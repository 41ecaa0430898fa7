//! Test-only oracles and scene generators.
#![allow(dead_code)]

use nalgebra::{Vector2, Vector3, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splatlab::gaussian::NUM_PARAMS;
use splatlab::gaussian::{ProjectedSplat, SH_COEFFS};
use splatlab::pipeline::{backward, render, RenderSettings};
use splatlab::{Camera, ExecMode, Gaussian, Image, Real};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Camera at distance 3.5–5 from the origin, looking at it.
pub fn random_camera(rng: &mut ChaCha8Rng, width: u32, height: u32) -> Camera<f64> {
    let dir = loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n: f64 = v.norm();
        if n > 0.2 && n <= 1.0 {
            break v / n;
        }
    };
    let up = if dir.y.abs() > 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let eye = dir * rng.random_range(3.5..5.0);
    let f = rng.random_range(0.9..1.4) * width.max(height) as f64;
    Camera::look_at(
        eye,
        Vector3::zeros(),
        up,
        Vector2::new(f, f * rng.random_range(0.9..1.1)),
        width,
        height,
    )
    .unwrap()
}

pub fn random_gaussian(rng: &mut ChaCha8Rng, sh_scale: f64) -> Gaussian<f64> {
    let mut sh = [Vector3::zeros(); SH_COEFFS];
    for (k, c) in sh.iter_mut().enumerate() {
        let s = if k == 0 { 1.0 } else { sh_scale };
        *c = Vector3::from_fn(|_, _| rng.random_range(-s..s));
    }
    Gaussian {
        mean: Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0)),
        rotation: Vector4::from_fn(|_, _| rng.random_range(-1.0..1.0)),
        log_scale: Vector3::from_fn(|_, _| rng.random_range(0.03f64.ln()..0.35f64.ln())),
        opacity_logit: rng.random_range(-2.5..3.0),
        sh,
    }
}

pub fn random_gaussians(rng: &mut ChaCha8Rng, n: usize, sh_scale: f64) -> Vec<Gaussian<f64>> {
    (0..n).map(|_| random_gaussian(rng, sh_scale)).collect()
}

/// How one splat took part in one pixel's blend.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Contribution {
    pub splat: u32,
    pub clamped: bool,
}

/// Brute-force renderer: for every pixel independently, gather the splats
/// whose radius box contains the pixel center, sort them by (32-bit depth,
/// index) and apply the saturating front-to-back blend.
pub fn reference_render<T: Real>(
    splats: &[ProjectedSplat<T>],
    width: u32,
    height: u32,
    background: &Vector3<T>,
) -> (Image<T>, Vec<Vec<Contribution>>) {
    let mut image = Image::new(width, height);
    let mut contributions = Vec::with_capacity((width * height) as usize);
    let eps = T::lit(1.0 / 255.0);
    let cap = T::lit(0.99);
    for y in 0..height {
        for x in 0..width {
            let px = T::lit(x as f64 + 0.5);
            let py = T::lit(y as f64 + 0.5);
            let mut order: Vec<usize> = (0..splats.len())
                .filter(|&i| {
                    let s = &splats[i];
                    let r = s.radius as f64;
                    (px.as_f64() - s.mean2d.x.as_f64()).abs() <= r
                        && (py.as_f64() - s.mean2d.y.as_f64()).abs() <= r
                })
                .collect();
            order.sort_by(|&a, &b| {
                (splats[a].depth.as_f32(), a)
                    .partial_cmp(&(splats[b].depth.as_f32(), b))
                    .unwrap()
            });
            let mut c = Vector3::zeros();
            let mut t = T::one();
            let mut used = Vec::new();
            for i in order {
                let s = &splats[i];
                let d = Vector2::new(px - s.mean2d.x, py - s.mean2d.y);
                let q = s.conic[0] * d.x * d.x
                    + T::lit(2.0) * s.conic[1] * d.x * d.y
                    + s.conic[2] * d.y * d.y;
                if q < T::zero() {
                    continue;
                }
                let raw = s.alpha * (-T::lit(0.5) * q).exp();
                let clamped = raw > cap;
                let a = if clamped { cap } else { raw };
                if a < eps {
                    continue;
                }
                let next = t * (T::one() - a);
                if next < T::lit(1e-4) {
                    break;
                }
                c += s.color * (a * t);
                t = next;
                used.push(Contribution {
                    splat: i as u32,
                    clamped,
                });
            }
            image.set_pixel(x, y, c + background * t);
            contributions.push(used);
        }
    }
    (image, contributions)
}

/// Every discrete decision the render makes: which Gaussians survive culling,
/// which color channels hit the zero clamp, and who blends where. Finite
/// differences are only meaningful when this is unchanged by the step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Structure {
    pub sources: Vec<usize>,
    pub color_clamps: Vec<[bool; 3]>,
    pub contributions: Vec<Vec<Contribution>>,
}

pub fn structure(
    gaussians: &[Gaussian<f64>],
    cam: &Camera<f64>,
    sh_degree: usize,
    bg: &Vector3<f64>,
) -> Structure {
    let (splats, sources) = splatlab::pipeline::project_all(
        gaussians,
        cam,
        sh_degree,
        splatlab::ExecMode::Deterministic,
    );
    let color_clamps = sources
        .iter()
        .map(|&i| {
            let g = &gaussians[i];
            let dir = (g.mean - cam.center()).normalize();
            let raw = splatlab::gaussian::sh::sh_radiance(&g.sh, sh_degree, &dir);
            [raw.x < 0.0, raw.y < 0.0, raw.z < 0.0]
        })
        .collect();
    let (_, contributions) = reference_render(&splats, cam.width, cam.height, bg);
    Structure {
        sources,
        color_clamps,
        contributions,
    }
}

pub fn max_abs_diff<T: Real>(a: &Image<T>, b: &Image<T>) -> f64 {
    a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x.as_f64() - y.as_f64()).abs())
        .fold(0.0, f64::max)
}

/// Analytic gradients of a random weighted-sum loss against central finite
/// differences on every parameter of a random scene. Parameters whose
/// perturbation changes the render structure are skipped.
pub const STEP: f64 = 1e-4;
pub const REL_TOL: f64 = 1e-4;
pub const ABS_TOL: f64 = 1e-7;

pub struct GradReport {
    pub checked: usize,
    pub skipped: usize,
    pub worst_rel: f64,
}

pub fn gradient_check(seed: u64) -> Result<GradReport, String> {
    let mut rng = rng(seed);
    let (w, h) = (rng.random_range(8..=32), rng.random_range(8..=32));
    let cam = random_camera(&mut rng, w, h);
    let n = rng.random_range(1..=32);
    let gaussians = random_gaussians(&mut rng, n, 0.3);
    let settings = RenderSettings {
        background: Vector3::from_fn(|_, _| rng.random_range(0.0..1.0)),
        sh_degree: 3,
        mode: ExecMode::Deterministic,
    };
    let weights = Image::from_vec(
        w,
        h,
        (0..w * h * 3)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect(),
    )
    .unwrap();
    let loss = |gs: &[Gaussian<f64>]| -> f64 {
        let f = render(gs, &cam, &settings, false).unwrap();
        f.output
            .image
            .data
            .iter()
            .zip(&weights.data)
            .map(|(a, b)| a * b)
            .sum()
    };

    let frame = render(&gaussians, &cam, &settings, true).unwrap();
    let grads = backward(&gaussians, &frame, &settings, &weights).unwrap();
    let base = structure(&gaussians, &cam, 3, &settings.background);

    let mut report = GradReport {
        checked: 0,
        skipped: 0,
        worst_rel: 0.0,
    };
    for (gi, g) in gaussians.iter().enumerate() {
        let analytic = grads[gi].to_params();
        let params = g.to_params();
        for p in 0..NUM_PARAMS {
            let perturbed = |delta: f64| {
                let mut q = params;
                q[p] += delta;
                let mut gs = gaussians.clone();
                gs[gi] = Gaussian::from_params(&q);
                gs
            };
            let (plus, minus) = (perturbed(STEP), perturbed(-STEP));
            if structure(&plus, &cam, 3, &settings.background) != base
                || structure(&minus, &cam, 3, &settings.background) != base
            {
                report.skipped += 1;
                continue;
            }
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * STEP);
            let a = analytic[p];
            let err = (fd - a).abs();
            let rel = err / fd.abs().max(a.abs());
            if !(err < ABS_TOL || rel < REL_TOL) {
                return Err(format!("seed {seed}: gaussian {gi} param {p}: analytic {a:e} vs fd {fd:e} (rel {rel:e})"));
            }
            if err >= ABS_TOL {
                report.worst_rel = report.worst_rel.max(rel);
            }
            report.checked += 1;
        }
    }
    Ok(report)
}

/// Tile renderer vs [`reference_render`] on one random scene of up to 256
/// Gaussians at 64×64. Returns (max |Δ| in f64 deterministic mode, max |Δ|
/// in f32 parallel mode, number of splats).
pub fn raster_equivalence(seed: u64) -> (f64, f64, usize) {
    let mut rng = rng(seed);
    let cam = random_camera(&mut rng, 64, 64);
    let n = rng.random_range(1..=256);
    let gaussians = random_gaussians(&mut rng, n, 0.3);
    let bg = Vector3::from_fn(|_, _| rng.random_range(0.0..1.0));

    let settings = RenderSettings {
        background: bg,
        sh_degree: 3,
        mode: ExecMode::Deterministic,
    };
    let frame = render(&gaussians, &cam, &settings, false).unwrap();
    let (expected, _) = reference_render(&frame.splats, 64, 64, &bg);
    let d64 = max_abs_diff(frame.image(), &expected);

    let g32: Vec<Gaussian<f32>> = gaussians.iter().map(|g| g.cast()).collect();
    let settings32 = RenderSettings {
        background: bg.cast::<f32>(),
        sh_degree: 3,
        mode: ExecMode::Parallel,
    };
    let frame32 = render(&g32, &cam.cast(), &settings32, false).unwrap();
    let (expected32, _) = reference_render(&frame32.splats, 64, 64, &settings32.background);
    let d32 = max_abs_diff(frame32.image(), &expected32);
    (d64, d32, frame.splats.len())
}
