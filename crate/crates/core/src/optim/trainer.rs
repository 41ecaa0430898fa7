//! The optimization loop: sample a view, render, compare, backpropagate,
//! step Adam, and periodically densify.

use super::adam::{Adam, Moments};
use super::config::TrainConfig;
use super::density::{densify_and_prune, reset_opacity, DensifyReport, DensityStats};
use super::loss::loss;
use super::metrics::{compute_metrics, Metrics};
use crate::error::{Error, Result};
use crate::gaussian::{layout, Camera, Gaussian};
use crate::image::Image;
use crate::pipeline::{backward, render, RenderSettings};
use crate::raster::ExecMode;
use crate::real::Real;
use nalgebra::Vector3;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A posed image in linear RGB.
#[derive(Clone, Debug)]
pub struct View<T: Real> {
    pub name: String,
    pub camera: Camera<T>,
    pub image: Image<T>,
}

/// Everything that evolves during training. Parameter, moment and statistics
/// arrays are index-aligned.
#[derive(Clone, Debug)]
pub struct TrainState<T: Real> {
    pub gaussians: Vec<Gaussian<T>>,
    pub moments: Vec<Moments<T>>,
    pub stats: DensityStats,
    /// Number of completed optimization steps.
    pub iteration: u64,
    pub active_sh_degree: usize,
}

impl<T: Real> TrainState<T> {
    pub fn new(gaussians: Vec<Gaussian<T>>) -> Self {
        let n = gaussians.len();
        Self {
            gaussians,
            moments: vec![Moments::zero(); n],
            stats: DensityStats::new(n),
            iteration: 0,
            active_sh_degree: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    pub iteration: u64,
    pub loss: f64,
    pub num_gaussians: usize,
    pub densify: Option<DensifyReport>,
    pub opacity_reset: bool,
}

pub struct Trainer<T: Real> {
    pub config: TrainConfig,
    pub state: TrainState<T>,
    pub background: Vector3<T>,
    pub mode: ExecMode,
    scene_extent: f64,
    /// Per view: the image at divisors 1, 2 and 4.
    views: Vec<(Camera<T>, [Image<T>; 3])>,
    order: Vec<usize>,
    cursor: usize,
    rng: ChaCha8Rng,
}

fn pyramid_level(divisor: u32) -> usize {
    divisor.trailing_zeros() as usize
}

impl<T: Real> Trainer<T> {
    pub fn new(
        config: TrainConfig,
        state: TrainState<T>,
        views: &[View<T>],
        scene_extent: f64,
        background: Vector3<T>,
        mode: ExecMode,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        if views.is_empty() {
            return Err(Error::InvalidArgument(
                "training needs at least one view".into(),
            ));
        }
        if !(scene_extent > 0.0) || !scene_extent.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "scene extent must be positive, got {scene_extent}"
            )));
        }
        let views = views
            .iter()
            .map(|v| {
                v.image
                    .same_size(&Image::<T>::new(v.camera.width, v.camera.height))?;
                let level = |d: u32| {
                    v.image
                        .downsample((v.image.width / d).max(1), (v.image.height / d).max(1))
                };
                Ok((v.camera.clone(), [v.image.clone(), level(2), level(4)]))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config,
            state,
            background,
            mode,
            scene_extent,
            order: Vec::new(),
            cursor: 0,
            views,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn scene_extent(&self) -> f64 {
        self.scene_extent
    }

    pub fn is_done(&self) -> bool {
        self.state.iteration >= self.config.total_iters
    }

    /// Views are drawn without replacement; a fresh permutation starts each epoch.
    fn next_view(&mut self) -> usize {
        if self.cursor >= self.order.len() {
            self.order = (0..self.views.len()).collect();
            self.order.shuffle(&mut self.rng);
            self.cursor = 0;
        }
        self.cursor += 1;
        self.order[self.cursor - 1]
    }

    pub fn settings(&self) -> RenderSettings<T> {
        RenderSettings {
            background: self.background,
            sh_degree: self.state.active_sh_degree,
            mode: self.mode,
        }
    }

    pub fn step(&mut self) -> Result<StepReport> {
        let completed = self.state.iteration;
        let view = self.next_view();
        let divisor = self.config.resolution_divisor(completed);
        let (full_cam, levels) = &self.views[view];
        let target = &levels[pyramid_level(divisor)];
        let camera = full_cam.resized(target.width, target.height);
        let settings = self.settings();

        let frame = render(&self.state.gaussians, &camera, &settings, true)?;
        let (value, d_image) = loss(frame.image(), target, self.config.lambda_dssim)?;
        let value = value.as_f64();
        if !value.is_finite() {
            return Err(Error::Divergence {
                iteration: completed + 1,
                message: format!("loss is {value} on view {view}"),
            });
        }
        let grads = backward(&self.state.gaussians, &frame, &settings, &d_image)?;

        let height = camera.height as f64;
        for (splat, &src) in frame.splats.iter().zip(&frame.sources) {
            if splat.radius > 0 {
                self.state.stats.observe(
                    src,
                    grads[src].view_pos_grad_norm.as_f64(),
                    splat.radius as f64 / height,
                );
            }
        }

        let adam = Adam {
            beta1: self.config.adam_betas.0,
            beta2: self.config.adam_betas.1,
            eps: self.config.adam_eps,
        };
        let mut lrs = self.config.param_lrs(completed);
        // Position rates are relative to the scene size.
        for lr in &mut lrs[layout::MEAN..layout::MEAN + 3] {
            *lr *= self.scene_extent;
        }
        let step = completed + 1;
        for ((g, m), d) in self
            .state
            .gaussians
            .iter_mut()
            .zip(self.state.moments.iter_mut())
            .zip(&grads)
        {
            let mut p = g.to_params();
            adam.update(&mut p, &d.to_params(), m, &lrs, step);
            *g = Gaussian::from_params(&p);
        }
        if self
            .state
            .gaussians
            .iter()
            .any(|g| !g.mean.iter().all(|v| v.is_finite()))
        {
            return Err(Error::Divergence {
                iteration: step,
                message: "non-finite Gaussian position after update".into(),
            });
        }

        self.state.iteration = step;
        self.state.active_sh_degree = self.config.sh_degree_after(step);

        let mut report = StepReport {
            iteration: step,
            loss: value,
            num_gaussians: self.state.gaussians.len(),
            densify: None,
            opacity_reset: false,
        };
        if self.config.is_densify_iteration(step) {
            let prune_large = step > self.config.opacity_reset_interval;
            report.densify = Some(densify_and_prune(
                &mut self.state.gaussians,
                &mut self.state.moments,
                &mut self.state.stats,
                &self.config,
                self.scene_extent,
                prune_large,
                &mut self.rng,
            ));
        }
        if self.config.is_opacity_reset_iteration(step) {
            reset_opacity(
                &mut self.state.gaussians,
                &mut self.state.moments,
                self.config.opacity_reset_value,
            );
            report.opacity_reset = true;
        }
        report.num_gaussians = self.state.gaussians.len();
        Ok(report)
    }
}

/// Renders every view at full resolution and scores it against its image.
pub fn evaluate<T: Real>(
    gaussians: &[Gaussian<T>],
    views: &[View<T>],
    settings: &RenderSettings<T>,
) -> Result<Vec<(Image<T>, Metrics)>> {
    views
        .iter()
        .map(|v| {
            let frame = render(gaussians, &v.camera, settings, false)?;
            let m = compute_metrics(frame.image(), &v.image)?;
            Ok((frame.output.image, m))
        })
        .collect()
}

/// Mean PSNR, averaging finite values only when some are infinite.
pub fn mean_psnr(metrics: &[Metrics]) -> f64 {
    if metrics.is_empty() {
        return f64::NAN;
    }
    if metrics.iter().all(|m| m.psnr.is_infinite()) {
        return f64::INFINITY;
    }
    let finite: Vec<f64> = metrics
        .iter()
        .map(|m| m.psnr)
        .filter(|p| p.is_finite())
        .collect();
    finite.iter().sum::<f64>() / finite.len() as f64
}

pub fn progress_line(iteration: u64, loss: f64, num_gaussians: usize, psnr: f64) -> String {
    format!("iter={iteration} loss={loss:.6} gaussians={num_gaussians} psnr={psnr:.3}")
}
