use crate::error::{Error, Result};
use crate::gaussian::{layout, NUM_PARAMS};
use serde::{Deserialize, Serialize};

/// Per-parameter-group Adam step sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearningRates {
    /// Position rate at iteration 0; decays exponentially to `position_final`.
    pub position_init: f64,
    pub position_final: f64,
    pub sh_dc: f64,
    /// Degrees 1..3.
    pub sh_rest: f64,
    pub opacity: f64,
    pub scale: f64,
    pub rotation: f64,
}

impl Default for LearningRates {
    fn default() -> Self {
        Self {
            position_init: 1.6e-4,
            position_final: 1.6e-6,
            sh_dc: 2.5e-3,
            sh_rest: 2.5e-3 / 20.0,
            opacity: 5e-2,
            scale: 5e-3,
            rotation: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub total_iters: u64,
    pub lambda_dssim: f64,
    pub learning_rates: LearningRates,
    /// Multiplier on the position rates (scene-size normalization).
    pub position_lr_scale: f64,
    pub adam_betas: (f64, f64),
    pub adam_eps: f64,

    pub densify: bool,
    pub densify_interval: u64,
    pub densify_from_iter: u64,
    pub densify_until_iter: u64,
    /// Mean view-space positional gradient norm (NDC units) above which a
    /// Gaussian is densified.
    pub densify_grad_threshold: f64,
    /// Split instead of clone above this max scale, as a fraction of the scene extent.
    pub split_scale_fraction: f64,
    pub split_factor: f64,
    pub prune_alpha: f64,
    /// World-space prune threshold on the max scale, as a fraction of the scene extent.
    pub prune_world_fraction: f64,
    /// Screen-space prune threshold on the footprint radius, as a fraction of
    /// the image height.
    pub prune_screen_fraction: f64,
    pub opacity_reset_interval: u64,
    pub opacity_reset_value: f64,

    /// Iterations at which the training resolution doubles (starting at ¼).
    pub warmup_upsample_iters: [u64; 2],
    pub sh_band_interval: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            total_iters: 30_000,
            lambda_dssim: 0.2,
            learning_rates: LearningRates::default(),
            position_lr_scale: 1.0,
            adam_betas: (0.9, 0.999),
            adam_eps: 1e-15,
            densify: true,
            densify_interval: 100,
            densify_from_iter: 500,
            densify_until_iter: 15_000,
            densify_grad_threshold: 2e-4,
            split_scale_fraction: 0.01,
            split_factor: 1.6,
            prune_alpha: 0.005,
            prune_world_fraction: 0.1,
            prune_screen_fraction: 0.5,
            opacity_reset_interval: 3000,
            opacity_reset_value: 0.01,
            warmup_upsample_iters: [250, 500],
            sh_band_interval: 1000,
        }
    }
}

impl TrainConfig {
    /// Defaults for a run of `total_iters` steps. Densification stops halfway
    /// through (at the latest at the default 15000), leaving the second half
    /// to refine a fixed set.
    pub fn for_iterations(total_iters: u64) -> Self {
        let d = Self::default();
        Self {
            total_iters,
            densify_until_iter: d.densify_until_iter.min(total_iters / 2),
            ..d
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("densify_grad_threshold", self.densify_grad_threshold),
            ("split_scale_fraction", self.split_scale_fraction),
            ("split_factor", self.split_factor),
            ("prune_alpha", self.prune_alpha),
            ("prune_world_fraction", self.prune_world_fraction),
            ("prune_screen_fraction", self.prune_screen_fraction),
            ("opacity_reset_value", self.opacity_reset_value),
            ("adam_eps", self.adam_eps),
            ("position_lr_scale", self.position_lr_scale),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.lambda_dssim) {
            return Err(Error::InvalidArgument(format!(
                "lambda_dssim must lie in [0, 1], got {}",
                self.lambda_dssim
            )));
        }
        if self.densify_interval == 0
            || self.sh_band_interval == 0
            || self.opacity_reset_interval == 0
        {
            return Err(Error::InvalidArgument("intervals must be positive".into()));
        }
        if self.opacity_reset_value >= 1.0 || self.prune_alpha >= 1.0 {
            return Err(Error::InvalidArgument(
                "opacity thresholds must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }

    /// Position step size after `iteration` completed steps: log-linear from
    /// `position_init` to `position_final` over `total_iters`.
    pub fn position_lr(&self, iteration: u64) -> f64 {
        let lr = &self.learning_rates;
        let t = (iteration as f64 / self.total_iters.max(1) as f64).clamp(0.0, 1.0);
        (lr.position_init.ln() * (1.0 - t) + lr.position_final.ln() * t).exp()
            * self.position_lr_scale
    }

    /// Step size of every flattened parameter slot at `iteration`.
    pub fn param_lrs(&self, iteration: u64) -> [f64; NUM_PARAMS] {
        let lr = &self.learning_rates;
        let mut out = [0.0; NUM_PARAMS];
        out[layout::MEAN..layout::MEAN + 3].fill(self.position_lr(iteration));
        out[layout::ROTATION..layout::ROTATION + 4].fill(lr.rotation);
        out[layout::LOG_SCALE..layout::LOG_SCALE + 3].fill(lr.scale);
        out[layout::OPACITY] = lr.opacity;
        out[layout::SH..layout::SH + 3].fill(lr.sh_dc);
        out[layout::SH + 3..].fill(lr.sh_rest);
        out
    }

    /// Active SH degree once `completed` steps have run.
    pub fn sh_degree_after(&self, completed: u64) -> usize {
        ((completed / self.sh_band_interval) as usize).min(crate::gaussian::MAX_SH_DEGREE)
    }

    /// Image downsampling divisor for the step that starts after `completed` steps.
    pub fn resolution_divisor(&self, completed: u64) -> u32 {
        let [first, second] = self.warmup_upsample_iters;
        if completed < first {
            4
        } else if completed < second {
            2
        } else {
            1
        }
    }

    pub fn is_densify_iteration(&self, completed: u64) -> bool {
        self.densify
            && completed >= self.densify_from_iter
            && completed <= self.densify_until_iter
            && completed.is_multiple_of(self.densify_interval)
    }

    pub fn is_opacity_reset_iteration(&self, completed: u64) -> bool {
        self.densify
            && completed <= self.densify_until_iter
            && completed.is_multiple_of(self.opacity_reset_interval)
            && completed > 0
    }
}
