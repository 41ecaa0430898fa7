//! Training: loss, Adam, schedules and adaptive density control.

pub mod adam;
pub mod config;
pub mod density;
pub mod loss;
pub mod metrics;
pub mod trainer;

pub use adam::{Adam, Moments};
pub use config::{LearningRates, TrainConfig};
pub use density::{densify_and_prune, reset_opacity, split, DensifyReport, DensityStats};
pub use loss::{loss, ssim};
pub use metrics::{compute_metrics, psnr, Metrics};
pub use trainer::{evaluate, mean_psnr, progress_line, StepReport, TrainState, Trainer, View};
