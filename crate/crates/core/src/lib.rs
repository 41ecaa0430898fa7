//! Differentiable 3D Gaussian splatting.
//!
//! Scenes are sets of anisotropic Gaussians ([`gaussian::Gaussian`]) rendered
//! by a tile-based, depth-sorted software rasterizer ([`raster`]) with a
//! hand-derived backward pass ([`gradients`]). [`optim`] fits them to posed
//! images and [`io`] reads COLMAP reconstructions and reads/writes models.

// Validity checks are written `!(x > 0)` on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gaussian;
pub mod gradients;
pub mod image;
pub mod io;
pub mod optim;
pub mod pipeline;
pub mod raster;
pub mod real;
pub mod synthetic;

pub use error::{Error, Result};
pub use gaussian::{Camera, Gaussian, ProjectedSplat};
pub use image::Image;
pub use pipeline::{render, Frame, RenderSettings};
pub use raster::ExecMode;
pub use real::Real;
