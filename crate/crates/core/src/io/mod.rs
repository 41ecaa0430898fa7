//! Scene input and model output.

pub mod checkpoint;
pub mod colmap;
pub mod dataset;
pub mod image_io;
pub mod init;
pub mod knn;
pub mod model;
pub mod ply;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use colmap::{load_colmap, ColmapModel};
pub use dataset::{load_dataset, scene_extent, Dataset};
pub use image_io::{load_image, save_png};
pub use init::{camera_cube, gaussians_at, init_random, Bounds};
pub use model::SplatModel;
pub use ply::{load_ply, save_ply};
