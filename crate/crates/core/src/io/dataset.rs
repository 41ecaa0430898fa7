//! A COLMAP scene with its photographs, split into training and test views.

use super::colmap::{load_colmap, ColmapModel};
use super::image_io::load_image;
use crate::error::{Error, Result};
use crate::gaussian::Camera;
use crate::optim::View;
use nalgebra::Vector3;
use rayon::prelude::*;
use std::path::{Path, PathBuf};

/// Every `TEST_EVERY`-th image (by sorted name, starting with the first) is held out.
pub const TEST_EVERY: usize = 8;

#[derive(Clone, Debug)]
pub struct Dataset {
    pub train: Vec<View<f64>>,
    pub test: Vec<View<f64>>,
    pub points: Vec<Vector3<f64>>,
    pub colors: Vec<Vector3<f64>>,
    pub scene_extent: f64,
}

impl Dataset {
    pub fn cameras(&self) -> impl Iterator<Item = &Camera<f64>> {
        self.train.iter().chain(&self.test).map(|v| &v.camera)
    }
}

/// Radius of the sphere around the camera centers' centroid that holds them
/// all. Falls back to 1 when the cameras coincide.
pub fn scene_extent<'a>(cameras: impl IntoIterator<Item = &'a Camera<f64>>) -> f64 {
    let centers: Vec<Vector3<f64>> = cameras.into_iter().map(|c| c.center()).collect();
    if centers.is_empty() {
        return 1.0;
    }
    let centroid = centers.iter().sum::<Vector3<f64>>() / centers.len() as f64;
    let r = centers
        .iter()
        .map(|c| (c - centroid).norm())
        .fold(0.0, f64::max);
    if r > 0.0 && r.is_finite() {
        r
    } else {
        1.0
    }
}

pub fn is_test_index(sorted_index: usize) -> bool {
    sorted_index.is_multiple_of(TEST_EVERY)
}

/// Loads `<dir>` with images under `<dir>/images`. `resolution_scale` divides
/// every image's size (1 keeps the original).
pub fn load_dataset(dir: &Path, resolution_scale: u32) -> Result<Dataset> {
    if resolution_scale == 0 {
        return Err(Error::InvalidArgument(
            "resolution scale must be at least 1".into(),
        ));
    }
    let model = load_colmap(dir)?;
    let image_dir = dir.join("images");
    let views = load_views(&model, &image_dir, resolution_scale)?;
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, v) in views.into_iter().enumerate() {
        if is_test_index(i) {
            test.push(v);
        } else {
            train.push(v);
        }
    }
    if train.is_empty() {
        // A single image is both the training and the test view.
        train = test.clone();
    }
    let scene_extent = scene_extent(train.iter().chain(&test).map(|v| &v.camera));
    Ok(Dataset {
        train,
        test,
        points: model.points,
        colors: model.colors,
        scene_extent,
    })
}

/// Views sorted by image name.
pub fn load_views(
    model: &ColmapModel,
    image_dir: &Path,
    resolution_scale: u32,
) -> Result<Vec<View<f64>>> {
    let mut images: Vec<_> = model.images.iter().collect();
    images.sort_by(|a, b| a.name.cmp(&b.name));
    images
        .par_iter()
        .map(|im| {
            let camera = model.camera(im)?;
            let path: PathBuf = image_dir.join(&im.name);
            let img = load_image::<f64>(&path)?;
            let camera = match_resolution(camera, img.width, img.height, &path)?;
            let (w, h) = (
                (img.width / resolution_scale).max(1),
                (img.height / resolution_scale).max(1),
            );
            Ok(View {
                name: im.name.clone(),
                camera: camera.resized(w, h),
                image: img.downsample(w, h),
            })
        })
        .collect()
}

/// Adapts intrinsics to an image stored at a different (uniformly scaled) size.
fn match_resolution(
    camera: Camera<f64>,
    width: u32,
    height: u32,
    path: &Path,
) -> Result<Camera<f64>> {
    if camera.width == width && camera.height == height {
        return Ok(camera);
    }
    let sx = width as f64 / camera.width as f64;
    let sy = height as f64 / camera.height as f64;
    if (sx / sy - 1.0).abs() > 0.01 {
        return Err(Error::parse(
            path,
            format!(
                "image is {width}x{height} but its camera is {}x{}",
                camera.width, camera.height
            ),
        ));
    }
    Ok(camera.resized(width, height))
}
