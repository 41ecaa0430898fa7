//! Procedural toy scene: a handful of Gaussians viewed from a ring of cameras,
//! with ground-truth images produced by this crate's own renderer.

use crate::error::Result;
use crate::gaussian::sh::dc_from_color;
use crate::gaussian::{Camera, Gaussian};
use crate::io::Bounds;
use crate::optim::View;
use crate::pipeline::{render, RenderSettings};
use crate::raster::ExecMode;
use crate::real::logit;
use nalgebra::{Vector3, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Clone, Debug)]
pub struct ToySpec {
    pub num_gaussians: usize,
    pub num_train: usize,
    pub num_test: usize,
    pub resolution: u32,
    pub camera_distance: f64,
    /// Half side of the cube holding the Gaussian centers.
    pub half_extent: f64,
    pub background: Vector3<f64>,
    pub seed: u64,
}

impl Default for ToySpec {
    fn default() -> Self {
        Self {
            num_gaussians: 8,
            num_train: 24,
            num_test: 3,
            resolution: 128,
            camera_distance: 4.0,
            half_extent: 0.6,
            background: Vector3::zeros(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ToyScene {
    pub ground_truth: Vec<Gaussian<f64>>,
    pub train: Vec<View<f64>>,
    pub test: Vec<View<f64>>,
    /// Region random initialization samples from.
    pub bounds: Bounds,
    pub scene_extent: f64,
}

/// Cameras on a sphere around the origin, spread by a Fibonacci lattice and
/// all looking at the origin.
pub fn orbit_cameras(count: usize, distance: f64, resolution: u32) -> Result<Vec<Camera<f64>>> {
    let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
    let focal = resolution as f64 * 1.2;
    (0..count)
        .map(|i| {
            let y = 0.85 - 1.7 * (i as f64 + 0.5) / count as f64;
            let r = (1.0 - y * y).sqrt();
            let phi = golden * i as f64;
            let eye = Vector3::new(r * phi.cos(), y, r * phi.sin()) * distance;
            Camera::look_at(
                eye,
                Vector3::zeros(),
                Vector3::y(),
                nalgebra::Vector2::repeat(focal),
                resolution,
                resolution,
            )
        })
        .collect()
}

pub fn toy_scene(spec: &ToySpec) -> Result<ToyScene> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let h = spec.half_extent;
    let ground_truth: Vec<Gaussian<f64>> = (0..spec.num_gaussians)
        .map(|_| {
            let mean = Vector3::from_fn(|_, _| rng.random_range(-h..h));
            let color = Vector3::from_fn(|_, _| rng.random_range(0.1..0.95));
            let mut g = Gaussian::isotropic(
                mean,
                0.0,
                logit(rng.random_range(0.6..0.95)),
                dc_from_color(&color),
            );
            g.log_scale = Vector3::from_fn(|_, _| rng.random_range(0.08f64..0.25).ln());
            let q = Vector4::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
            g.rotation = q / q.norm();
            g
        })
        .collect();

    let cams = orbit_cameras(
        spec.num_train + spec.num_test,
        spec.camera_distance,
        spec.resolution,
    )?;
    let settings = RenderSettings {
        background: spec.background,
        sh_degree: 0,
        mode: ExecMode::Deterministic,
    };
    let mut train = Vec::new();
    let mut test = Vec::new();
    // Held-out views are interleaved through the lattice so they sit between
    // training views.
    let stride = (cams.len() / spec.num_test.max(1)).max(1);
    for (i, cam) in cams.into_iter().enumerate() {
        let image = render(&ground_truth, &cam, &settings, false)?.output.image;
        let is_test = spec.num_test > 0 && i % stride == stride / 2 && test.len() < spec.num_test;
        let view = View {
            name: format!("view_{i:03}"),
            camera: cam,
            image,
        };
        if is_test {
            test.push(view);
        } else {
            train.push(view);
        }
    }
    Ok(ToyScene {
        ground_truth,
        train,
        test,
        bounds: Bounds {
            min: Vector3::repeat(-h * 1.5),
            max: Vector3::repeat(h * 1.5),
        },
        scene_extent: spec.camera_distance,
    })
}

/// Points drawn from the ground-truth densities, colored like their source
/// Gaussian; a stand-in for the sparse cloud structure-from-motion would give.
pub fn sample_point_cloud(
    gaussians: &[Gaussian<f64>],
    count: usize,
    seed: u64,
) -> Result<crate::io::colmap::PointCloud> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(count);
    let mut colors = Vec::with_capacity(count);
    if gaussians.is_empty() {
        return Ok((points, colors));
    }
    for _ in 0..count {
        let g = &gaussians[rng.random_range(0..gaussians.len())];
        let r = crate::gaussian::rotation_matrix(&g.rotation)?;
        let z = Vector3::from_fn(|i, _| rng.sample::<f64, _>(StandardNormal) * g.scale()[i]);
        points.push(g.mean + r * z);
        colors.push(crate::gaussian::sh::evaluate_sh(&g.sh, 0, &Vector3::z()));
    }
    Ok((points, colors))
}

/// Writes the toy scene as a COLMAP text model with PNG images:
/// `<dir>/images/*.png` and `<dir>/sparse/0/*.txt`. Views are named so that
/// the dataset's every-8th test split holds out a spread of viewpoints.
pub fn write_toy_dataset(
    dir: &std::path::Path,
    spec: &ToySpec,
    num_points: usize,
) -> Result<ToyScene> {
    use crate::io::colmap::{
        quaternion_from_matrix, write_text, ColmapImage, ColmapModel, Intrinsics,
    };
    let scene = toy_scene(spec)?;
    let image_dir = dir.join("images");
    std::fs::create_dir_all(&image_dir)?;
    let mut model = ColmapModel::default();
    let mut views: Vec<&View<f64>> = scene.train.iter().chain(&scene.test).collect();
    views.sort_by(|a, b| a.name.cmp(&b.name));
    for (i, v) in views.iter().enumerate() {
        let id = i as u32 + 1;
        let cam = &v.camera;
        model.cameras.insert(
            id,
            Intrinsics {
                width: cam.width,
                height: cam.height,
                focal: cam.focal,
                principal_point: cam.principal_point,
            },
        );
        let name = format!("{}.png", v.name);
        crate::io::save_png(&image_dir.join(&name), &v.image)?;
        model.images.push(ColmapImage {
            id,
            name,
            camera_id: id,
            quaternion: quaternion_from_matrix(&cam.rotation),
            translation: cam.translation,
        });
    }
    let (points, colors) =
        sample_point_cloud(&scene.ground_truth, num_points, spec.seed.wrapping_add(1))?;
    model.points = points;
    model.colors = colors;
    write_text(&dir.join("sparse").join("0"), &model)?;
    Ok(scene)
}
