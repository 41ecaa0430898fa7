use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use splatlab::io::{self, checkpoint, Dataset, SplatModel};
use splatlab::optim::metrics::serialize_db;
use splatlab::optim::{
    evaluate, mean_psnr, progress_line, Metrics, TrainConfig, TrainState, Trainer, View,
};
use splatlab::synthetic::{write_toy_dataset, ToySpec};
use splatlab::{Camera, ExecMode, Gaussian, RenderSettings};
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Checkpoints are written after these iterations (and at the end).
const CHECKPOINT_ITERS: [u64; 2] = [7000, 30000];

#[derive(Parser)]
#[command(
    name = "splatlab",
    version,
    about = "Fit and render 3D Gaussian splat scenes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize a Gaussian scene against a COLMAP dataset.
    Train(TrainArgs),
    /// Render a model from dataset or pose-file cameras to PNG.
    Render(RenderArgs),
    /// Score a model on a dataset's test split.
    Eval(EvalArgs),
    /// Convert a model or checkpoint to PLY.
    Export(ExportArgs),
    /// Write the procedural toy scene as a COLMAP dataset.
    Toy(ToyArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// Render background as r,g,b in [0, 1].
    #[arg(long, value_parser = parse_background, default_value = "0,0,0")]
    background: Vector3<f64>,
    /// Serial, bit-reproducible execution.
    #[arg(long)]
    deterministic: bool,
    /// Divide image resolution by this factor.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    resolution_scale: u32,
}

impl Common {
    fn mode(&self) -> ExecMode {
        if self.deterministic {
            ExecMode::Deterministic
        } else {
            ExecMode::Parallel
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 30_000)]
    iters: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Evaluate on the test split every this many iterations (0: only at the end).
    #[arg(long, default_value_t = 1000)]
    eval_interval: u64,
    /// Gaussians for random initialization when the dataset has too few points.
    #[arg(long, default_value_t = 100_000)]
    init_count: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Split {
    Train,
    Test,
    All,
}

#[derive(Args)]
struct RenderArgs {
    /// Binary model or checkpoint.
    #[arg(long)]
    model: PathBuf,
    /// Dataset whose cameras to render.
    #[arg(long, required_unless_present = "cameras")]
    data: Option<PathBuf>,
    /// JSON list of cameras instead of a dataset.
    #[arg(long, conflicts_with = "data")]
    cameras: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "test")]
    split: Split,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Report path (printed to stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ToyArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 128)]
    resolution: u32,
    /// Size of the sampled sparse point cloud.
    #[arg(long, default_value_t = 500)]
    points: usize,
}

fn parse_background(s: &str) -> std::result::Result<Vector3<f64>, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("'{p}' is not a number"))
        })
        .collect::<std::result::Result<_, _>>()?;
    match parts.as_slice() {
        [r, g, b] if parts.iter().all(|v| (0.0..=1.0).contains(v)) => Ok(Vector3::new(*r, *g, *b)),
        [_, _, _] => Err("components must lie in [0, 1]".into()),
        _ => Err("expected three comma-separated values r,g,b".into()),
    }
}

pub fn run() -> Result<()> {
    configure_threads()?;
    match Cli::parse().command {
        Command::Train(a) => train(a),
        Command::Render(a) => render(a),
        Command::Eval(a) => eval(a),
        Command::Export(a) => export(a),
        Command::Toy(a) => toy(a),
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("SPLATLAB_THREADS") {
        let n: usize =
            v.parse().ok().filter(|n| *n > 0).with_context(|| {
                format!("SPLATLAB_THREADS must be a positive integer, got '{v}'")
            })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn require_dir(path: &Path) -> Result<()> {
    if !path.is_dir() {
        bail!("dataset directory {} does not exist", path.display());
    }
    Ok(())
}

fn load(path: &Path, resolution_scale: u32) -> Result<Dataset> {
    require_dir(path)?;
    io::load_dataset(path, resolution_scale)
        .with_context(|| format!("loading dataset {}", path.display()))
}

fn views_f32(views: &[View<f64>]) -> Vec<View<f32>> {
    views
        .iter()
        .map(|v| View {
            name: v.name.clone(),
            camera: v.camera.cast(),
            image: v.image.cast(),
        })
        .collect()
}

fn settings(common: &Common, sh_degree: usize) -> RenderSettings<f32> {
    RenderSettings {
        background: common.background.map(|v| v as f32),
        sh_degree,
        mode: common.mode(),
    }
}

#[derive(Serialize, Deserialize)]
struct ImageReport {
    name: String,
    #[serde(serialize_with = "serialize_db", deserialize_with = "deserialize_db")]
    psnr: f64,
    ssim: f64,
}

#[derive(Serialize, Deserialize)]
struct Timings {
    train_seconds: f64,
    eval_seconds: f64,
}

#[derive(Serialize, Deserialize)]
struct Report {
    #[serde(serialize_with = "serialize_db", deserialize_with = "deserialize_db")]
    mean_psnr: f64,
    mean_ssim: f64,
    per_image: Vec<ImageReport>,
    iterations: u64,
    num_gaussians: usize,
    sh_degree: usize,
    timings: Timings,
}

fn deserialize_db<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Db {
        Num(f64),
        Text(String),
    }
    match Db::deserialize(d)? {
        Db::Num(v) => Ok(v),
        Db::Text(s) if s == "inf" => Ok(f64::INFINITY),
        Db::Text(s) => Err(serde::de::Error::custom(format!("bad dB value {s}"))),
    }
}

fn score(
    gaussians: &[Gaussian<f32>],
    views: &[View<f32>],
    settings: &RenderSettings<f32>,
) -> Result<(Vec<ImageReport>, Vec<Metrics>)> {
    let results = evaluate(gaussians, views, settings)?;
    let metrics: Vec<Metrics> = results.iter().map(|(_, m)| *m).collect();
    let per_image = views
        .iter()
        .zip(&metrics)
        .map(|(v, m)| ImageReport {
            name: v.name.clone(),
            psnr: m.psnr,
            ssim: m.ssim,
        })
        .collect();
    Ok((per_image, metrics))
}

fn mean_ssim(metrics: &[Metrics]) -> f64 {
    metrics.iter().map(|m| m.ssim).sum::<f64>() / metrics.len().max(1) as f64
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn save_snapshot(out: &Path, tag: &str, state: &TrainState<f32>) -> Result<()> {
    checkpoint::save_checkpoint(&out.join(format!("checkpoint_{tag}.ckpt")), state)?;
    model_of(state).save(&out.join(format!("model_{tag}.bin")))?;
    Ok(())
}

fn model_of(state: &TrainState<f32>) -> SplatModel {
    SplatModel {
        sh_degree: state.active_sh_degree as u32,
        gaussians: state.gaussians.clone(),
    }
}

fn initial_gaussians(data: &Dataset, count: usize, seed: u64) -> Vec<Gaussian<f32>> {
    if data.points.len() >= io::init::MIN_SFM_POINTS {
        info!("initializing from {} SfM points", data.points.len());
        return io::gaussians_at(&data.points, &data.colors, data.scene_extent * 0.01);
    }
    warn!(
        "dataset has {} SfM points (need {}); using {count} random Gaussians",
        data.points.len(),
        io::init::MIN_SFM_POINTS
    );
    let cams: Vec<Camera<f64>> = data.cameras().cloned().collect();
    let bounds = io::camera_cube(&cams).expect("dataset has cameras");
    io::init_random(&bounds, count, seed)
}

fn train(a: TrainArgs) -> Result<()> {
    let data = load(&a.data, a.common.resolution_scale)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    info!(
        "{} training / {} test views, scene extent {:.3}",
        data.train.len(),
        data.test.len(),
        data.scene_extent
    );
    let train_views = views_f32(&data.train);
    let test_views = views_f32(if data.test.is_empty() {
        &data.train
    } else {
        &data.test
    });
    let config = TrainConfig {
        total_iters: a.iters,
        ..TrainConfig::for_iterations(a.iters)
    };
    let init = initial_gaussians(&data, a.init_count, a.seed);
    let mut trainer = Trainer::new(
        config,
        TrainState::new(init),
        &train_views,
        data.scene_extent,
        a.common.background.map(|v| v as f32),
        a.common.mode(),
        a.seed,
    )?;

    let start = Instant::now();
    let mut eval_time = 0.0;
    let mut last_loss = f64::NAN;
    while !trainer.is_done() {
        let step = trainer.step()?;
        last_loss = step.loss;
        let it = step.iteration;
        if a.eval_interval > 0 && it % a.eval_interval == 0 && !trainer.is_done() {
            let t = Instant::now();
            let (_, m) = score(&trainer.state.gaussians, &test_views, &trainer.settings())?;
            eval_time += t.elapsed().as_secs_f64();
            println!(
                "{}",
                progress_line(it, step.loss, step.num_gaussians, mean_psnr(&m))
            );
        }
        if CHECKPOINT_ITERS.contains(&it) {
            save_snapshot(&a.out, &it.to_string(), &trainer.state)?;
        }
    }
    let train_seconds = start.elapsed().as_secs_f64() - eval_time;

    let t = Instant::now();
    let (per_image, metrics) = score(&trainer.state.gaussians, &test_views, &trainer.settings())?;
    let eval_seconds = t.elapsed().as_secs_f64() + eval_time;
    let state = &trainer.state;
    println!(
        "{}",
        progress_line(
            state.iteration,
            last_loss,
            state.gaussians.len(),
            mean_psnr(&metrics)
        )
    );
    save_snapshot(&a.out, "final", state)?;
    model_of(state).save(&a.out.join("model.bin"))?;
    let report = Report {
        mean_psnr: mean_psnr(&metrics),
        mean_ssim: mean_ssim(&metrics),
        per_image,
        iterations: state.iteration,
        num_gaussians: state.gaussians.len(),
        sh_degree: state.active_sh_degree,
        timings: Timings {
            train_seconds,
            eval_seconds,
        },
    };
    write_json(&a.out.join("report.json"), &report)?;
    info!("wrote {}", a.out.display());
    Ok(())
}

/// Reads a binary model, a checkpoint or a PLY export.
fn load_model(path: &Path) -> Result<SplatModel> {
    let ctx = || format!("loading model {}", path.display());
    if !path.is_file() {
        bail!("model file {} does not exist", path.display());
    }
    let bytes = std::fs::read(path).with_context(ctx)?;
    if bytes.starts_with(io::model::MAGIC) {
        return SplatModel::decode(&bytes).with_context(ctx);
    }
    if bytes.starts_with(checkpoint::MAGIC) {
        let state: TrainState<f32> = checkpoint::decode_checkpoint(&bytes).with_context(ctx)?;
        return Ok(model_of(&state));
    }
    if bytes.starts_with(b"ply\n") {
        return Ok(SplatModel {
            sh_degree: splatlab::gaussian::MAX_SH_DEGREE as u32,
            gaussians: io::ply::decode_ply(&bytes).with_context(ctx)?,
        });
    }
    bail!("{} is not a model, checkpoint or PLY file", path.display())
}

/// Pose-file entry; rotation and translation map world to camera
/// (x right, y down, z forward).
#[derive(Deserialize)]
struct PoseEntry {
    name: String,
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
    focal: [f64; 2],
    principal_point: Option<[f64; 2]>,
    width: u32,
    height: u32,
}

fn pose_cameras(path: &Path, resolution_scale: u32) -> Result<Vec<(String, Camera<f64>)>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading camera file {}", path.display()))?;
    let entries: Vec<PoseEntry> = serde_json::from_str(&text)
        .with_context(|| format!("parsing camera file {}", path.display()))?;
    entries
        .into_iter()
        .map(|e| {
            let pp = e
                .principal_point
                .unwrap_or([e.width as f64 / 2.0, e.height as f64 / 2.0]);
            let cam = Camera::new(
                nalgebra::Matrix3::from_fn(|r, c| e.rotation[r][c]),
                Vector3::from(e.translation),
                nalgebra::Vector2::from(e.focal),
                nalgebra::Vector2::from(pp),
                e.width,
                e.height,
            )
            .with_context(|| format!("camera '{}' in {}", e.name, path.display()))?;
            let (w, h) = (
                (e.width / resolution_scale).max(1),
                (e.height / resolution_scale).max(1),
            );
            Ok((e.name, cam.resized(w, h)))
        })
        .collect()
}

fn render(a: RenderArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let (cameras, truth): (Vec<(String, Camera<f64>)>, Vec<Option<View<f64>>>) =
        match (&a.data, &a.cameras) {
            (Some(dir), _) => {
                let data = load(dir, a.common.resolution_scale)?;
                let views: Vec<View<f64>> = match a.split {
                    Split::Train => data.train,
                    Split::Test => data.test,
                    Split::All => data.train.into_iter().chain(data.test).collect(),
                };
                (
                    views
                        .iter()
                        .map(|v| (v.name.clone(), v.camera.clone()))
                        .collect(),
                    views.into_iter().map(Some).collect(),
                )
            }
            (None, Some(file)) => {
                let cams = pose_cameras(file, a.common.resolution_scale)?;
                let n = cams.len();
                (cams, (0..n).map(|_| None).collect())
            }
            (None, None) => bail!("either --data or --cameras is required"),
        };
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let settings = settings(&a.common, model.sh_degree as usize);

    let start = Instant::now();
    let mut frames = Vec::with_capacity(cameras.len());
    for (name, cam) in &cameras {
        let frame = splatlab::render(&model.gaussians, &cam.cast(), &settings, false)
            .with_context(|| format!("rendering {name}"))?;
        frames.push(frame.output.image);
    }
    let seconds = start.elapsed().as_secs_f64();
    for (((name, _), img), gt) in cameras.iter().zip(&frames).zip(&truth) {
        let stem = Path::new(name)
            .file_stem()
            .map_or(name.clone(), |s| s.to_string_lossy().into_owned());
        io::save_png(&a.out.join(format!("{stem}.png")), img)?;
        if let Some(gt) = gt {
            let m = splatlab::optim::compute_metrics(img, &gt.image.cast::<f32>())?;
            println!("{name} psnr={:.4} ssim={:.4}", m.psnr, m.ssim);
        }
    }
    let fps = if seconds > 0.0 {
        frames.len() as f64 / seconds
    } else {
        f64::INFINITY
    };
    println!(
        "rendered {} frames in {seconds:.3}s ({fps:.2} fps)",
        frames.len()
    );
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let data = load(&a.data, a.common.resolution_scale)?;
    let views = views_f32(if data.test.is_empty() {
        &data.train
    } else {
        &data.test
    });
    let t = Instant::now();
    let (per_image, metrics) = score(
        &model.gaussians,
        &views,
        &settings(&a.common, model.sh_degree as usize),
    )?;
    let report = Report {
        mean_psnr: mean_psnr(&metrics),
        mean_ssim: mean_ssim(&metrics),
        per_image,
        iterations: 0,
        num_gaussians: model.gaussians.len(),
        sh_degree: model.sh_degree as usize,
        timings: Timings {
            train_seconds: 0.0,
            eval_seconds: t.elapsed().as_secs_f64(),
        },
    };
    match &a.out {
        Some(p) => write_json(p, &report)?,
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(())
}

fn export(a: ExportArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    io::save_ply(&a.out, &model.gaussians)
        .with_context(|| format!("writing {}", a.out.display()))?;
    info!(
        "exported {} Gaussians to {}",
        model.gaussians.len(),
        a.out.display()
    );
    Ok(())
}

fn toy(a: ToyArgs) -> Result<()> {
    let spec = ToySpec {
        seed: a.seed,
        resolution: a.resolution,
        ..Default::default()
    };
    let scene = write_toy_dataset(&a.out, &spec, a.points)?;
    info!(
        "wrote {} views of {} Gaussians to {}",
        scene.train.len() + scene.test.len(),
        scene.ground_truth.len(),
        a.out.display()
    );
    Ok(())
}
