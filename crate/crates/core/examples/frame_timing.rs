//! Times render, loss and backward on one toy view: `cargo run --release --example frame_timing [gaussians]`.

use splatlab::io::init_random;
use splatlab::optim::loss;
use splatlab::pipeline::{backward, render};
use splatlab::synthetic::{toy_scene, ToySpec};
use splatlab::{ExecMode, RenderSettings};
use std::time::Instant;

fn main() -> anyhow::Result<()> {
    let n: usize = std::env::args()
        .nth(1)
        .map(|s| s.parse().unwrap())
        .unwrap_or(3000);
    let scene = toy_scene(&ToySpec::default())?;
    let mut gs = init_random::<f32>(&scene.bounds, n, 3);
    for g in &mut gs {
        g.opacity_logit = 0.0;
    }
    let view = &scene.train[0];
    let cam = view.camera.cast::<f32>();
    let target = view.image.cast::<f32>();
    let settings = RenderSettings {
        background: nalgebra::Vector3::zeros(),
        sh_degree: 3,
        mode: ExecMode::Parallel,
    };
    let (mut tr, mut tl, mut tb) = (0.0, 0.0, 0.0);
    let reps = 20;
    for _ in 0..reps {
        let t0 = Instant::now();
        let frame = render(&gs, &cam, &settings, true)?;
        let t1 = Instant::now();
        let (_, d) = loss(frame.image(), &target, 0.2)?;
        let t2 = Instant::now();
        let g = backward(&gs, &frame, &settings, &d)?;
        let t3 = Instant::now();
        std::hint::black_box(g);
        tr += (t1 - t0).as_secs_f64();
        tl += (t2 - t1).as_secs_f64();
        tb += (t3 - t2).as_secs_f64();
        if tr == 0.0 {
            println!("{}", frame.binning.num_instances());
        }
    }
    let t0 = Instant::now();
    for _ in 0..reps {
        std::hint::black_box(splatlab::pipeline::project_all(
            &gs,
            &cam,
            3,
            ExecMode::Parallel,
        ));
    }
    let (sp, _) = splatlab::pipeline::project_all(&gs, &cam, 3, ExecMode::Parallel);
    let t1 = Instant::now();
    for _ in 0..reps {
        std::hint::black_box(splatlab::raster::bin_and_sort(&sp, 128, 128)?);
    }
    let t2 = Instant::now();
    println!(
        "project={:.2}ms bin={:.2}ms",
        (t1 - t0).as_secs_f64() * 1e3 / reps as f64,
        (t2 - t1).as_secs_f64() * 1e3 / reps as f64
    );
    let frame = render(&gs, &cam, &settings, true)?;
    println!(
        "n={n} instances={} render={:.2}ms loss={:.2}ms backward={:.2}ms",
        frame.binning.num_instances(),
        tr * 1e3 / reps as f64,
        tl * 1e3 / reps as f64,
        tb * 1e3 / reps as f64
    );
    Ok(())
}
