//! The `splatlab` binary end to end.

use std::path::Path;
use std::process::{Command, Output};

fn splatlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_splatlab"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = splatlab(args);
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn toy(dir: &Path) {
    ok(&[
        "toy",
        "--out",
        s(dir),
        "--resolution",
        "32",
        "--points",
        "200",
    ]);
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn missing_dataset_fails_with_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("no_such_dataset");
    let out = splatlab(&[
        "train",
        "--data",
        s(&missing),
        "--out",
        s(&dir.path().join("o")),
        "--iters",
        "10",
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    let line = err
        .lines()
        .find(|l| l.starts_with("error: "))
        .expect("error line");
    assert!(line.contains("no_such_dataset"), "{err}");
}

#[test]
fn deterministic_training_is_reproducible_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("toy");
    toy(&data);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let stdout = ok(&[
            "train",
            "--data",
            s(&data),
            "--out",
            s(&out),
            "--iters",
            "100",
            "--seed",
            "1",
            "--deterministic",
            "--eval-interval",
            "50",
        ]);
        (out, stdout)
    };
    let (a, log) = run("a");
    let (b, _) = run("b");
    let ckpt = |d: &Path| std::fs::read(d.join("checkpoint_final.ckpt")).unwrap();
    assert_eq!(ckpt(&a), ckpt(&b));
    assert_eq!(
        std::fs::read(a.join("model.bin")).unwrap(),
        std::fs::read(b.join("model.bin")).unwrap()
    );

    let progress: Vec<&str> = log.lines().filter(|l| l.starts_with("iter=")).collect();
    assert_eq!(progress.len(), 2, "{log}");
    assert!(
        progress[0].starts_with("iter=50 loss=")
            && progress[0].contains(" gaussians=")
            && progress[0].contains(" psnr=")
    );

    let report = json(&a.join("report.json"));
    for key in [
        "mean_psnr",
        "mean_ssim",
        "per_image",
        "iterations",
        "num_gaussians",
        "sh_degree",
        "timings",
    ] {
        assert!(report.get(key).is_some(), "report lacks {key}");
    }
    assert_eq!(report["iterations"], 100);
    assert!(report["timings"]["train_seconds"].as_f64().unwrap() > 0.0);
    let per_image = report["per_image"].as_array().unwrap();
    assert_eq!(per_image.len(), 4);

    // Rendering the held-out split reproduces the training report.
    let stdout = ok(&[
        "render",
        "--model",
        s(&a.join("model.bin")),
        "--data",
        s(&data),
        "--out",
        s(&dir.path().join("r")),
        "--deterministic",
    ]);
    for entry in per_image {
        let name = entry["name"].as_str().unwrap();
        let line = stdout
            .lines()
            .find(|l| l.starts_with(name))
            .unwrap_or_else(|| panic!("{name} missing:\n{stdout}"));
        let psnr: f64 = line
            .split("psnr=")
            .nth(1)
            .unwrap()
            .split_whitespace()
            .next()
            .unwrap()
            .parse()
            .unwrap();
        assert!(
            (psnr - entry["psnr"].as_f64().unwrap()).abs() < 0.01,
            "{line} vs {entry}"
        );
        let stem = Path::new(name).file_stem().unwrap().to_str().unwrap();
        assert!(dir.path().join("r").join(format!("{stem}.png")).is_file());
    }
    assert!(stdout.contains("fps"));

    // Eval writes the same schema, and export produces a readable PLY.
    ok(&[
        "eval",
        "--model",
        s(&a.join("model.bin")),
        "--data",
        s(&data),
        "--out",
        s(&dir.path().join("e.json")),
        "--deterministic",
    ]);
    let eval = json(&dir.path().join("e.json"));
    assert!(
        (eval["mean_psnr"].as_f64().unwrap() - report["mean_psnr"].as_f64().unwrap()).abs() < 1e-9
    );
    ok(&[
        "export",
        "--model",
        s(&a.join("checkpoint_final.ckpt")),
        "--out",
        s(&dir.path().join("m.ply")),
    ]);
    let ply = splatlab::io::load_ply(&dir.path().join("m.ply")).unwrap();
    assert_eq!(
        ply.len(),
        report["num_gaussians"].as_u64().unwrap() as usize
    );
}

fn empty_model(path: &Path) {
    splatlab::io::SplatModel {
        sh_degree: 0,
        gaussians: vec![],
    }
    .save(path)
    .unwrap();
}

#[test]
fn empty_model_renders_background() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("toy");
    toy(&data);
    let model = dir.path().join("empty.bin");
    empty_model(&model);
    let out = dir.path().join("frames");
    ok(&[
        "render",
        "--model",
        s(&model),
        "--data",
        s(&data),
        "--split",
        "all",
        "--out",
        s(&out),
        "--background",
        "1,1,1",
    ]);
    let frames: Vec<_> = std::fs::read_dir(&out).unwrap().collect();
    assert_eq!(frames.len(), 27);
    for f in frames {
        let img = image::open(f.unwrap().path()).unwrap().to_rgb8();
        assert!(img.pixels().all(|p| p.0 == [255, 255, 255]));
    }
}

#[test]
fn renders_from_a_camera_file_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.bin");
    splatlab::io::SplatModel {
        sh_degree: 0,
        gaussians: vec![splatlab::Gaussian::isotropic(
            nalgebra::Vector3::new(0.0, 0.0, 3.0),
            0.2f32.ln(),
            2.0,
            splatlab::gaussian::sh::dc_from_color(&nalgebra::Vector3::new(1.0, 0.0, 0.0)),
        )],
    }
    .save(&model)
    .unwrap();
    let cams = dir.path().join("cams.json");
    std::fs::write(
        &cams,
        r#"[{"name": "front", "rotation": [[1,0,0],[0,1,0],[0,0,1]], "translation": [0,0,0],
             "focal": [40, 40], "width": 40, "height": 30}]"#,
    )
    .unwrap();
    let render = |out: &str| {
        let o = dir.path().join(out);
        ok(&[
            "render",
            "--model",
            s(&model),
            "--cameras",
            s(&cams),
            "--out",
            s(&o),
            "--deterministic",
        ]);
        std::fs::read(o.join("front.png")).unwrap()
    };
    let (a, b) = (render("a"), render("b"));
    assert_eq!(a, b);
    let img = image::load_from_memory(&a).unwrap().to_rgb8();
    assert_eq!(img.dimensions(), (40, 30));
    let c = img.get_pixel(20, 15).0;
    assert!(c[0] > 200 && c[1] < 60, "{c:?}");
}

#[test]
fn eval_against_identical_targets_reports_infinity() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("toy");
    toy(&data);
    // Black targets are reproduced exactly by an empty model on black.
    for f in std::fs::read_dir(data.join("images")).unwrap() {
        image::RgbImage::new(32, 32)
            .save(f.unwrap().path())
            .unwrap();
    }
    let model = dir.path().join("empty.bin");
    empty_model(&model);
    let stdout = ok(&["eval", "--model", s(&model), "--data", s(&data)]);
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["mean_psnr"], "inf");
    assert_eq!(report["mean_ssim"], 1.0);
    assert!(report["per_image"]
        .as_array()
        .unwrap()
        .iter()
        .all(|e| e["psnr"] == "inf"));
}

#[test]
fn bad_arguments_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = splatlab(&[
        "export",
        "--model",
        s(&dir.path().join("nope.bin")),
        "--out",
        s(&dir.path().join("x.ply")),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(
        err.lines().filter(|l| l.starts_with("error: ")).count(),
        1,
        "{err}"
    );
    assert!(err.contains("nope.bin"));

    let bad_bg = splatlab(&[
        "render",
        "--model",
        "m",
        "--cameras",
        "c",
        "--out",
        "o",
        "--background",
        "1,2",
    ]);
    assert!(!bad_bg.status.success());
}
