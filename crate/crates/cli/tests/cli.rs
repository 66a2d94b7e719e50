use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn msq(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_msq"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn msq")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = msq(args, dir);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn synth(dir: &Path, kind: &str, size: usize, seed: u64, name: &str) -> PathBuf {
    let size = size.to_string();
    let seed = seed.to_string();
    ok(
        &[
            "synth", "--kind", kind, "--height", &size, "--width", &size, "--seed", &seed,
            "--output", name,
        ],
        dir,
    );
    dir.join(name)
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .unwrap();
    reader
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect()
}

#[test]
fn simulate_reports_the_sampling_ratio() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "natural", 32, 1, "cube.msq");
    let stdout = ok(
        &[
            "simulate",
            "--input",
            "cube.msq",
            "--pattern",
            "imec4x4",
            "--output",
            "frame.msq",
        ],
        dir.path(),
    );
    assert!(stdout.contains("ratio 0.0625"), "{stdout}");
}

#[test]
fn simulate_rejects_wrong_band_count() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &[
            "synth", "--kind", "natural", "--height", "16", "--width", "16", "--bands", "8",
            "--output", "c.msq",
        ],
        dir.path(),
    );
    let out = msq(
        &["simulate", "--input", "c.msq", "--output", "f.msq"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("band count mismatch"));
}

#[test]
fn wb_pipeline_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "natural", 32, 2, "cube.msq");
    ok(
        &["simulate", "--input", "cube.msq", "--output", "frame.msq"],
        dir.path(),
    );
    let stdout = ok(
        &[
            "demosaic",
            "--input",
            "frame.msq",
            "--method",
            "wb",
            "--output",
            "wb.msq",
        ],
        dir.path(),
    );
    assert!(!stdout.contains("iterations"));
    ok(
        &[
            "evaluate",
            "--reference",
            "cube.msq",
            "--estimate",
            "wb.msq",
            "--output",
            "report.csv",
            "--mse-map",
            "mse.ppm",
        ],
        dir.path(),
    );
    let rows = csv_rows(&dir.path().join("report.csv"));
    let expected: Vec<String> = [
        "image",
        "method",
        "init",
        "psnr_mean",
        "psnr_std",
        "ssim_mean",
    ]
    .iter()
    .map(|s| s.to_string())
    .chain((0..16).map(|k| format!("psnr_band_{k}")))
    .collect();
    assert_eq!(rows[0], expected);
    assert_eq!(rows.len(), 2);
    let psnr: f64 = rows[1][3].parse().unwrap();
    assert!(psnr > 15.0 && psnr.is_finite(), "{psnr}");
    let ppm = std::fs::read(dir.path().join("mse.ppm")).unwrap();
    assert!(ppm.starts_with(b"P6\n32 32\n255\n"));
}

#[test]
fn identical_cubes_report_inf() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "natural", 16, 3, "cube.msq");
    ok(
        &[
            "evaluate",
            "--reference",
            "cube.msq",
            "--estimate",
            "cube.msq",
            "--output",
            "r.csv",
        ],
        dir.path(),
    );
    let rows = csv_rows(&dir.path().join("r.csv"));
    assert_eq!(rows[1][3], "inf");
    assert!(rows[1][6..].iter().all(|c| c == "inf"));
}

#[test]
fn evaluate_rejects_shape_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "natural", 16, 1, "a.msq");
    synth(dir.path(), "natural", 20, 1, "b.msq");
    let out = msq(
        &[
            "evaluate",
            "--reference",
            "a.msq",
            "--estimate",
            "b.msq",
            "--output",
            "r.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn wb_on_constant_frame_is_constant() {
    let dir = tempfile::tempdir().unwrap();
    let cube = msq_core::HyperCube::from_fn(16, 16, 16, |_, _, _| 2.5).unwrap();
    msq_core::io::write_cube(&cube, dir.path().join("c.msq")).unwrap();
    ok(
        &["simulate", "--input", "c.msq", "--output", "f.msq"],
        dir.path(),
    );
    ok(
        &[
            "demosaic", "--input", "f.msq", "--method", "wb", "--output", "o.msq",
        ],
        dir.path(),
    );
    let out = msq_core::io::read_cube(dir.path().join("o.msq")).unwrap();
    assert!(out.as_slice().iter().all(|&v| (v - 2.5).abs() < 1e-6));
}

#[test]
fn cgiht_defaults_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "natural", 32, 4, "cube.msq");
    ok(
        &["simulate", "--input", "cube.msq", "--output", "f.msq"],
        dir.path(),
    );
    let first = ok(
        &[
            "demosaic", "--input", "f.msq", "--method", "cgiht", "--output", "a.msq",
        ],
        dir.path(),
    );
    let second = ok(
        &[
            "demosaic", "--input", "f.msq", "--method", "cgiht", "--init", "sd", "--output",
            "b.msq",
        ],
        dir.path(),
    );
    assert_eq!(first, second);
    assert_eq!(
        std::fs::read(dir.path().join("a.msq")).unwrap(),
        std::fs::read(dir.path().join("b.msq")).unwrap()
    );

    let iters: usize = first
        .lines()
        .find_map(|l| l.strip_prefix("iterations "))
        .unwrap()
        .parse()
        .unwrap();
    let residual: f64 = first
        .lines()
        .find_map(|l| l.strip_prefix("residual "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(iters <= 500);
    assert!(residual <= 1e-7 || iters == 500, "{first}");
}

#[test]
fn asd_fits_a_planted_rank3_frame() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "lowrank", 32, 5, "cube.msq");
    ok(
        &["simulate", "--input", "cube.msq", "--output", "f.msq"],
        dir.path(),
    );
    let stdout = ok(
        &[
            "demosaic", "--input", "f.msq", "--method", "asd", "--rank", "3", "--output", "o.msq",
        ],
        dir.path(),
    );
    let iters: usize = stdout
        .lines()
        .find_map(|l| l.strip_prefix("iterations "))
        .unwrap()
        .parse()
        .unwrap();
    let residual: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("residual "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(residual <= 1e-7 && iters < 500, "{stdout}");
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "natural", 16, 1, "cube.msq");
    ok(
        &["simulate", "--input", "cube.msq", "--output", "f.msq"],
        dir.path(),
    );
    for args in [
        vec![
            "demosaic", "--input", "f.msq", "--method", "bogus", "--output", "o.msq",
        ],
        vec![
            "demosaic", "--input", "f.msq", "--method", "asd", "--rank", "0", "--output", "o.msq",
        ],
        vec![
            "demosaic", "--input", "f.msq", "--method", "asd", "--rank", "17", "--output", "o.msq",
        ],
        vec![
            "demosaic", "--input", "f.msq", "--method", "cs", "--init", "nope", "--output", "o.msq",
        ],
        vec![
            "simulate",
            "--input",
            "cube.msq",
            "--pattern",
            "bayer",
            "--output",
            "f2.msq",
        ],
        vec!["frobnicate"],
    ] {
        assert_eq!(msq(&args, dir.path()).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn missing_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = msq(
        &[
            "demosaic",
            "--input",
            "absent.msq",
            "--method",
            "wb",
            "--output",
            "o.msq",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn bench_grid_has_one_row_per_image_and_init() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    std::fs::create_dir(&data).unwrap();
    synth(&data, "natural", 24, 1, "b.msq");
    synth(&data, "natural", 24, 2, "a.msq");
    let table = dir.path().join("t.csv");
    let args = [
        "bench",
        "--dataset",
        "data",
        "--methods",
        "wb,asd",
        "--inits",
        "sd,wb",
        "--output",
        "t.csv",
    ];
    ok(&args, dir.path());
    let rows = csv_rows(&table);
    assert_eq!(rows[0], ["image", "init", "wb", "asd", "best"]);
    let keys: Vec<(&str, &str)> = rows[1..]
        .iter()
        .map(|r| (r[0].as_str(), r[1].as_str()))
        .collect();
    assert_eq!(keys, [("a", "sd"), ("a", "wb"), ("b", "sd"), ("b", "wb")]);
    for row in &rows[1..] {
        let (wb, asd): (f64, f64) = (row[2].parse().unwrap(), row[3].parse().unwrap());
        let best = if asd > wb { "asd" } else { "wb" };
        assert_eq!(row[4], best);
    }

    let first = std::fs::read(&table).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_msq"))
        .args(args)
        .current_dir(dir.path())
        .env("MSQ_THREADS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(std::fs::read(&table).unwrap(), first);
}

#[test]
#[ignore = "fails: planted Gaussian factors have no spatial correlation, so ASD cannot beat WB from 1/16 samples"]
fn bench_asd_beats_wb_on_planted_low_rank() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    std::fs::create_dir(&data).unwrap();
    synth(&data, "lowrank", 32, 1, "p.msq");
    ok(
        &[
            "bench",
            "--dataset",
            "data",
            "--methods",
            "wb,asd",
            "--inits",
            "wb",
            "--rank",
            "3",
            "--output",
            "t.csv",
        ],
        dir.path(),
    );
    let rows = csv_rows(&dir.path().join("t.csv"));
    let (wb, asd): (f64, f64) = (rows[1][2].parse().unwrap(), rows[1][3].parse().unwrap());
    assert!(asd > wb, "asd {asd} wb {wb}");
}

#[test]
fn bench_fails_on_empty_dir_and_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("empty")).unwrap();
    let out = msq(
        &["bench", "--dataset", "empty", "--output", "t.csv"],
        dir.path(),
    );
    assert_ne!(out.status.code(), Some(0));

    let data = dir.path().join("data");
    std::fs::create_dir(&data).unwrap();
    synth(&data, "natural", 16, 1, "good.msq");
    std::fs::write(data.join("junk.msq"), b"not a cube").unwrap();
    let out = msq(
        &[
            "bench",
            "--dataset",
            "data",
            "--methods",
            "wb",
            "--output",
            "t.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    let rows = csv_rows(&dir.path().join("t.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][0], "good");
}

#[test]
fn synth_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ["lowrank", "sparse", "natural"] {
        let a = std::fs::read(synth(dir.path(), kind, 16, 9, "a.msq")).unwrap();
        let b = std::fs::read(synth(dir.path(), kind, 16, 9, "b.msq")).unwrap();
        let c = std::fs::read(synth(dir.path(), kind, 16, 10, "c.msq")).unwrap();
        assert_eq!(a, b, "{kind}");
        assert_ne!(a, c, "{kind}");
    }
}
