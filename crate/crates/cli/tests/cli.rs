use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dtr_core::data::load_tensor;

fn dtr(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dtr")).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = dtr(dir, args);
    assert!(out.status.success(), "dtr {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn setup(dir: &Path) {
    ok(dir, &["synth", "--dims", "16x16x4", "--seed", "3", "--out", "x.dtt"]);
    ok(dir, &["mask", "--sr", "0.5", "--dims", "16x16x4", "--seed", "1", "--out", "m.dtt"]);
}

#[test]
fn recover_twice_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    setup(dir);
    let base = [
        "recover",
        "--variant",
        "dtr",
        "--input",
        "x.dtt",
        "--mask",
        "m.dtt",
        "--iters",
        "20",
        "--lr",
        "1e-3",
        "--seed",
        "0",
    ];
    ok(dir, &[&base[..], &["--out", "a.dtt"]].concat());
    ok(dir, &[&base[..], &["--out", "b.dtt"]].concat());
    assert_eq!(fs::read(dir.join("a.dtt")).unwrap(), fs::read(dir.join("b.dtt")).unwrap());
    assert_eq!(fs::read(dir.join("a.loss.csv")).unwrap(), fs::read(dir.join("b.loss.csv")).unwrap());
    let csv = fs::read_to_string(dir.join("a.loss.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("iteration,loss"));
    assert_eq!(lines.next().unwrap().split(',').next(), Some("1"));
    assert_eq!(lines.last().unwrap().split(',').next(), Some("20"));
    assert!(dir.join("a.manifest.json").exists());
}

#[test]
fn tube_mask_observes_77_tubes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["mask", "--mode", "tube", "--sr", "0.3", "--dims", "16x16x8", "--seed", "1", "--out", "t.dtt"]);
    let m = load_tensor(dir.join("t.dtt")).unwrap();
    let mut tubes = 0;
    for i in 0..16 {
        for j in 0..16 {
            let tube: Vec<f64> = (0..8).map(|k| m.get(i, j, k)).collect();
            assert!(tube.iter().all(|&v| v == tube[0]), "partial tube at ({i},{j})");
            tubes += usize::from(tube[0] == 1.0);
        }
    }
    assert_eq!(tubes, 77);
}

#[test]
fn metrics_of_identical_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    setup(dir);
    let human = ok(dir, &["metrics", "--a", "x.dtt", "--b", "x.dtt"]);
    assert!(human.contains("PSNR Inf"), "{human}");
    let csv = ok(dir, &["metrics", "--a", "x.dtt", "--b", "x.dtt", "--csv"]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "band,psnr,ssim");
    assert_eq!(lines.len(), 1 + 4 + 1);
    assert_eq!(lines[5], "mean,Inf,1");
    for (b, line) in lines[1..5].iter().enumerate() {
        assert_eq!(*line, format!("{b},Inf,1"));
    }
}

#[test]
fn exit_codes_follow_the_failure_class() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    setup(dir);
    let code = |args: &[&str]| dtr(dir, args).status.code().unwrap();
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["mask", "--sr", "0.5", "--dims", "4x4x4", "--out", "q.dtt", "--bogus"]), 1);
    assert_eq!(code(&["mask", "--sr", "1.5", "--dims", "4x4x4", "--out", "q.dtt"]), 1);
    assert_eq!(code(&["metrics", "--a", "missing.dtt", "--b", "x.dtt"]), 2);
    fs::write(dir.join("junk.dtt"), b"not a tensor").unwrap();
    assert_eq!(code(&["metrics", "--a", "junk.dtt", "--b", "x.dtt"]), 2);
    ok(dir, &["mask", "--sr", "0.5", "--dims", "8x8x4", "--out", "small.dtt"]);
    assert_eq!(code(&["recover", "--input", "x.dtt", "--mask", "small.dtt", "--iters", "1", "--out", "r.dtt"]), 3);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("run.cfg"), "# mask settings\nsr = 0.25\ndims = 8x8x2\nseed = 4\n").unwrap();
    ok(dir, &["mask", "--config", "run.cfg", "--out", "a.dtt"]);
    ok(dir, &["mask", "--config", "run.cfg", "--sr", "0.5", "--out", "b.dtt"]);
    let frac = |p: &str| {
        let m = load_tensor(dir.join(p)).unwrap();
        m.as_slice().iter().sum::<f64>() / m.len() as f64
    };
    assert_eq!(frac("a.dtt"), 0.25);
    assert_eq!(frac("b.dtt"), 0.5);
}

#[test]
fn recover_reports_scores_against_truth() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    setup(dir);
    let out = ok(
        dir,
        &["recover", "--variant", "tnn", "--input", "x.dtt", "--mask", "m.dtt", "--truth", "x.dtt", "--out", "r.dtt"],
    );
    assert!(out.contains("psnr"), "{out}");
    let x = load_tensor(dir.join("x.dtt")).unwrap();
    let m = load_tensor(dir.join("m.dtt")).unwrap();
    let r = load_tensor(dir.join("r.dtt")).unwrap();
    // observed entries survive the f32 roundtrip unchanged
    for ((a, b), w) in r.as_slice().iter().zip(x.as_slice()).zip(m.as_slice()) {
        if *w == 1.0 {
            assert_eq!(a, b);
        }
    }
}

#[test]
fn order_four_inputs_are_folded_and_restored() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["synth", "--dims", "12x12x2x3", "--out", "v.dtt"]);
    let stored = dtr_core::data::read_dtt(dir.join("v.dtt")).unwrap();
    assert_eq!(stored.order(), 4);
    ok(dir, &["mask", "--sr", "0.5", "--dims", "12x12x2x3", "--out", "m.dtt"]);
    ok(
        dir,
        &[
            "recover",
            "--variant",
            "tubal_factorization",
            "--input",
            "v.dtt",
            "--mask",
            "m.dtt",
            "--iters",
            "5",
            "--out",
            "r.dtt",
        ],
    );
    assert_eq!(dtr_core::data::read_dtt(dir.join("r.dtt")).unwrap().order(), 4);
    ok(dir, &["metrics", "--a", "r.dtt", "--b", "v.dtt"]);
}
