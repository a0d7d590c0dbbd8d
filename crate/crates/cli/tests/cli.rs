use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nirfuse::Plane;
use nirfuse_cli::codec::{save_gray, BitDepth};

fn nirfuse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nirfuse"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn bad_arguments_exit_2() {
    assert_eq!(nirfuse(&["fuse", "--vis", "a.png"]).status.code(), Some(2));
    assert_eq!(nirfuse(&["bogus"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let out = nirfuse(&["synth", "--out", s(dir.path()), "--bit-depth", "12"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_input_exits_3_and_mismatch_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a_vis.png");
    let b = dir.path().join("a_nir.png");
    let out = dir.path().join("f.png");
    let missing = nirfuse(&["fuse", "--vis", s(&a), "--nir", s(&b), "--out", s(&out)]);
    assert_eq!(missing.status.code(), Some(3));

    save_gray(&Plane::filled(8, 8, 0.3), &a, BitDepth::Eight).unwrap();
    save_gray(&Plane::filled(8, 9, 0.3), &b, BitDepth::Eight).unwrap();
    let mismatch = nirfuse(&["fuse", "--vis", s(&a), "--nir", s(&b), "--out", s(&out)]);
    assert_eq!(mismatch.status.code(), Some(4));
    assert!(!out.exists());
}

#[test]
fn invalid_parameter_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a_vis.png");
    save_gray(&Plane::filled(8, 8, 0.3), &a, BitDepth::Eight).unwrap();
    let out = nirfuse(&[
        "fuse",
        "--vis",
        s(&a),
        "--nir",
        s(&a),
        "--out",
        s(&dir.path().join("f.png")),
        "--gif-eps",
        "-1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn synth_batch_and_metrics_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let fused = dir.path().join("fused");
    let report = dir.path().join("report.jsonl");
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# lighter sweep point\nalpha = 0.5\ngif_radius = 4\n").unwrap();

    let synth = nirfuse(&[
        "synth",
        "--out",
        s(&corpus),
        "--width",
        "48",
        "--height",
        "40",
    ]);
    assert!(
        synth.status.success(),
        "{}",
        String::from_utf8_lossy(&synth.stderr)
    );
    assert_eq!(fs::read_dir(&corpus).unwrap().count(), 9);

    let batch = nirfuse(&[
        "batch",
        "--input",
        s(&corpus),
        "--out",
        s(&fused),
        "--report",
        s(&report),
        "--config",
        s(&cfg),
        "--jobs",
        "2",
    ]);
    assert!(
        batch.status.success(),
        "{}",
        String::from_utf8_lossy(&batch.stderr)
    );
    let text = fs::read_to_string(&report).unwrap();
    let lines: Vec<serde_json::Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 4);
    for l in &lines[..3] {
        assert_eq!(l["status"], "ok");
        assert!(l["cd"].as_f64().unwrap() >= 0.0);
        assert!(l["timings_ms"]["total"].as_f64().unwrap() >= 0.0);
    }
    assert_eq!(lines[3]["aggregate"], true);
    assert_eq!(lines[3]["succeeded"], 3);
    assert_eq!(fs::read_dir(&fused).unwrap().count(), 3);

    let metrics = nirfuse(&[
        "metrics",
        "--vis",
        s(&corpus.join("synth011_vis.png")),
        "--nir",
        s(&corpus.join("synth011_nir.png")),
        "--fused",
        s(&corpus.join("synth011_vis.png")),
    ]);
    assert!(metrics.status.success());
    let line: serde_json::Value = serde_json::from_slice(&metrics.stdout).unwrap();
    assert_eq!(line["psnr_vs_visible"], "inf");
    assert_eq!(line["cd"], 0.0);
}

#[test]
fn batch_with_no_pairs_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = nirfuse(&[
        "batch",
        "--input",
        s(dir.path()),
        "--out",
        s(&dir.path().join("o")),
    ]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 1);
}

#[test]
fn batch_where_every_pair_fails_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("x_vis.png"), b"garbage").unwrap();
    fs::write(dir.path().join("x_nir.png"), b"garbage").unwrap();
    let out = nirfuse(&[
        "batch",
        "--input",
        s(dir.path()),
        "--out",
        s(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(3));
}
