//! The `maphdr` binary: verbs, outputs and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn maphdr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maphdr"))
        .args(args)
        .arg("--log-level")
        .arg("warn")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn check(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn tiny_sequence(dir: &Path) {
    check(&maphdr(&[
        "gen-synthetic",
        "--out",
        s(dir),
        "--width",
        "48",
        "--height",
        "36",
        "--frames",
        "3",
        "--seed",
        "5",
    ]));
}

#[test]
fn gen_synthetic_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let seq = tmp.path().join("seq");
    tiny_sequence(&seq);
    for k in 0..3 {
        assert!(seq.join(format!("frame_{:04}.png", k)).is_file());
        assert!(seq.join("truth").join(format!("frame_{:04}.pfm", k)).is_file());
        assert!(seq.join("masks").join(format!("frame_{:04}.png", k)).is_file());
    }
    let manifest = std::fs::read_to_string(seq.join("manifest.txt")).unwrap();
    assert_eq!(manifest.lines().filter(|l| !l.trim().is_empty()).count(), 3);
    assert!(std::fs::read_to_string(seq.join("crf.txt")).unwrap().contains("z_th"));
}

#[test]
fn synthesize_then_score_and_tonemap() {
    let tmp = tempfile::tempdir().unwrap();
    let seq = tmp.path().join("seq");
    let hdr = tmp.path().join("hdr");
    let dump = tmp.path().join("dump");
    let log = tmp.path().join("stats.jsonl");
    tiny_sequence(&seq);
    check(&maphdr(&[
        "synthesize",
        "--manifest",
        s(&seq.join("manifest.txt")),
        "--crf",
        s(&seq.join("crf.txt")),
        "--out",
        s(&hdr),
        "--format",
        "both",
        "--set",
        "levels=2",
        "--log-json",
        s(&log),
        "--dump-dir",
        s(&dump),
    ]));
    for k in 0..3 {
        assert!(hdr.join(format!("frame_{:04}.pfm", k)).is_file());
        assert!(hdr.join(format!("frame_{:04}.hdr", k)).is_file());
        assert!(dump.join(format!("support_frame_{:04}.png", k)).is_file());
        assert!(dump.join(format!("background_frame_{:04}.pfm", k)).is_file());
    }
    let lines: Vec<serde_json::Value> = std::fs::read_to_string(&log)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 3);

    let report = tmp.path().join("report.json");
    let out = maphdr(&[
        "metrics",
        "--metric",
        "logpsnr",
        "--test",
        s(&hdr),
        "--ref",
        s(&seq.join("truth")),
        "--out",
        s(&report),
    ]);
    check(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("mean logpsnr"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["reports"].as_array().unwrap().len(), 1);
    let scores = json["reports"][0]["per_frame"].as_array().unwrap();
    assert_eq!(scores.len(), 3);
    assert!(scores.iter().all(|v| v.as_f64().unwrap() > 10.0));

    let png = tmp.path().join("png");
    check(&maphdr(&["tonemap", "--input", s(&hdr), "--out", s(&png), "--key", "0.18"]));
    assert!(png.join("frame_0001.png").is_file());
    let single = tmp.path().join("one.png");
    check(&maphdr(&["tonemap", "--input", s(&hdr.join("frame_0000.hdr")), "--out", s(&single), "--white", "2"]));
    assert!(single.is_file());
}

#[test]
fn flow_between_frames() {
    let tmp = tempfile::tempdir().unwrap();
    let seq = tmp.path().join("seq");
    tiny_sequence(&seq);
    let field = tmp.path().join("flow.pfm");
    let warped = tmp.path().join("warped.pfm");
    check(&maphdr(&[
        "flow",
        "--reference",
        s(&seq.join("truth/frame_0000.pfm")),
        "--target",
        s(&seq.join("truth/frame_0002.pfm")),
        "--out",
        s(&field),
        "--warped",
        s(&warped),
    ]));
    let bytes = std::fs::read(&field).unwrap();
    assert!(bytes.starts_with(b"PF\n48 36\n"));
    assert!(warped.is_file());
}

#[test]
fn kr_selftest_reports_json() {
    let out = maphdr(&["kr-selftest", "--instances", "20", "--seed", "3"]);
    check(&out);
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["instances"], 20);
    assert!(json["max_relative_error"].as_f64().unwrap() < 1e-5);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("missing.txt");

    assert_eq!(maphdr(&["no-such-verb"]).status.code(), Some(1));
    assert_eq!(maphdr(&["kr-selftest", "--set", "bogus=1"]).status.code(), Some(1));
    assert_eq!(maphdr(&["kr-selftest", "--set", "levels"]).status.code(), Some(1));
    assert_eq!(maphdr(&["--help"]).status.code(), Some(0));

    let out = maphdr(&["synthesize", "--manifest", s(&missing), "--crf", s(&missing), "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    let bad = tmp.path().join("bad.pfm");
    std::fs::write(&bad, b"PF\n4 4\n-1.0\n\x00\x00").unwrap();
    let out = maphdr(&["tonemap", "--input", s(&bad), "--out", s(&tmp.path().join("x.png"))]);
    assert_eq!(out.status.code(), Some(2));

    // a tolerance no gradient check can meet is a numerical failure
    assert_eq!(
        maphdr(&["kr-selftest", "--instances", "3", "--tolerance", "1e-30"]).status.code(),
        Some(3)
    );
}
