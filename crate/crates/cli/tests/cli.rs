use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ssq_core::PhaseSpaceGrid;

fn ssq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssq")).args(args).output().expect("run ssq")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn example() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../example-2d.json")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &Path, name: &str, center: &str, points: usize, hbar: f64) -> PathBuf {
    let out = dir.join(name);
    let o = ssq(&[
        "gen", "--kind", "gaussian", "--center", center, "--width", "1", "--grid", &points.to_string(), "--extent", "8",
        "--hbar", &hbar.to_string(), "--out", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn validate_exit_codes() {
    assert_eq!(code(&ssq(&["validate", "--eset", s(&example())])), 0);

    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, r#"{"name":"broken","n_a":1,"n_k":1,"n_l":1,"rho":[[[0,0],[1,0]]],"xi":[1]}"#).unwrap();
    let o = ssq(&["validate", "--eset", s(&broken)]);
    assert_eq!(code(&o), 1);
    assert!(!stdout(&o).trim().is_empty());

    assert_eq!(code(&ssq(&["validate", "--eset", s(&dir.path().join("missing.json"))])), 2);
}

#[test]
fn phase_values() {
    let o = ssq(&["phase", "--eset", s(&example()), "--points", "0 0;1 0;0 1"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.trim().starts_with("-1.17520119364380"), "{out}");
    let v: f64 = out.trim().parse().unwrap();
    assert!((v + 1f64.sinh()).abs() < 1e-14);

    let o = ssq(&["phase", "--eset", s(&example()), "--points", "0.3 -1;0.3 -1;2 0.5"]);
    assert_eq!(stdout(&o).trim().parse::<f64>().unwrap(), 0.0);

    assert_eq!(code(&ssq(&["phase", "--eset", s(&example()), "--points", "0 0;1 0"])), 2);
    assert_eq!(code(&ssq(&["phase", "--eset", s(&example()), "--points", "0 0 1;1 0;0 1"])), 2);
}

#[test]
fn grid_files_round_trip_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let g = gen(dir.path(), "g.ssqg", "0.5 -0.25", 32, 2.0);
    let bytes = std::fs::read(&g).unwrap();
    let back = PhaseSpaceGrid::from_bytes(&bytes).unwrap();
    assert_eq!(back.to_bytes(), bytes);
}

#[test]
fn weyl_paths_agree_on_downsampled_grid() {
    let dir = tempfile::tempdir().unwrap();
    let u = gen(dir.path(), "u.ssqg", "0 0", 128, 2.0);
    let v = gen(dir.path(), "v.ssqg", "0.4 -0.3", 128, 2.0);
    let fft = dir.path().join("fft.ssqg");
    let quad = dir.path().join("quad.ssqg");
    for (path, out) in [("fft", &fft), ("quad", &quad)] {
        let o = ssq(&["weyl", "--hbar", "2", "--u", s(&u), "--v", s(&v), "--out", s(out), "--path", path, "--downsample", "4"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = PhaseSpaceGrid::load(&fft).unwrap();
    let b = PhaseSpaceGrid::load(&quad).unwrap();
    assert_eq!(a.shape(), vec![32, 32]);
    assert!(a.rel_l2_diff(&b) < 1e-3);
}

#[test]
fn star_flat_matches_weyl_and_warns_on_hbar() {
    let dir = tempfile::tempdir().unwrap();
    let u = gen(dir.path(), "u.ssqg", "0.2 0", 64, 0.5);
    let v = gen(dir.path(), "v.ssqg", "-0.3 0.1", 64, 0.5);
    let star = dir.path().join("star.ssqg");
    let weyl = dir.path().join("weyl.ssqg");
    let csv = dir.path().join("star.csv");
    let o = ssq(&[
        "star", "--eset", s(&example()), "--hbar", "1", "--u", s(&u), "--v", s(&v), "--method", "flat", "--out", s(&star),
        "--dump-csv", s(&csv),
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("hbar = 1"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    assert_eq!(code(&ssq(&["weyl", "--hbar", "1", "--u", s(&u), "--v", s(&v), "--out", s(&weyl)])), 0);
    let a = PhaseSpaceGrid::load(&star).unwrap();
    let b = PhaseSpaceGrid::load(&weyl).unwrap();
    assert_eq!(a.hbar, 1.0);
    assert!(a.rel_l2_diff(&b) < 1e-13);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("a,l,re,im"));
    assert_eq!(lines.count(), 64 * 64);
}

#[test]
fn star_kernel_runs_at_32_points() {
    let dir = tempfile::tempdir().unwrap();
    let u = gen(dir.path(), "u.ssqg", "0.2 0", 32, 1.0);
    let v = gen(dir.path(), "v.ssqg", "-0.3 0.1", 32, 1.0);
    let out = dir.path().join("k.ssqg");
    let t0 = std::time::Instant::now();
    let o = ssq(&["star", "--eset", s(&example()), "--hbar", "1", "--u", s(&u), "--v", s(&v), "--method", "kernel", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(t0.elapsed().as_secs_f64() < 60.0);
}

#[test]
fn star_rejects_incompatible_grids() {
    let dir = tempfile::tempdir().unwrap();
    let u = gen(dir.path(), "u.ssqg", "0 0", 32, 1.0);
    let v = gen(dir.path(), "v.ssqg", "0 0", 64, 1.0);
    let out = dir.path().join("o.ssqg");
    let o = ssq(&["star", "--eset", s(&example()), "--hbar", "1", "--u", s(&u), "--v", s(&v), "--out", s(&out)]);
    assert_eq!(code(&o), 1);
}

#[test]
fn suite_acceptance_run() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("out.json");
    let o = ssq(&[
        "suite", "--eset", s(&example()), "--hbar-list", "0.05,0.1,0.2,0.4", "--grid", "128", "--seed", "42", "--report",
        s(&report),
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let checks = v["checks"].as_array().unwrap();
    assert!(checks.len() > 30);
    assert!(checks.iter().all(|c| c["status"] == "pass"));
}

#[test]
fn suite_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let o = ssq(&["suite", "--eset", s(&example()), "--report", s(&report), "--checks", "no_such_check"]);
    assert_eq!(code(&o), 2);
    let o = ssq(&["suite", "--eset", s(&example()), "--report", s(&report), "--checks", "transform_decay"]);
    assert_eq!(code(&o), 1);
    assert!(report.exists());
}

#[test]
fn bench_always_succeeds() {
    let o = ssq(&["bench", "--grid", "16"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("weyl fft"));
}
