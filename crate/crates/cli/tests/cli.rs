use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
}

fn pfde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pfde"))
        .args(args)
        .env("PFDE_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = pfde(args);
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

/// Data rows of a CSV as (t, species, node, x, value), skipping the hash
/// comment and header.
fn rows(path: &Path) -> Vec<(f64, usize, usize, f64, f64)> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# manifest_sha256="));
    lines.next().unwrap();
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (
                f[0].parse().unwrap(),
                f[1].parse().unwrap(),
                f[2].parse().unwrap(),
                f[3].parse().unwrap(),
                f[4].parse().unwrap(),
            )
        })
        .collect()
}

const ZERO: &str = r#"
[problem]
n = 2
length = 1.0
mesh_points = 9
delay_steps = 8

[[species]]
diffusion = 0.1
bc = "neumann"

[[species]]
diffusion = 0.2
bc = "dirichlet"

[reaction]
catalog = "linear"
"#;

#[test]
fn zero_problem_gives_zero_trajectory() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "zero.toml", ZERO);
    let out = dir.path().join("out");
    let (code, _, err) = run(&[
        "simulate",
        cfg.to_str().unwrap(),
        "--T",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let data = rows(&out.join("trajectory.csv"));
    assert_eq!(data.len(), 3 * 2 * 9);
    assert!(data.iter().all(|r| r.4 == 0.0));
    for f in ["state.bin", "report.toml", "manifest.toml"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn logistic_demo_settles_at_one() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let cfg = config("delayed_logistic.toml");
    let (code, _, err) = run(&[
        "simulate",
        cfg.to_str().unwrap(),
        "--T",
        "40",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let data = rows(&out.join("trajectory.csv"));
    let late: Vec<f64> = data.iter().filter(|r| r.0 >= 30.0).map(|r| r.4).collect();
    assert!(!late.is_empty());
    assert!(late.iter().all(|v| (v - 1.0).abs() <= 0.05), "{late:?}");
    let first: Vec<f64> = data.iter().filter(|r| r.0 == 0.0).map(|r| r.4).collect();
    assert!(first.iter().all(|&v| v == 0.01));
}

#[test]
fn snapshots_select_rows() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let cfg = config("heat_dirichlet.toml");
    let (code, _, err) = run(&[
        "simulate",
        cfg.to_str().unwrap(),
        "--T",
        "1",
        "--snapshots",
        "0,0.5,1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let data = rows(&out.join("trajectory.csv"));
    let mut times: Vec<f64> = data.iter().map(|r| r.0).collect();
    times.dedup();
    assert_eq!(times, vec![0.0, 0.5, 1.0]);
    // sine mode of the Dirichlet heat equation decays like exp(-t)
    let mid = data.iter().find(|r| r.0 == 1.0 && r.2 == 32).unwrap();
    assert!((mid.4 - (-1.0f64).exp()).abs() < 1e-3, "{mid:?}");

    let off = run(&[
        "simulate",
        cfg.to_str().unwrap(),
        "--T",
        "1",
        "--snapshots",
        "0.3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(off.0, 2);
}

#[test]
fn missing_diffusion_names_the_key() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.toml",
        &ZERO.replacen("diffusion = 0.1\n", "", 1),
    );
    let out = dir.path().join("out");
    let (code, _, err) = run(&[
        "simulate",
        cfg.to_str().unwrap(),
        "--T",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("diffusion"), "{err}");

    let unknown = write_config(
        dir.path(),
        "unknown.toml",
        &ZERO.replace("\"linear\"", "\"sir\""),
    );
    let (code, _, err) = run(&[
        "simulate",
        unknown.to_str().unwrap(),
        "--T",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn blowup_exits_three_with_time() {
    let dir = TempDir::new().unwrap();
    let body = r#"
[problem]
n = 1
length = 1.0
mesh_points = 9
delay_steps = 16

[[species]]
diffusion = 0.1
bc = "neumann"

[reaction]
catalog = "linear"
a = [[40.0]]

[initial]
profile = "constant"
values = [1.0]
"#;
    let cfg = write_config(dir.path(), "grow.toml", body);
    let out = dir.path().join("out");
    let (code, _, err) = run(&[
        "simulate",
        cfg.to_str().unwrap(),
        "--T",
        "100",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 3, "{err}");
    let report = fs::read_to_string(out.join("report.toml")).unwrap();
    assert!(
        report.contains("status = \"blowup\"") && report.contains("last_valid_time"),
        "{report}"
    );
}

#[test]
fn analyze_logistic_reports_persistence() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let cfg = config("delayed_logistic.toml");
    let (code, stdout, err) = run(&[
        "analyze",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("uniformly_persistent = true"), "{stdout}");
    let report: toml::Table = fs::read_to_string(out.join("report.toml"))
        .unwrap()
        .parse()
        .unwrap();
    let blocks = report["blocks"].as_table().unwrap();
    assert_eq!(blocks["k"].as_integer(), Some(1));
    assert_eq!(blocks["i"].as_array().unwrap()[0].as_integer(), Some(1));
    assert_eq!(blocks["j"].as_array().unwrap()[0].as_integer(), Some(1));
    let spectrum = &report["spectra"].as_array().unwrap()[0];
    for key in ["lower", "upper"] {
        let v = spectrum[key].as_float().unwrap();
        assert!((v - 1.0).abs() <= 2e-2, "{key} = {v}");
    }
    let verdict = report["verdict"].as_table().unwrap();
    assert_eq!(verdict["uniformly_persistent"].as_bool(), Some(true));
    assert_eq!(verdict["strictly_persistent_at_zero"].as_bool(), Some(true));
    let hash = report["manifest_sha256"].as_str().unwrap();
    for f in ["matrix.csv", "spectrum.csv"] {
        let text = fs::read_to_string(out.join(f)).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            format!("# manifest_sha256={hash}")
        );
    }
}

#[test]
fn analyze_decoupled_pair_with_decaying_block() {
    let dir = TempDir::new().unwrap();
    let body = r#"
[problem]
n = 2
length = 1.0
mesh_points = 17
delay_steps = 64

[[species]]
diffusion = 0.1
bc = "neumann"

[[species]]
diffusion = 0.1
bc = "neumann"

[reaction]
catalog = "linear"
a = [[0.3, 0.0], [0.0, -0.5]]
"#;
    let cfg = write_config(dir.path(), "pair.toml", body);
    let out = dir.path().join("out");
    let (code, stdout, err) = run(&[
        "analyze",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("k = 2, I = [1, 2], J = [1, 2]"), "{stdout}");
    assert!(
        stdout.contains("uniformly_persistent = false, strictly_persistent_at_zero = false"),
        "{stdout}"
    );

    let out = dir.path().join("three");
    let cfg = config("block_triangular.toml");
    let (code, stdout, err) = run(&[
        "analyze",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(
        stdout.contains(
            "I = [1], J = [2], uniformly_persistent = true, strictly_persistent_at_zero = false"
        ),
        "{stdout}"
    );
}

#[test]
fn forced_source_exits_four() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let cfg = config("forced_source.toml");
    let (code, _, err) = run(&[
        "analyze",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 4, "{err}");
    let (code, _, _) = run(&[
        "spectrum",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 4);
}

#[test]
fn check_suites_set_exit_codes() {
    let dir = TempDir::new().unwrap();
    let diag = r#"
[problem]
n = 2
length = 1.0
mesh_points = 17
delay_steps = 64

[[species]]
diffusion = 0.1
bc = "neumann"

[[species]]
diffusion = 0.05
bc = "dirichlet"

[reaction]
catalog = "linear"
a = [[-0.5, 0.0], [0.0, 0.2]]
"#;
    let cfg = write_config(dir.path(), "diag.toml", diag);
    let out = dir.path().join("cmp");
    let (code, stdout, err) = run(&[
        "check",
        cfg.to_str().unwrap(),
        "--suite",
        "comparison",
        "--seed",
        "1",
        "--cases",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("5 of 5"), "{stdout}");
    let text = fs::read_to_string(out.join("report.csv")).unwrap();
    assert_eq!(
        text.lines().nth(1),
        Some("check,case_id,pass,worst_margin,tolerance")
    );

    let out = dir.path().join("qm");
    let bad = config("not_quasimonotone.toml");
    let (code, _, err) = run(&[
        "check",
        bad.to_str().unwrap(),
        "--suite",
        "quasimonotone",
        "--seed",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("witness"), "{err}");

    let out = dir.path().join("lin");
    let coop = config("cooperative_lv.toml");
    let (code, _, err) = run(&[
        "check",
        coop.to_str().unwrap(),
        "--suite",
        "linearization",
        "--seed",
        "2",
        "--cases",
        "4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
}

#[test]
fn identical_runs_give_identical_files() {
    let dir = TempDir::new().unwrap();
    let cfg = config("cooperative_lv.toml");
    let outs: Vec<PathBuf> = (0..2).map(|i| dir.path().join(format!("run{i}"))).collect();
    for out in &outs {
        let (code, _, err) = run(&[
            "check",
            cfg.to_str().unwrap(),
            "--suite",
            "monotone",
            "--seed",
            "7",
            "--cases",
            "6",
            "--T",
            "1",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
    }
    let read = |o: &PathBuf, f: &str| fs::read(o.join(f)).unwrap();
    assert_eq!(read(&outs[0], "report.csv"), read(&outs[1], "report.csv"));
    // manifests differ only in out_dir, which the hash leaves out
    let hash_line = |o: &PathBuf| {
        String::from_utf8(read(o, "manifest.toml"))
            .unwrap()
            .lines()
            .next()
            .unwrap()
            .to_string()
    };
    assert_eq!(hash_line(&outs[0]), hash_line(&outs[1]));

    let other = dir.path().join("seed8");
    run(&[
        "check",
        cfg.to_str().unwrap(),
        "--suite",
        "monotone",
        "--seed",
        "8",
        "--cases",
        "6",
        "--T",
        "1",
        "--out",
        other.to_str().unwrap(),
    ]);
    let first_line = |o: &PathBuf| {
        String::from_utf8(read(o, "report.csv"))
            .unwrap()
            .lines()
            .next()
            .unwrap()
            .to_string()
    };
    assert_ne!(first_line(&outs[0]), first_line(&other));

    for out in &outs {
        let (code, _, _) = run(&[
            "simulate",
            cfg.to_str().unwrap(),
            "--T",
            "2",
            "--out",
            out.join("sim").to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
    }
    assert_eq!(
        read(&outs[0].join("sim"), "trajectory.csv"),
        read(&outs[1].join("sim"), "trajectory.csv")
    );
}

#[test]
fn restart_continues_the_run() {
    let dir = TempDir::new().unwrap();
    let cfg = config("cooperative_lv.toml");
    let whole = dir.path().join("whole");
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    let c = cfg.to_str().unwrap();
    assert_eq!(
        run(&[
            "simulate",
            c,
            "--T",
            "3",
            "--snapshots",
            "3",
            "--out",
            whole.to_str().unwrap()
        ])
        .0,
        0
    );
    assert_eq!(
        run(&[
            "simulate",
            c,
            "--T",
            "1",
            "--snapshots",
            "1",
            "--out",
            first.to_str().unwrap()
        ])
        .0,
        0
    );
    let state = first.join("state.bin");
    let (code, _, err) = run(&[
        "simulate",
        c,
        "--T",
        "2",
        "--snapshots",
        "2",
        "--restart",
        state.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let a = rows(&whole.join("trajectory.csv"));
    let b = rows(&second.join("trajectory.csv"));
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert!((x.0 - y.0).abs() < 1e-12);
        assert!((x.4 - y.4).abs() <= 1e-10, "{x:?} vs {y:?}");
    }
}
