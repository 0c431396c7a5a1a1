// Copyright 2026 The robust-ghz Contributors
// SPDX-License-Identifier: Apache-2.0

use std::path::Path;
use std::process::Command;

use robust_ghz::control::EvolutionConfig;
use robust_ghz::device::{build_tls_star, build_transmon_star, StarGraphSpec, TransmonParams};
use robust_ghz::pulse::{PulseGrid, PulseSet};
use robust_ghz_cli::artifacts::{ArmReport, JobStatus, Manifest};
use robust_ghz_cli::commands::{pulse_figure_columns, pulse_figure_csv};

const SMALL: &str = r#"{
  "device": {"sites": 3, "bins": 10, "duration_s": 5e-8},
  "uncertainty": {"delta_j": [0.0, 0.04]},
  "optimizer": {"max_iters": 5, "center_max_iters": 300},
  "audit": {"samples": 50},
  "sensing": {"grid_points": 21}
}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_robust-ghz"))
}

fn run(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> std::process::ExitStatus {
    bin()
        .arg(sub)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .status()
        .unwrap()
}

fn manifest(path: &Path) -> Manifest {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn report(out: &Path, level: &str, arm: &str) -> ArmReport {
    serde_json::from_str(&std::fs::read_to_string(out.join(level).join(arm).join("report.json")).unwrap()).unwrap()
}

#[test]
fn sweep_then_downstream_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    std::fs::write(&cfg, SMALL).unwrap();
    let out = tmp.path().join("out");
    assert!(run("sweep", &cfg, &out, &[]).success());

    let m = manifest(&out.join("manifest.json"));
    assert!(m.all_ok);
    let reports: Vec<_> = m.jobs.iter().filter(|j| j.arm.is_some() && j.delta_j.is_some()).collect();
    assert_eq!(reports.len(), 4);
    for j in &reports {
        assert_eq!(j.status, JobStatus::Ok);
        assert_eq!(j.files.keys().filter(|k| k.ends_with("report.json")).count(), 1);
        assert!(j.files.values().all(|h| h.len() == 64));
    }

    // a point box leaves nothing to trade off
    let (r, n) = (report(&out, "dj_0", "robust"), report(&out, "dj_0", "nonrobust"));
    assert_eq!(r.fidelity.worst_case, n.fidelity.worst_case);
    assert_eq!(r.fidelity.worst_case, r.center_fidelity);
    let (r, n) = (report(&out, "dj_0.04", "robust"), report(&out, "dj_0.04", "nonrobust"));
    assert!(r.fidelity.worst_case >= n.fidelity.worst_case);
    assert!(r.fidelity.audit.as_ref().unwrap().passed);

    // resume skips, --force recomputes identical payloads
    assert!(run("sweep", &cfg, &out, &[]).success());
    let again = manifest(&out.join("manifest.json"));
    assert!(again.jobs.iter().all(|j| j.status == JobStatus::Skipped));
    assert!(run("sweep", &cfg, &out, &["--force"]).success());
    let forced = manifest(&out.join("manifest.json"));
    assert!(forced.jobs.iter().all(|j| j.status == JobStatus::Ok));
    for (a, b) in m.jobs.iter().zip(&forced.jobs) {
        assert_eq!(a.files, b.files);
    }

    assert!(run("sense", &cfg, &out, &[]).success());
    let ghz = std::fs::read_to_string(out.join("sensing/dj_0.04/ideal_ghz.csv")).unwrap();
    let rows: Vec<&str> = ghz.lines().skip(2).collect();
    assert_eq!(rows.len(), 21);
    for row in rows {
        let vt: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
        assert!((vt - 1.0 / 9.0).abs() < 1e-10);
    }
    assert!(out.join("sensing/dj_0.04/product.csv").is_file());

    assert!(run("pulsefig", &cfg, &out, &[]).success());
    let fig = std::fs::read_to_string(out.join("pulsefig/dj_0.04/robust.csv")).unwrap();
    assert_eq!(fig.lines().next(), Some("omega_x_0,omega_y_0"));
    assert_eq!(fig.lines().count(), 2 + 10);

    assert!(run("audit", &cfg, &out, &[]).success());
    assert!(manifest(&out.join("audit/manifest.json")).all_ok);
}

#[test]
fn missing_pulses_fail_with_the_expected_path() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    std::fs::write(&cfg, SMALL).unwrap();
    let out = tmp.path().join("empty");
    let status = run("sense", &cfg, &out, &[]);
    assert_eq!(status.code(), Some(1));
    let m = manifest(&out.join("sensing/manifest.json"));
    assert!(!m.all_ok);
    let err = m.jobs[0].error.as_deref().unwrap();
    assert!(err.contains("dj_0/robust/pulse.json"), "{err}");
}

#[test]
fn bad_configs_are_rejected_before_running() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    std::fs::write(&cfg, r#"{"device": {"sites": 3}, "uncertainty": {"delta_j": [0]}, "colour": "red"}"#).unwrap();
    let out = tmp.path().join("o");
    assert_eq!(run("sweep", &cfg, &out, &[]).code(), Some(2));
    std::fs::write(&cfg, SMALL).unwrap();
    assert_eq!(run("sweep", &cfg, &out, &["--levels", "5"]).code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn pulse_figure_layout() {
    let evo = EvolutionConfig::default();
    let j = 2.0 * std::f64::consts::PI * 30e6;
    let zero = PulseSet::zeros(PulseGrid::new(5e-8, 6).unwrap(), 1, 1e9).unwrap();

    let tls = build_tls_star(&StarGraphSpec::new(3, 2, 0, vec![j, j]).unwrap()).unwrap();
    let csv = pulse_figure_csv(&zero, &tls, &evo).unwrap();
    assert_eq!(csv.lines().next().unwrap().split(',').count(), pulse_figure_columns(1, 2));
    assert!(csv.lines().skip(2).flat_map(|l| l.split(',')).all(|c| c.parse::<f64>().unwrap() == 0.0));

    let tr = build_transmon_star(&StarGraphSpec::new(3, 3, 0, vec![j, j]).unwrap(), &TransmonParams::default()).unwrap();
    let csv = pulse_figure_csv(&zero, &tr, &evo).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "omega_x_0,omega_y_0,p2");
    assert_eq!(lines[1], "rad/s,rad/s,1");
    assert_eq!(lines.len(), 2 + 7);
    assert_eq!(pulse_figure_columns(1, 3), 3);
    for l in &lines[2..] {
        assert_eq!(l.split(',').next_back().unwrap().parse::<f64>().unwrap(), 0.0);
    }
    assert_eq!(lines[8], ",,0e0");
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        let cfg = robust_ghz_cli::config::ExperimentConfig::load(&p).unwrap();
        cfg.validate().unwrap_or_else(|e| panic!("{}: {e:#}", p.display()));
        seen += 1;
    }
    assert!(seen >= 4);
}
