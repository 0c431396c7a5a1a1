// Copyright 2026 The robust-ghz Contributors
// SPDX-License-Identifier: Apache-2.0

//! `sweep`, `sense`, `pulsefig` and `audit`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use num_complex::Complex64;

use robust_ghz::control::{final_state, EvolutionConfig};
use robust_ghz::device::DeviceModel;
use robust_ghz::optim::{multistart, optimize_average, optimize_center, optimize_scp, OptimizerConfig, RobustMethod};
use robust_ghz::pulse::{PulseSet, Quadrature};
use robust_ghz::robustness::{concavity_audit, RobustProblem};
use robust_ghz::sensing::{leakage_trajectory, sensing_curve, theta_grid};
use robust_ghz::tensor::StateVector;

use crate::artifacts::{to_json, write_manifest, Arm, ArmReport, Artifact, CenterReport, Job, Kind, Runner};
use crate::config::{level_dir, ExperimentConfig, Setup, StateSelection};

const CENTER_PULSE: &str = "center/pulse.json";
const CENTER_REPORT: &str = "center/report.json";

pub fn arm_pulse_path(fraction: f64, arm: Arm) -> PathBuf {
    Path::new(&level_dir(fraction)).join(arm.name()).join("pulse.json")
}

pub fn arm_report_path(fraction: f64, arm: Arm) -> PathBuf {
    Path::new(&level_dir(fraction)).join(arm.name()).join("report.json")
}

pub fn arm_trace_path(fraction: f64) -> PathBuf {
    Path::new(&level_dir(fraction)).join("robust").join("trace.csv")
}

fn load_pulse(root: &Path, rel: &Path) -> Result<PulseSet<f64>> {
    let path = root.join(rel);
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("missing pulse artifact {} (run `sweep` first)", path.display()))?;
    PulseSet::from_json(&text).with_context(|| format!("reading pulse {}", path.display()))
}

fn channels(setup: &Setup) -> Result<usize> {
    Ok(setup.problem(0.0)?.center_model().channels())
}

/// Optimizes the non-robust reference at `J̄`, then per level runs the
/// robust arm and evaluates the reference. Returns whether every job
/// succeeded.
pub fn sweep(cfg: &ExperimentConfig, force: bool) -> Result<bool> {
    let setup = cfg.validate()?;
    let root = cfg.output.as_path();
    let runner = Runner { root, force };
    let seeds = cfg.seeds();

    let center = Job {
        name: "center".into(),
        delta_j: None,
        arm: Some(Arm::Nonrobust),
        seeds: vec![seeds[0]],
        outputs: vec![(CENTER_PULSE.into(), Kind::Pulse), (CENTER_REPORT.into(), Kind::CenterReport)],
        run: Box::new(|| center_job(&setup, seeds[0])),
    };
    let mut records = runner.run_all(&[center]);

    let mut jobs = Vec::new();
    for &f in &cfg.uncertainty.delta_j {
        for arm in Arm::BOTH {
            let mut outputs = vec![(arm_pulse_path(f, arm), Kind::Pulse), (arm_report_path(f, arm), Kind::ArmReport)];
            if arm == Arm::Robust {
                outputs.push((arm_trace_path(f), Kind::Trace));
            }
            let (setup, seeds) = (&setup, &seeds);
            jobs.push(Job {
                name: format!("{}/{}", level_dir(f), arm.name()),
                delta_j: Some(f),
                arm: Some(arm),
                seeds: if arm == Arm::Robust { seeds.clone() } else { vec![seeds[0]] },
                outputs,
                run: Box::new(move || match arm {
                    Arm::Robust => robust_job(cfg, setup, f, seeds),
                    Arm::Nonrobust => nonrobust_job(cfg, setup, f),
                }),
            });
        }
    }
    records.extend(runner.run_all(&jobs));
    write_manifest(root, "sweep", cfg, records)
}

fn center_job(setup: &Setup, seed: u64) -> Result<Vec<Artifact>> {
    let problem = setup.problem(0.0)?;
    let model = problem.center_model();
    let start = PulseSet::random(setup.grid, model.channels(), setup.amplitude_bound, setup.optimizer.initial_fraction, seed)?;
    let r = optimize_center(&start, model, &setup.target, &setup.evolution, &setup.optimizer)?;
    let report = CenterReport {
        seed,
        fidelity: r.fidelity,
        iterations: r.iterations,
        termination: r.termination,
        converged: r.converged,
    };
    Ok(vec![
        Artifact::new(CENTER_PULSE, r.pulse.to_json()?, Kind::Pulse),
        Artifact::new(CENTER_REPORT, to_json(&report)?, Kind::CenterReport),
    ])
}

fn audited(cfg: &ExperimentConfig, setup: &Setup, problem: &RobustProblem<f64>, pulse: &PulseSet<f64>) -> Result<robust_ghz::robustness::FidelityReport> {
    let mut report = problem.evaluate(pulse)?;
    if cfg.audit.enabled {
        report.audit = Some(concavity_audit(
            pulse,
            problem.uncertainty(),
            &setup.builder,
            &setup.target,
            &setup.evolution,
            report.worst_case,
            &cfg.audit.config(),
        )?);
    }
    Ok(report)
}

fn robust_job(cfg: &ExperimentConfig, setup: &Setup, f: f64, seeds: &[u64]) -> Result<Vec<Artifact>> {
    let problem = setup.problem(f)?;
    let method = cfg.optimizer.method;
    let (pulse, trace, best_seed, start_worst_cases) = if f == 0.0 {
        // With a point box the robust objective is the center fidelity,
        // which the reference pulse already maximizes to target.
        let center = load_pulse(&cfg.output, Path::new(CENTER_PULSE))?;
        let idle = OptimizerConfig { max_iters: 0, ..setup.optimizer.clone() };
        let (pulse, trace) = match method {
            RobustMethod::Scp => optimize_scp(&center, &problem, &idle)?,
            RobustMethod::Average => optimize_average(&center, &problem, &idle)?,
        };
        let worst = problem.evaluate(&pulse)?.worst_case;
        (pulse, trace, seeds[0], vec![worst])
    } else {
        let (best, runs) = multistart(setup.grid, setup.amplitude_bound, &problem, &setup.optimizer, method, seeds)?;
        let worst: Vec<f64> = runs.iter().map(|r| r.report.worst_case).collect();
        let run = runs.into_iter().nth(best).expect("best index in range");
        (run.pulse, run.trace, run.seed, worst)
    };
    let report = ArmReport {
        delta_j: f,
        arm: Arm::Robust,
        method: Some(method),
        seeds: seeds.to_vec(),
        best_seed,
        start_worst_cases,
        center_fidelity: problem.center_fidelity(&pulse)?,
        termination: Some(trace.termination),
        iterations: trace.rows.len() - 1,
        fidelity: audited(cfg, setup, &problem, &pulse)?,
    };
    Ok(vec![
        Artifact::new(arm_pulse_path(f, Arm::Robust), pulse.to_json()?, Kind::Pulse),
        Artifact::new(arm_report_path(f, Arm::Robust), to_json(&report)?, Kind::ArmReport),
        Artifact::new(arm_trace_path(f), trace.to_csv(), Kind::Trace),
    ])
}

fn nonrobust_job(cfg: &ExperimentConfig, setup: &Setup, f: f64) -> Result<Vec<Artifact>> {
    let problem = setup.problem(f)?;
    let pulse = load_pulse(&cfg.output, Path::new(CENTER_PULSE))?;
    let fidelity = audited(cfg, setup, &problem, &pulse)?;
    let report = ArmReport {
        delta_j: f,
        arm: Arm::Nonrobust,
        method: None,
        seeds: vec![cfg.seeds()[0]],
        best_seed: cfg.seeds()[0],
        start_worst_cases: vec![fidelity.worst_case],
        center_fidelity: problem.center_fidelity(&pulse)?,
        termination: None,
        iterations: 0,
        fidelity,
    };
    Ok(vec![
        Artifact::new(arm_pulse_path(f, Arm::Nonrobust), pulse.to_json()?, Kind::Pulse),
        Artifact::new(arm_report_path(f, Arm::Nonrobust), to_json(&report)?, Kind::ArmReport),
    ])
}

/// Device model whose end-of-pulse state feeds sensing and leakage output.
pub fn selected_model(problem: &RobustProblem<f64>, pulse: &PulseSet<f64>, selection: StateSelection) -> Result<DeviceModel<f64>> {
    match selection {
        StateSelection::Center => Ok(problem.center_model().clone()),
        StateSelection::WorstCase => {
            let r = problem.evaluate(pulse)?;
            Ok(problem.models()[r.worst_index()].clone())
        }
        StateSelection::Group(id) => problem
            .groups()
            .iter()
            .position(|g| g.id == id)
            .map(|k| problem.models()[k].clone())
            .ok_or_else(|| anyhow!("no extreme-point group with id {id}")),
    }
}

fn product_plus(levels: usize, sites: usize) -> Result<StateVector<f64>> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut local = vec![Complex64::new(0.0, 0.0); levels];
    local[0] = Complex64::new(r, 0.0);
    local[1] = Complex64::new(r, 0.0);
    Ok(StateVector::product(sites, &local)?)
}

/// Sensing curves for both arms plus the ideal GHZ and product references.
pub fn sense(cfg: &ExperimentConfig, force: bool) -> Result<bool> {
    let setup = cfg.validate()?;
    let root = cfg.output.as_path();
    let out = root.join("sensing");
    let runner = Runner { root: &out, force };
    let (levels, sites) = (cfg.device.levels, cfg.device.sites);
    let thetas: Vec<f64> = theta_grid(sites, cfg.sensing.grid_points);
    let floor = cfg.sensing.derivative_floor;

    let jobs: Vec<Job<'_>> = cfg
        .uncertainty
        .delta_j
        .iter()
        .map(|&f| {
            let dir = PathBuf::from(level_dir(f));
            let names = ["robust", "nonrobust", "ideal_ghz", "product"];
            let (setup, thetas) = (&setup, &thetas);
            Job {
                name: format!("sensing/{}", level_dir(f)),
                delta_j: Some(f),
                arm: None,
                seeds: cfg.seeds(),
                outputs: names.iter().map(|n| (dir.join(format!("{n}.csv")), Kind::Sensing)).collect(),
                run: Box::new(move || {
                    let problem = setup.problem(f)?;
                    let mut states = Vec::new();
                    for arm in Arm::BOTH {
                        let pulse = load_pulse(root, &arm_pulse_path(f, arm))?;
                        let model = selected_model(&problem, &pulse, cfg.sensing.state)?;
                        states.push(final_state(&pulse, &model, &setup.evolution)?);
                    }
                    states.push(StateVector::ghz(levels, sites)?);
                    states.push(product_plus(levels, sites)?);
                    Ok(names
                        .iter()
                        .zip(&states)
                        .map(|(n, psi)| {
                            let curve = sensing_curve(psi, thetas, floor);
                            Artifact::new(dir.join(format!("{n}.csv")), curve.to_csv(), Kind::Sensing)
                        })
                        .collect())
                }),
            }
        })
        .collect();
    let records = runner.run_all(&jobs);
    write_manifest(&out, "sense", cfg, records)
}

/// Per-bin amplitudes (rad/s) and, for three-level models, the summed
/// level-2 population at every bin boundary. Three-level tables have one
/// more row than bins; its amplitude cells are empty.
pub fn pulse_figure_csv(pulse: &PulseSet<f64>, model: &DeviceModel<f64>, evolution: &EvolutionConfig<f64>) -> Result<String> {
    let transmon = model.levels() == 3;
    let mut header = Vec::new();
    let mut units = Vec::new();
    for c in 0..pulse.channels() {
        header.push(format!("omega_x_{c}"));
        header.push(format!("omega_y_{c}"));
        units.extend(["rad/s", "rad/s"]);
    }
    let leak = if transmon {
        header.push("p2".into());
        units.push("1");
        Some(leakage_trajectory(pulse, model, evolution)?)
    } else {
        None
    };
    let mut out = format!("{}\n{}\n", header.join(","), units.join(","));
    let rows = if transmon { pulse.bins() + 1 } else { pulse.bins() };
    for k in 0..rows {
        let mut cells = Vec::with_capacity(header.len());
        for c in 0..pulse.channels() {
            for q in [Quadrature::X, Quadrature::Y] {
                cells.push(if k < pulse.bins() { format!("{:e}", pulse.get(k, c, q)) } else { String::new() });
            }
        }
        if let Some(l) = &leak {
            cells.push(format!("{:e}", l[k]));
        }
        let _ = writeln!(out, "{}", cells.join(","));
    }
    Ok(out)
}

pub fn pulse_figure_columns(channels: usize, levels: usize) -> usize {
    2 * channels + usize::from(levels == 3)
}

pub fn pulsefig(cfg: &ExperimentConfig, force: bool) -> Result<bool> {
    let setup = cfg.validate()?;
    let root = cfg.output.as_path();
    let out = root.join("pulsefig");
    let runner = Runner { root: &out, force };
    let width = pulse_figure_columns(channels(&setup)?, cfg.device.levels);
    let mut jobs = Vec::new();
    for &f in &cfg.uncertainty.delta_j {
        for arm in Arm::BOTH {
            let rel = Path::new(&level_dir(f)).join(format!("{}.csv", arm.name()));
            let setup = &setup;
            jobs.push(Job {
                name: format!("pulsefig/{}/{}", level_dir(f), arm.name()),
                delta_j: Some(f),
                arm: Some(arm),
                seeds: cfg.seeds(),
                outputs: vec![(rel.clone(), Kind::PulseFigure(width))],
                run: Box::new(move || {
                    let problem = setup.problem(f)?;
                    let pulse = load_pulse(root, &arm_pulse_path(f, arm))?;
                    let model = selected_model(&problem, &pulse, cfg.sensing.state)?;
                    let csv = pulse_figure_csv(&pulse, &model, &setup.evolution)?;
                    Ok(vec![Artifact::new(rel.clone(), csv, Kind::PulseFigure(width))])
                }),
            });
        }
    }
    let records = runner.run_all(&jobs);
    write_manifest(&out, "pulsefig", cfg, records)
}

/// Re-runs the sampling audit on every stored pulse. A failing audit still
/// writes its report; the job is marked failed.
pub fn audit(cfg: &ExperimentConfig, force: bool) -> Result<bool> {
    let setup = cfg.validate()?;
    let root = cfg.output.as_path();
    let out = root.join("audit");
    let runner = Runner { root: &out, force };
    let mut jobs = Vec::new();
    for &f in &cfg.uncertainty.delta_j {
        for arm in Arm::BOTH {
            let rel = Path::new(&level_dir(f)).join(format!("{}.json", arm.name()));
            let setup = &setup;
            jobs.push(Job {
                name: format!("audit/{}/{}", level_dir(f), arm.name()),
                delta_j: Some(f),
                arm: Some(arm),
                seeds: vec![cfg.audit.seed],
                outputs: vec![(rel.clone(), Kind::Audit)],
                run: Box::new(move || {
                    let problem = setup.problem(f)?;
                    let pulse = load_pulse(root, &arm_pulse_path(f, arm))?;
                    let worst = problem.evaluate(&pulse)?.worst_case;
                    let report = concavity_audit(
                        &pulse,
                        problem.uncertainty(),
                        &setup.builder,
                        &setup.target,
                        &setup.evolution,
                        worst,
                        &cfg.audit.config(),
                    )?;
                    Ok(vec![Artifact::new(rel.clone(), to_json(&report)?, Kind::Audit)])
                }),
            });
        }
    }
    let records = runner.run_all(&jobs);
    write_manifest(&out, "audit", cfg, records)
}
