// Copyright 2026 The robust-ghz Contributors
// SPDX-License-Identifier: Apache-2.0

//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any
//! fails. Tolerances and runtime budgets are fixed here.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use common::*;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use robust_ghz::control::{fidelity, fidelity_and_gradient, final_state, EvolutionConfig, GradientMethod};
use robust_ghz::device::{build_tls_star, build_transmon_star, ModelBuilder, StarGraphSpec, TlsStarBuilder, TransmonParams};
use robust_ghz::optim::{optimize_center, optimize_scp, robust_run, scp_minimax_step, OptimizerConfig, RobustMethod};
use robust_ghz::pulse::{PulseGrid, PulseSet};
use robust_ghz::robustness::{concavity_audit, enumerate_extreme_points, AuditConfig, RobustProblem, UncertaintyBox};
use robust_ghz::sensing::{default_theta_grid, leakage_trajectory, population_outside_qubit_subspace, sensing_curve, DERIVATIVE_FLOOR};
use robust_ghz::tensor::{krylov_expv, KrylovConfig, StateVector};

const JBAR: f64 = 2.0 * std::f64::consts::PI * 30e6;
const OMAX: f64 = 2.0 * std::f64::consts::PI * 150e6;

const GRADIENT_REL_TOL: f64 = 1e-4;
const FD_STEP: f64 = 1e-4;
const KRYLOV_TOL: f64 = 1e-10;
const CORNER_TOL: f64 = 1e-10;
const AVERAGE_TOL: f64 = 1e-12;
const SENSING_TOL: f64 = 1e-10;
const SHOT_NOISE_TOL: f64 = 0.01;
const CENTER_TARGET: f64 = 1.0 - 1e-7;
const ROBUST_MARGIN: f64 = 0.005;
const AUDIT_SAMPLES: usize = 10_000;
const LEAKAGE_TOL: f64 = 1e-9;
const MONOTONE_TOL: f64 = 1e-10;
const LP_TOL: f64 = 1e-10;

struct Outcome {
    passed: bool,
    detail: String,
}

fn check(id: u32, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= budget;
    let passed = out.passed && in_time;
    println!(
        "criterion {id} {name}: {} ({}; {:.1} s of {} s)",
        if passed { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    passed
}

fn central_difference(pulse: &PulseSet<f64>, model: &robust_ghz::device::DeviceModel<f64>, tg: &StateVector<f64>, k: usize) -> f64 {
    let h = FD_STEP * pulse.amplitude_bound();
    let cfg = EvolutionConfig::default();
    let at = |s: f64| {
        let mut a = pulse.amplitudes().to_vec();
        a[k] += s;
        let p = PulseSet::new(*pulse.grid(), pulse.channels(), a, 2.0 * pulse.amplitude_bound()).unwrap();
        fidelity(&p, model, tg, &cfg).unwrap()
    };
    (at(h) - at(-h)) / (2.0 * h)
}

fn refine(base: &PulseSet<f64>, rep: usize) -> PulseSet<f64> {
    let amps = (0..base.bins())
        .flat_map(|b| std::iter::repeat_n(base.bin(b).to_vec(), rep).flatten())
        .collect();
    PulseSet::new(PulseGrid::new(base.grid().total_time(), base.bins() * rep).unwrap(), 1, amps, base.amplitude_bound()).unwrap()
}

fn gradient_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let tg = StateVector::ghz(2, 3).unwrap();
    let mut worst = 0.0f64;
    for seed in 0..5 {
        let j = (0..2).map(|_| JBAR * rng.gen_range(0.95..1.05)).collect();
        let model = build_tls_star(&StarGraphSpec::new(3, 2, 0, j).unwrap()).unwrap();
        let pulse = PulseSet::random(PulseGrid::new(1.0 / JBAR, 5).unwrap(), 1, OMAX, 0.5, seed).unwrap();
        let (_, g) = fidelity_and_gradient(&pulse, &model, &tg, &EvolutionConfig::default()).unwrap();
        for (k, &gk) in g.iter().enumerate() {
            let fd = central_difference(&pulse, &model, &tg, k);
            worst = worst.max((gk - fd).abs() / fd.abs());
        }
    }

    // Δt-scaling of the truncated propagator derivative on a refined pulse
    let model = build_tls_star(&StarGraphSpec::new(3, 2, 0, vec![JBAR, 1.02 * JBAR]).unwrap()).unwrap();
    let base = PulseSet::random(PulseGrid::new(1.0 / JBAR, 5).unwrap(), 1, OMAX, 0.1, 3).unwrap();
    let truncated = EvolutionConfig { gradient: GradientMethod::SecondOrder, ..Default::default() };
    let errors: Vec<f64> = [1, 2, 4]
        .iter()
        .map(|&rep| {
            let p = refine(&base, rep);
            let exact = fidelity_and_gradient(&p, &model, &tg, &EvolutionConfig::default()).unwrap().1;
            let approx = fidelity_and_gradient(&p, &model, &tg, &truncated).unwrap().1;
            let num: f64 = approx.iter().zip(&exact).map(|(a, b)| (a - b).powi(2)).sum();
            let den: f64 = exact.iter().map(|b| b * b).sum();
            (num / den).sqrt()
        })
        .collect();
    let ratios = [errors[0] / errors[1], errors[1] / errors[2]];
    Outcome {
        passed: worst < GRADIENT_REL_TOL && ratios.iter().all(|&r| r >= 4.0),
        detail: format!("max relative error {worst:.2e}, error ratios per m doubling {:.3} {:.3}", ratios[0], ratios[1]),
    }
}

fn krylov_correctness() -> Outcome {
    const SHAPES: [(usize, usize); 13] = [
        (2, 1), (2, 2), (2, 3), (2, 4), (2, 5), (2, 6), (2, 7), (2, 8),
        (3, 1), (3, 2), (3, 3), (3, 4), (3, 5),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let cfg = KrylovConfig::default();
    let mut worst = 0.0f64;
    let mut largest = 0;
    for _ in 0..100 {
        let (levels, sites) = SHAPES[rng.gen_range(0..SHAPES.len())];
        let dim = levels.pow(sites as u32);
        largest = largest.max(dim);
        let density = rng.gen_range(0.02..0.5);
        let h = random_hermitian(&mut rng, dim, density, 1.0);
        let psi = random_state(&mut rng, levels, sites);
        let reach = 10f64.powf(rng.gen_range(-2.0..1.3));
        let dt = reach / row_sum_norm(&h).max(1e-12) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let got = krylov_expv(&h, &psi, dt, &cfg).unwrap();
        let want = expm_hermitian(&dense(&h), dt) * column(&psi);
        worst = worst.max(max_abs_diff(got.amplitudes(), want.as_slice()));
    }
    Outcome {
        passed: worst < KRYLOV_TOL && largest <= 256,
        detail: format!("max deviation {worst:.2e} over 100 draws, dimensions up to {largest}"),
    }
}

fn symmetry_reduction() -> Outcome {
    let b = UncertaintyBox::from_fraction(JBAR, 0.05, 3).unwrap();
    let builder = TlsStarBuilder { site_count: 4 };
    let tg = StateVector::ghz(2, 4).unwrap();
    let cfg = EvolutionConfig::default();
    let problem = RobustProblem::new(b, &builder, tg.clone(), cfg).unwrap();
    let pulse = PulseSet::random(PulseGrid::new(100e-9, 40).unwrap(), 1, OMAX, 0.5, 21).unwrap();
    let report = problem.evaluate(&pulse).unwrap();
    let corners = enumerate_extreme_points(&b).unwrap();
    let mut corner_dev = 0.0f64;
    let mut plain = 0.0;
    for c in &corners {
        let f = fidelity(&pulse, &builder.build(c).unwrap(), &tg, &cfg).unwrap();
        let high = c.iter().filter(|&&j| j == b.high()).count();
        let g = report.groups.iter().find(|g| g.high_count == high).unwrap();
        corner_dev = corner_dev.max((f - g.fidelity).abs());
        plain += f / corners.len() as f64;
    }
    let avg_dev = (plain - report.average).abs();
    Outcome {
        passed: corners.len() == 8 && corner_dev < CORNER_TOL && avg_dev < AVERAGE_TOL,
        detail: format!("{} corners in {} groups, corner deviation {corner_dev:.2e}, average deviation {avg_dev:.2e}", corners.len(), report.groups.len()),
    }
}

fn sensing_identities() -> Outcome {
    let mut worst = 0.0f64;
    let mut shot = Vec::new();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for n in [2, 4, 8] {
        let nf = n as f64;
        let grid: Vec<f64> = default_theta_grid(n);
        let c = sensing_curve(&StateVector::ghz(2, n).unwrap(), &grid, DERIVATIVE_FLOOR);
        for k in 0..c.len() {
            worst = worst.max((c.expect_m[k] - (nf * grid[k]).cos()).abs());
            if let Some(v) = c.var_theta[k] {
                worst = worst.max((v - 1.0 / (nf * nf)).abs());
            }
        }
        let product = StateVector::product(n, &[Complex64::new(r, 0.0), Complex64::new(r, 0.0)]).unwrap();
        let c = sensing_curve(&product, &grid, DERIVATIVE_FLOOR);
        for k in 0..c.len() {
            worst = worst.max((c.expect_m[k] - grid[k].cos().powi(n as i32)).abs());
        }
        let small = sensing_curve(&product, &[1e-3], DERIVATIVE_FLOOR);
        shot.push(small.var_theta[0].map(|v| v * nf).unwrap_or(f64::NAN));
    }
    let shot_ok = shot.iter().all(|s| (s - 1.0).abs() < SHOT_NOISE_TOL);
    Outcome {
        passed: worst < SENSING_TOL && shot_ok,
        detail: format!("max identity deviation {worst:.2e}, N·var_theta at 1e-3 rad {shot:.5?}"),
    }
}

fn desk_end_to_end() -> Outcome {
    let b = UncertaintyBox::from_fraction(JBAR, 0.05, 3).unwrap();
    let builder = TlsStarBuilder { site_count: 4 };
    let tg = StateVector::ghz(2, 4).unwrap();
    let evo = EvolutionConfig::default();
    let problem = RobustProblem::new(b, &builder, tg.clone(), evo).unwrap();
    let cfg = OptimizerConfig::default();
    let grid = PulseGrid::new(100e-9, 40).unwrap();
    let run = robust_run(grid, OMAX, &problem, &cfg, RobustMethod::Scp, 0).unwrap();
    let center = run.center.fidelity;
    let nonrobust = problem.evaluate(&run.center.pulse).unwrap().worst_case;
    let robust = run.report.worst_case;
    let audit_cfg = AuditConfig { samples: AUDIT_SAMPLES, ..Default::default() };
    let audit = concavity_audit(&run.pulse, &b, &builder, &tg, &evo, robust, &audit_cfg).unwrap();
    Outcome {
        passed: center >= CENTER_TARGET && robust - nonrobust >= ROBUST_MARGIN && audit.passed,
        detail: format!(
            "center 1-F {:.2e}, worst case robust {robust:.5} vs non-robust {nonrobust:.5}, audit {} ({} samples, min {:.5})",
            1.0 - center,
            if audit.passed { "passed" } else { "failed" },
            audit.samples,
            audit.min_sampled
        ),
    }
}

fn transmon_leakage() -> Outcome {
    let params = TransmonParams::<f64>::default();
    let model = build_transmon_star(&StarGraphSpec::new(3, 3, 0, vec![JBAR, JBAR]).unwrap(), &params).unwrap();
    let tg = StateVector::ghz(3, 3).unwrap();
    let evo = EvolutionConfig::default();
    let grid = PulseGrid::new(100e-9, 40).unwrap();
    let start = PulseSet::random(grid, 1, OMAX, 0.1, 0).unwrap();
    let opt = optimize_center(&start, &model, &tg, &evo, &OptimizerConfig::default()).unwrap();
    let traj = leakage_trajectory(&opt.pulse, &model, &evo).unwrap();
    let psi = final_state(&opt.pulse, &model, &evo).unwrap();
    let f = fidelity(&opt.pulse, &model, &tg, &evo).unwrap();
    let deficit = population_outside_qubit_subspace(&psi);
    let p2 = *traj.last().unwrap();
    let structural = f <= 1.0 - deficit + LEAKAGE_TOL;
    let consistent = deficit <= p2 + LEAKAGE_TOL && p2 <= 3.0 * deficit + LEAKAGE_TOL;
    Outcome {
        passed: traj.len() == grid.bins() + 1 && structural && consistent,
        detail: format!(
            "{} samples of P2(t), F {f:.9}, final P2 {p2:.3e}, outside-subspace population {deficit:.3e}, peak P2 {:.3e}",
            traj.len(),
            traj.iter().copied().fold(0.0, f64::max)
        ),
    }
}

fn scp_mechanics() -> Outcome {
    let b = UncertaintyBox::from_fraction(JBAR, 0.1, 2).unwrap();
    let problem = RobustProblem::new(b, &TlsStarBuilder { site_count: 3 }, StateVector::ghz(2, 3).unwrap(), EvolutionConfig::default()).unwrap();
    let start = PulseSet::random(PulseGrid::new(1.0 / 30e6, 12).unwrap(), 1, OMAX, 0.3, 5).unwrap();
    let cfg = OptimizerConfig { max_iters: 40, ..Default::default() };
    let (_, trace) = optimize_scp(&start, &problem, &cfg).unwrap();
    let mut schedule_ok = trace.rows.get(1).is_some_and(|r| r.trust_scale == 1.0);
    let mut monotone_ok = true;
    let (mut accepted, mut rejected) = (0, 0);
    for w in trace.rows.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.iter > 0 {
            let want = if a.accepted { a.trust_scale * 1.15 } else { a.trust_scale / 2.0 };
            schedule_ok &= (b.trust_scale - want).abs() <= 1e-12 * want;
        }
        if b.accepted {
            accepted += 1;
            monotone_ok &= b.worst_case >= a.worst_case - MONOTONE_TOL;
        } else {
            rejected += 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut lp_dev = 0.0f64;
    for _ in 0..50 {
        let n = rng.gen_range(1..40);
        let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let lo: Vec<f64> = (0..n).map(|_| -rng.gen_range(0.0..1.0)).collect();
        let hi: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let step = scp_minimax_step(std::slice::from_ref(&g), &lo, &hi).unwrap();
        let closed: f64 = g.iter().zip(lo.iter().zip(&hi)).map(|(&gk, (&l, &h))| if gk > 0.0 { gk * h } else { gk * l }).sum();
        lp_dev = lp_dev.max((step.t - closed).abs());
    }
    Outcome {
        passed: schedule_ok && monotone_ok && accepted > 0 && lp_dev < LP_TOL,
        detail: format!("{accepted} accepted and {rejected} rejected steps, schedule exact {schedule_ok}, monotone {monotone_ok}, LP deviation {lp_dev:.2e}"),
    }
}

fn payload_files(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().is_some_and(|n| n != "manifest.json") {
                let rel = p.strip_prefix(root).unwrap().display().to_string();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("config.json");
    std::fs::write(
        &config,
        r#"{
  "device": {"sites": 3, "bins": 12, "duration_s": 5e-8},
  "uncertainty": {"delta_j": [0.0, 0.05]},
  "optimizer": {"max_iters": 10, "seed_count": 2, "center_max_iters": 300},
  "audit": {"samples": 100}
}"#,
    )
    .unwrap();
    let mut runs = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_robust-ghz"))
            .args(["sweep", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        runs.push((status.success(), payload_files(&out)));
    }
    let identical = runs[0].1 == runs[1].1;
    let count = runs[0].1.len();
    Outcome {
        passed: runs.iter().all(|r| r.0) && identical && count >= 12,
        detail: format!("{count} payload files, byte-identical {identical}"),
    }
}

fn main() -> ExitCode {
    let mins = |m: u64| Duration::from_secs(60 * m);
    let results = [
        check(1, "gradient correctness", Duration::from_secs(10), gradient_correctness),
        check(2, "Krylov correctness", Duration::from_secs(30), krylov_correctness),
        check(3, "symmetry reduction", Duration::from_secs(10), symmetry_reduction),
        check(4, "sensing identities", Duration::from_secs(5), sensing_identities),
        check(5, "desk-scale robust control", mins(30), desk_end_to_end),
        check(6, "transmon leakage", mins(20), transmon_leakage),
        check(7, "SCP mechanics", mins(5), scp_mechanics),
        check(8, "determinism", mins(10), determinism),
    ];
    let failed = results.iter().filter(|&&p| !p).count();
    println!("acceptance: {} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
