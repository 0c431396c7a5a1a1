// Copyright 2026 The robust-ghz Contributors
// SPDX-License-Identifier: Apache-2.0

//! Pulse optimization: center-point ascent, max-min sequential convex
//! programming over extreme points, and average-fidelity quasi-Newton.
//!
//! All three work in amplitudes scaled by `Ω_max`, so the box is `[-1, 1]`.

pub mod bfgs;
pub mod lp;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::control::{fidelity, fidelity_and_gradient, EvolutionConfig};
use crate::device::DeviceModel;
use crate::error::{Error, Result};
use crate::pulse::{PulseGrid, PulseSet};
use crate::robustness::{FidelityReport, RobustProblem};
use crate::scalar::Real;
use crate::tensor::StateVector;

use bfgs::{minimize_box, BfgsConfig, BfgsStop, Evaluation};
pub use lp::{scp_minimax_step, ScpStep};

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig<T> {
    /// Center optimization stops once `F ≥ center_target`.
    pub center_target: T,
    pub center_max_iters: usize,
    /// Iteration budget of the robust stage.
    pub max_iters: usize,
    /// Projected-gradient max-norm (scaled amplitudes) treated as stationary.
    pub grad_tolerance: T,
    /// Per-variable initial trust region `u₀` in rad/s; `None` uses
    /// `trust_region_fraction·Ω_max` for every variable.
    pub trust_region_init: Option<Vec<T>>,
    pub trust_region_fraction: T,
    pub trust_grow: T,
    pub trust_shrink: T,
    /// The SCP loop ends when the largest trust-region entry drops below
    /// `trust_floor·Ω_max`.
    pub trust_floor: T,
    pub seed_count: usize,
    /// Random initial amplitudes are uniform in `±initial_fraction·Ω_max`.
    pub initial_fraction: T,
}

impl<T: Real> Default for OptimizerConfig<T> {
    fn default() -> Self {
        Self {
            center_target: T::one() - T::lit(1e-7),
            center_max_iters: 3000,
            max_iters: 200,
            grad_tolerance: T::lit(1e-10),
            trust_region_init: None,
            trust_region_fraction: T::lit(0.05),
            trust_grow: T::lit(1.15),
            trust_shrink: T::lit(2.0),
            trust_floor: T::lit(1e-8),
            seed_count: 1,
            initial_fraction: T::lit(0.1),
        }
    }
}

impl<T: Real> OptimizerConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if !(self.center_target > T::zero() && self.center_target < T::one()) {
            return bad("center_target must lie in (0, 1)");
        }
        if !(self.trust_grow > T::one()) || !(self.trust_shrink > T::one()) {
            return bad("trust_grow and trust_shrink must exceed 1");
        }
        if !(self.trust_floor > T::zero()) || !(self.trust_region_fraction > T::zero()) {
            return bad("trust_floor and trust_region_fraction must be positive");
        }
        if let Some(u) = &self.trust_region_init {
            if u.iter().any(|&v| !(v > T::zero()) || !v.is_finite()) {
                return bad("trust_region_init entries must be positive and finite");
            }
        }
        if !(self.grad_tolerance >= T::zero()) {
            return bad("grad_tolerance must be non-negative");
        }
        if self.seed_count == 0 {
            return bad("seed_count must be at least 1");
        }
        if !(self.initial_fraction > T::zero() && self.initial_fraction <= T::one()) {
            return bad("initial_fraction must lie in (0, 1]");
        }
        Ok(())
    }

    /// `u₀` in units of `Ω_max`.
    fn scaled_trust_region(&self, len: usize, omega_max: T) -> Result<Vec<T>> {
        match &self.trust_region_init {
            Some(u) if u.len() != len => Err(Error::DimensionMismatch { expected: len, actual: u.len() }),
            Some(u) => Ok(u.iter().map(|&v| v / omega_max).collect()),
            None => Ok(vec![self.trust_region_fraction; len]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    TargetReached,
    Stationary,
    MaxIterations,
    TrustRegionCollapsed,
    LineSearchFailed,
}

impl From<BfgsStop> for Termination {
    fn from(s: BfgsStop) -> Self {
        match s {
            BfgsStop::TargetReached => Termination::TargetReached,
            BfgsStop::Stationary => Termination::Stationary,
            BfgsStop::MaxIterations => Termination::MaxIterations,
            BfgsStop::LineSearchFailed => Termination::LineSearchFailed,
        }
    }
}

/// One optimizer iteration. Row 0 describes the starting pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    /// Worst-case fidelity of the current iterate after this iteration.
    pub worst_case: f64,
    pub average: f64,
    /// Euclidean norm of the attempted step, rad/s.
    pub step_norm: f64,
    /// SCP: trust-region multiplier applied to `u₀` for this step.
    /// Average: accepted line-search step length.
    pub trust_scale: f64,
    pub accepted: bool,
    /// SCP predicted minimum increment; zero for the other optimizers.
    pub predicted: f64,
    /// Worst case at the attempted point (equals `worst_case` when accepted).
    pub candidate_worst_case: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationTrace<T> {
    pub rows: Vec<TraceRow>,
    pub final_pulse: PulseSet<T>,
    pub termination: Termination,
}

impl<T: Real> OptimizationTrace<T> {
    pub const CSV_COLUMNS: [&'static str; 6] = ["iter", "worst_case", "average", "step_norm", "trust_scale", "accepted"];
    pub const CSV_UNITS: [&'static str; 6] = ["1", "1", "1", "rad/s", "1", "bool"];

    /// Column-name row, unit row, then one row per iteration.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n{}\n", Self::CSV_COLUMNS.join(","), Self::CSV_UNITS.join(","));
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{}",
                r.iter, r.worst_case, r.average, r.step_norm, r.trust_scale, r.accepted
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CenterResult<T> {
    pub pulse: PulseSet<T>,
    pub fidelity: T,
    pub iterations: usize,
    pub termination: Termination,
    pub converged: bool,
}

fn unscale<T: Real>(pulse: &PulseSet<T>, x: &[T]) -> Result<PulseSet<T>> {
    let b = pulse.amplitude_bound();
    pulse.with_amplitudes_clamped(x.iter().map(|&v| v * b).collect())
}

fn to_scaled<T: Real>(pulse: &PulseSet<T>) -> Vec<T> {
    let b = pulse.amplitude_bound();
    pulse.amplitudes().iter().map(|&a| a / b).collect()
}

/// Maximizes the fidelity at a single coupling assignment until
/// `F ≥ center_target`, returning the best pulse found either way.
pub fn optimize_center<T: Real>(
    initial: &PulseSet<T>,
    model: &DeviceModel<T>,
    target: &StateVector<T>,
    evolution: &EvolutionConfig<T>,
    cfg: &OptimizerConfig<T>,
) -> Result<CenterResult<T>> {
    cfg.validate()?;
    let f0 = fidelity(initial, model, target, evolution)?;
    if f0 >= cfg.center_target {
        return Ok(CenterResult {
            pulse: initial.clone(),
            fidelity: f0,
            iterations: 0,
            termination: Termination::TargetReached,
            converged: true,
        });
    }
    let bound = initial.amplitude_bound();
    let n = initial.len();
    let bcfg = BfgsConfig {
        max_iters: cfg.center_max_iters,
        grad_tolerance: cfg.grad_tolerance,
        target_value: Some(T::one() - cfg.center_target),
        ..Default::default()
    };
    let out = minimize_box(
        &to_scaled(initial),
        &vec![-T::one(); n],
        &vec![T::one(); n],
        &bcfg,
        |x| {
            let p = unscale(initial, x)?;
            let (f, g) = fidelity_and_gradient(&p, model, target, evolution)?;
            Ok(Evaluation {
                value: T::one() - f,
                gradient: g.iter().map(|&v| -v * bound).collect(),
                aux: f,
            })
        },
        |_| {},
    )?;
    let f = out.eval.aux;
    Ok(CenterResult {
        pulse: unscale(initial, &out.x)?,
        fidelity: f,
        iterations: out.iterations,
        termination: out.stop.into(),
        converged: f >= cfg.center_target,
    })
}

fn row(iter: usize, report: &FidelityReport) -> TraceRow {
    TraceRow {
        iter,
        worst_case: report.worst_case,
        average: report.average,
        step_norm: 0.0,
        trust_scale: 1.0,
        accepted: true,
        predicted: 0.0,
        candidate_worst_case: report.worst_case,
    }
}

/// Max-min ascent: each iteration solves the linear program for the step
/// maximizing the smallest first-order increment over all groups inside
/// the trust region `scale·u₀` and the amplitude box.
///
/// A step is accepted only when the predicted increment is positive and
/// the realized worst case improves; the trust scale grows by
/// `trust_grow` on acceptance and shrinks by `trust_shrink` otherwise.
pub fn optimize_scp<T: Real>(
    initial: &PulseSet<T>,
    problem: &RobustProblem<T>,
    cfg: &OptimizerConfig<T>,
) -> Result<(PulseSet<T>, OptimizationTrace<T>)> {
    cfg.validate()?;
    let bound = initial.amplitude_bound();
    let u0 = cfg.scaled_trust_region(initial.len(), bound)?;
    let u0_max = u0.iter().copied().fold(T::zero(), T::max);

    let mut pulse = initial.clone();
    let mut x = to_scaled(&pulse);
    let mut evals = problem.group_gradients(&pulse)?;
    let fids = |e: &[(T, Vec<T>)]| e.iter().map(|(f, _)| *f).collect::<Vec<_>>();
    let mut report = problem.report(&fids(&evals));
    let mut rows = vec![row(0, &report)];
    let mut scale = T::one();
    let mut termination = Termination::MaxIterations;

    for iter in 1..=cfg.max_iters {
        if scale * u0_max < cfg.trust_floor {
            termination = Termination::TrustRegionCollapsed;
            break;
        }
        let grads: Vec<Vec<T>> = evals.iter().map(|(_, g)| g.iter().map(|&v| v * bound).collect()).collect();
        let lower: Vec<T> = x.iter().zip(&u0).map(|(&xk, &uk)| (-scale * uk).max(-T::one() - xk).min(T::zero())).collect();
        let upper: Vec<T> = x.iter().zip(&u0).map(|(&xk, &uk)| (scale * uk).min(T::one() - xk).max(T::zero())).collect();
        let step = scp_minimax_step(&grads, &lower, &upper)?;
        let step_norm = step.delta.iter().map(|&d| d * d).sum::<T>().sqrt() * bound;

        let mut accepted = false;
        let mut candidate = f64::NAN;
        if step.t > T::zero() {
            let trial_x: Vec<T> = x.iter().zip(&step.delta).map(|(&a, &d)| a + d).collect();
            let trial = unscale(&pulse, &trial_x)?;
            let trial_evals = problem.group_gradients(&trial)?;
            let trial_report = problem.report(&fids(&trial_evals));
            candidate = trial_report.worst_case;
            if trial_report.worst_case > report.worst_case {
                accepted = true;
                x = to_scaled(&trial);
                pulse = trial;
                evals = trial_evals;
                report = trial_report;
            }
        }
        rows.push(TraceRow {
            iter,
            worst_case: report.worst_case,
            average: report.average,
            step_norm: step_norm.as_f64(),
            trust_scale: scale.as_f64(),
            accepted,
            predicted: step.t.as_f64(),
            candidate_worst_case: candidate,
        });
        scale = if accepted { scale * cfg.trust_grow } else { scale / cfg.trust_shrink };
    }
    let trace = OptimizationTrace {
        rows,
        final_pulse: pulse.clone(),
        termination,
    };
    Ok((pulse, trace))
}

/// Maximizes the multiplicity-weighted mean fidelity over the extreme
/// points with projected BFGS on the amplitude box.
pub fn optimize_average<T: Real>(
    initial: &PulseSet<T>,
    problem: &RobustProblem<T>,
    cfg: &OptimizerConfig<T>,
) -> Result<(PulseSet<T>, OptimizationTrace<T>)> {
    cfg.validate()?;
    let bound = initial.amplitude_bound();
    let n = initial.len();
    let weights = problem.weights();
    let initial_report = problem.evaluate(initial)?;
    let mut rows = vec![row(0, &initial_report)];
    let bcfg = BfgsConfig {
        max_iters: cfg.max_iters,
        grad_tolerance: cfg.grad_tolerance,
        target_value: None,
        ..Default::default()
    };
    let out = minimize_box(
        &to_scaled(initial),
        &vec![-T::one(); n],
        &vec![T::one(); n],
        &bcfg,
        |x| {
            let p = unscale(initial, x)?;
            let evals = problem.group_gradients(&p)?;
            let mut value = T::zero();
            let mut gradient = vec![T::zero(); n];
            for ((f, g), &w) in evals.iter().zip(&weights) {
                value = value - w * *f;
                for (acc, &gk) in gradient.iter_mut().zip(g) {
                    *acc = *acc - w * gk * bound;
                }
            }
            let report = problem.report(&evals.iter().map(|(f, _)| *f).collect::<Vec<_>>());
            Ok(Evaluation { value, gradient, aux: report })
        },
        |s| {
            rows.push(TraceRow {
                step_norm: (s.step_norm * bound).as_f64(),
                trust_scale: s.step_length.as_f64(),
                ..row(s.iter, &s.eval.aux)
            })
        },
    )?;
    let pulse = unscale(initial, &out.x)?;
    let trace = OptimizationTrace {
        rows,
        final_pulse: pulse.clone(),
        termination: out.stop.into(),
    };
    Ok((pulse, trace))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobustMethod {
    Scp,
    Average,
}

/// Outcome of one start: center stage, robust stage and final evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustRun<T> {
    pub seed: u64,
    pub center: CenterResult<T>,
    pub pulse: PulseSet<T>,
    pub trace: OptimizationTrace<T>,
    pub report: FidelityReport,
}

/// Random start, center optimization at `J̄`, then the robust stage.
pub fn robust_run<T: Real>(
    grid: PulseGrid<T>,
    amplitude_bound: T,
    problem: &RobustProblem<T>,
    cfg: &OptimizerConfig<T>,
    method: RobustMethod,
    seed: u64,
) -> Result<RobustRun<T>> {
    let channels = problem.center_model().channels();
    let start = PulseSet::random(grid, channels, amplitude_bound, cfg.initial_fraction, seed)?;
    let center = optimize_center(&start, problem.center_model(), problem.target(), problem.evolution(), cfg)?;
    let (pulse, trace) = match method {
        RobustMethod::Scp => optimize_scp(&center.pulse, problem, cfg)?,
        RobustMethod::Average => optimize_average(&center.pulse, problem, cfg)?,
    };
    let report = problem.evaluate(&pulse)?;
    Ok(RobustRun {
        seed,
        center,
        pulse,
        trace,
        report,
    })
}

/// Runs every seed and returns all runs with the index of the one with
/// the highest worst case (lowest index on ties).
pub fn multistart<T: Real>(
    grid: PulseGrid<T>,
    amplitude_bound: T,
    problem: &RobustProblem<T>,
    cfg: &OptimizerConfig<T>,
    method: RobustMethod,
    seeds: &[u64],
) -> Result<(usize, Vec<RobustRun<T>>)> {
    if seeds.is_empty() {
        return Err(Error::InvalidParameter("multistart needs at least one seed".into()));
    }
    let runs = seeds
        .iter()
        .map(|&s| robust_run(grid, amplitude_bound, problem, cfg, method, s))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.report.worst_case > runs[best].report.worst_case {
            best = i;
        }
    }
    Ok((best, runs))
}

/// The `seed_count` seeds derived from a base seed.
pub fn start_seeds(base: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|k| base.wrapping_add(k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::TlsStarBuilder;
    use crate::robustness::UncertaintyBox;

    #[test]
    fn config_validation() {
        let mut c = OptimizerConfig::<f64>::default();
        assert!(c.validate().is_ok());
        c.trust_grow = 1.0;
        assert!(c.validate().is_err());
        let c = OptimizerConfig { center_target: 1.0, ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn single_qubit_pi_pulse_converges() {
        let model = DeviceModel::<f64>::single_qubit();
        let t = 2e-8;
        let bound = 2.0 * std::f64::consts::PI * 150e6;
        let start = PulseSet::random(PulseGrid::new(t, 10).unwrap(), 1, bound, 0.1, 1).unwrap();
        let one = StateVector::basis(2, &[1]).unwrap();
        let r = optimize_center(&start, &model, &one, &EvolutionConfig::default(), &OptimizerConfig::default()).unwrap();
        assert!(r.converged, "{r:?}");
        assert!(r.iterations < 100);
        // already optimal input comes back untouched
        let again = optimize_center(&r.pulse, &model, &one, &EvolutionConfig::default(), &OptimizerConfig::default()).unwrap();
        assert_eq!(again.pulse, r.pulse);
        assert_eq!(again.iterations, 0);
    }

    #[test]
    fn trace_csv_has_header_and_units() {
        let jbar = 2.0 * std::f64::consts::PI * 30e6;
        let b = UncertaintyBox::from_fraction(jbar, 0.05, 1).unwrap();
        let problem = RobustProblem::new(b, &TlsStarBuilder { site_count: 2 }, StateVector::ghz(2, 2).unwrap(), EvolutionConfig::default()).unwrap();
        let start = PulseSet::random(PulseGrid::new(2e-8, 4).unwrap(), 1, 1e9, 0.1, 3).unwrap();
        let cfg = OptimizerConfig { max_iters: 3, ..Default::default() };
        let (_, trace) = optimize_scp(&start, &problem, &cfg).unwrap();
        let csv = trace.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("iter,worst_case,average,step_norm,trust_scale,accepted"));
        assert_eq!(lines.next(), Some("1,1,1,rad/s,1,bool"));
        assert_eq!(lines.count(), trace.rows.len());
    }
}
