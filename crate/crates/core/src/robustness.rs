// Copyright 2026 The robust-ghz Contributors
// SPDX-License-Identifier: Apache-2.0

//! Coupling uncertainty: the hypercube of admissible couplings, its corners,
//! star-graph grouping of corners, worst-case and average fidelity, and a
//! Monte-Carlo check that no interior point is worse than the corners.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{fidelity, fidelity_and_gradient, EvolutionConfig};
use crate::device::{DeviceModel, ModelBuilder};
use crate::error::{Error, Result};
use crate::pulse::PulseSet;
use crate::scalar::Real;
use crate::tensor::StateVector;

/// Largest coupling count for which all corners are listed explicitly.
pub const MAX_ENUMERATED_COUPLINGS: usize = 20;

/// Every coupling lies in `[J̄ - ΔJ/2, J̄ + ΔJ/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyBox<T> {
    mean: T,
    half_width: T,
    coupling_count: usize,
}

impl<T: Real> UncertaintyBox<T> {
    pub fn new(mean: T, half_width: T, coupling_count: usize) -> Result<Self> {
        if !(mean > T::zero()) || !mean.is_finite() {
            return Err(Error::InvalidParameter("mean coupling must be positive".into()));
        }
        if !(half_width >= T::zero()) || half_width >= mean {
            return Err(Error::InvalidParameter(format!(
                "half width {half_width} must lie in [0, {mean})"
            )));
        }
        if coupling_count == 0 {
            return Err(Error::InvalidParameter("need at least one uncertain coupling".into()));
        }
        Ok(Self {
            mean,
            half_width,
            coupling_count,
        })
    }

    /// Box of total width `fraction·J̄`.
    pub fn from_fraction(mean: T, fraction: T, coupling_count: usize) -> Result<Self> {
        Self::new(mean, fraction * mean / T::lit(2.0), coupling_count)
    }

    pub fn mean(&self) -> T {
        self.mean
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    /// `ΔJ/J̄`.
    pub fn fraction(&self) -> T {
        T::lit(2.0) * self.half_width / self.mean
    }

    pub fn coupling_count(&self) -> usize {
        self.coupling_count
    }

    /// `J_<`.
    pub fn low(&self) -> T {
        self.mean - self.half_width
    }

    /// `J_>`.
    pub fn high(&self) -> T {
        self.mean + self.half_width
    }

    pub fn center(&self) -> Vec<T> {
        vec![self.mean; self.coupling_count]
    }

    /// Couplings at the corner where `high[j]` selects `J_>`.
    pub fn corner(&self, high: &[bool]) -> Vec<T> {
        high.iter().map(|&h| if h { self.high() } else { self.low() }).collect()
    }

    pub fn contains(&self, couplings: &[T]) -> bool {
        couplings.len() == self.coupling_count && couplings.iter().all(|&j| j >= self.low() && j <= self.high())
    }

    /// Uniform draw from the box.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<T> {
        let (lo, hi) = (self.low().as_f64(), self.high().as_f64());
        (0..self.coupling_count)
            .map(|_| if hi > lo { T::lit(rng.gen_range(lo..=hi)) } else { self.mean })
            .collect()
    }
}

/// All `2^{n_v}` corners; corner `i` has coupling `j` at `J_>` when bit
/// `n_v - 1 - j` of `i` is set.
pub fn enumerate_extreme_points<T: Real>(b: &UncertaintyBox<T>) -> Result<Vec<Vec<T>>> {
    Ok(corner_masks(b.coupling_count)?.iter().map(|h| b.corner(h)).collect())
}

fn corner_masks(n: usize) -> Result<Vec<Vec<bool>>> {
    if n > MAX_ENUMERATED_COUPLINGS {
        return Err(Error::TooManyExtremePoints { count: n });
    }
    Ok((0..1usize << n)
        .map(|i| (0..n).map(|j| i >> (n - 1 - j) & 1 == 1).collect())
        .collect())
}

/// Corners that share a fidelity by symmetry, evaluated once through
/// `representative`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtremePointGroup {
    pub id: usize,
    /// `true` entries sit at `J_>`.
    pub representative: Vec<bool>,
    pub multiplicity: u64,
    pub high_count: usize,
}

impl ExtremePointGroup {
    pub fn couplings<T: Real>(&self, b: &UncertaintyBox<T>) -> Vec<T> {
        b.corner(&self.representative)
    }
}

fn binomial(n: usize, k: usize) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// `n_v + 1` groups keyed by the number of couplings at `J_>`.
pub fn symmetry_groups_star<T: Real>(b: &UncertaintyBox<T>) -> Vec<ExtremePointGroup> {
    let n = b.coupling_count;
    (0..=n)
        .map(|high_count| ExtremePointGroup {
            id: high_count,
            representative: (0..n).map(|j| j < high_count).collect(),
            multiplicity: binomial(n, high_count),
            high_count,
        })
        .collect()
}

/// One singleton group per corner, for builders without star symmetry.
pub fn full_enumeration_groups<T: Real>(b: &UncertaintyBox<T>) -> Result<Vec<ExtremePointGroup>> {
    Ok(corner_masks(b.coupling_count)?
        .into_iter()
        .enumerate()
        .map(|(id, representative)| ExtremePointGroup {
            id,
            high_count: representative.iter().filter(|&&h| h).count(),
            representative,
            multiplicity: 1,
        })
        .collect())
}

/// Star grouping when the builder declares the symmetry, all corners otherwise.
pub fn extreme_point_groups<T: Real, B: ModelBuilder<T> + ?Sized>(
    b: &UncertaintyBox<T>,
    builder: &B,
) -> Result<Vec<ExtremePointGroup>> {
    if builder.coupling_count() != b.coupling_count {
        return Err(Error::DimensionMismatch {
            expected: builder.coupling_count(),
            actual: b.coupling_count,
        });
    }
    if builder.star_symmetric() {
        Ok(symmetry_groups_star(b))
    } else {
        full_enumeration_groups(b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupFidelity {
    pub id: usize,
    pub high_count: usize,
    pub multiplicity: u64,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub groups: Vec<GroupFidelity>,
    pub worst_case: f64,
    /// Multiplicity-weighted mean over groups, i.e. the plain mean over corners.
    pub average: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditReport>,
}

impl FidelityReport {
    fn from_groups(groups: &[ExtremePointGroup], fids: &[f64]) -> Self {
        let total: u64 = groups.iter().map(|g| g.multiplicity).sum();
        let average = groups
            .iter()
            .zip(fids)
            .map(|(g, f)| g.multiplicity as f64 * f)
            .sum::<f64>()
            / total as f64;
        Self {
            groups: groups
                .iter()
                .zip(fids)
                .map(|(g, &fidelity)| GroupFidelity {
                    id: g.id,
                    high_count: g.high_count,
                    multiplicity: g.multiplicity,
                    fidelity,
                })
                .collect(),
            worst_case: fids.iter().copied().fold(f64::INFINITY, f64::min),
            average,
            audit: None,
        }
    }

    /// Position of the worst group (first on ties).
    pub fn worst_index(&self) -> usize {
        self.groups
            .iter()
            .position(|g| g.fidelity == self.worst_case)
            .unwrap_or(0)
    }
}

/// One model per extreme-point group plus the center model.
pub struct RobustProblem<T> {
    uncertainty: UncertaintyBox<T>,
    groups: Vec<ExtremePointGroup>,
    models: Vec<DeviceModel<T>>,
    center: DeviceModel<T>,
    target: StateVector<T>,
    cfg: EvolutionConfig<T>,
}

impl<T: Real> RobustProblem<T> {
    pub fn new<B: ModelBuilder<T> + ?Sized>(
        uncertainty: UncertaintyBox<T>,
        builder: &B,
        target: StateVector<T>,
        cfg: EvolutionConfig<T>,
    ) -> Result<Self> {
        let groups = extreme_point_groups(&uncertainty, builder)?;
        let models = groups
            .par_iter()
            .map(|g| builder.build(&g.couplings(&uncertainty)))
            .collect::<Result<Vec<_>>>()?;
        let center = builder.build(&uncertainty.center())?;
        if target.dim() != center.dim() {
            return Err(Error::DimensionMismatch {
                expected: center.dim(),
                actual: target.dim(),
            });
        }
        Ok(Self {
            uncertainty,
            groups,
            models,
            center,
            target,
            cfg,
        })
    }

    pub fn uncertainty(&self) -> &UncertaintyBox<T> {
        &self.uncertainty
    }

    pub fn groups(&self) -> &[ExtremePointGroup] {
        &self.groups
    }

    pub fn models(&self) -> &[DeviceModel<T>] {
        &self.models
    }

    pub fn center_model(&self) -> &DeviceModel<T> {
        &self.center
    }

    pub fn target(&self) -> &StateVector<T> {
        &self.target
    }

    pub fn evolution(&self) -> &EvolutionConfig<T> {
        &self.cfg
    }

    /// Multiplicities normalized to sum to one.
    pub fn weights(&self) -> Vec<T> {
        let total: u64 = self.groups.iter().map(|g| g.multiplicity).sum();
        self.groups
            .iter()
            .map(|g| T::lit(g.multiplicity as f64 / total as f64))
            .collect()
    }

    fn at_point<R>(&self, i: usize, r: Result<R>) -> Result<R> {
        r.map_err(|e| Error::AtPoint {
            point: self.groups[i].id,
            source: Box::new(e),
        })
    }

    /// Fidelity once per group.
    pub fn group_fidelities(&self, pulse: &PulseSet<T>) -> Result<Vec<T>> {
        (0..self.groups.len())
            .into_par_iter()
            .map(|i| self.at_point(i, fidelity(pulse, &self.models[i], &self.target, &self.cfg)))
            .collect()
    }

    /// Fidelity and gradient once per group.
    pub fn group_gradients(&self, pulse: &PulseSet<T>) -> Result<Vec<(T, Vec<T>)>> {
        (0..self.groups.len())
            .into_par_iter()
            .map(|i| self.at_point(i, fidelity_and_gradient(pulse, &self.models[i], &self.target, &self.cfg)))
            .collect()
    }

    pub fn center_fidelity(&self, pulse: &PulseSet<T>) -> Result<T> {
        fidelity(pulse, &self.center, &self.target, &self.cfg)
    }

    pub fn report(&self, fids: &[T]) -> FidelityReport {
        let f: Vec<f64> = fids.iter().map(|x| x.as_f64()).collect();
        FidelityReport::from_groups(&self.groups, &f)
    }

    pub fn evaluate(&self, pulse: &PulseSet<T>) -> Result<FidelityReport> {
        Ok(self.report(&self.group_fidelities(pulse)?))
    }
}

/// Worst-case and average fidelity over the extreme points.
pub fn worst_case_fidelity<T: Real, B: ModelBuilder<T> + ?Sized>(
    pulse: &PulseSet<T>,
    uncertainty: &UncertaintyBox<T>,
    builder: &B,
    target: &StateVector<T>,
    cfg: &EvolutionConfig<T>,
) -> Result<FidelityReport> {
    RobustProblem::new(*uncertainty, builder, target.clone(), *cfg)?.evaluate(pulse)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub samples: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            samples: 10_000,
            tolerance: 1e-6,
            seed: 0,
        }
    }
}

/// Sampled point whose fidelity fell below the corner minimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditViolation {
    pub couplings: Vec<f64>,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub worst_case: f64,
    pub min_sampled: f64,
    pub min_point: Vec<f64>,
    pub violation_count: usize,
    /// The first few violations in draw order.
    pub violations: Vec<AuditViolation>,
    pub passed: bool,
}

const REPORTED_VIOLATIONS: usize = 16;

/// Draws uniform points from the box and compares `landscape` against
/// `worst_case`. The closure is evaluated in parallel; the report depends
/// only on the seed.
pub fn audit_landscape<T, F>(uncertainty: &UncertaintyBox<T>, worst_case: f64, cfg: &AuditConfig, landscape: F) -> Result<AuditReport>
where
    T: Real,
    F: Fn(&[T]) -> Result<T> + Sync,
{
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let points: Vec<Vec<T>> = (0..cfg.samples).map(|_| uncertainty.sample(&mut rng)).collect();
    let fids = points
        .par_iter()
        .map(|p| landscape(p).map(|f| f.as_f64()))
        .collect::<Result<Vec<f64>>>()?;
    let threshold = worst_case - cfg.tolerance;
    let mut min_sampled = f64::INFINITY;
    let mut min_point = Vec::new();
    let mut violation_count = 0;
    let mut violations = Vec::new();
    for (p, &f) in points.iter().zip(&fids) {
        if f < min_sampled {
            min_sampled = f;
            min_point = p.iter().map(|x| x.as_f64()).collect();
        }
        if f < threshold {
            violation_count += 1;
            if violations.len() < REPORTED_VIOLATIONS {
                violations.push(AuditViolation {
                    couplings: p.iter().map(|x| x.as_f64()).collect(),
                    fidelity: f,
                });
            }
        }
    }
    Ok(AuditReport {
        samples: cfg.samples,
        seed: cfg.seed,
        tolerance: cfg.tolerance,
        worst_case,
        min_sampled,
        min_point,
        violation_count,
        violations,
        passed: violation_count == 0,
    })
}

/// Audit of the true fidelity landscape of `pulse`.
pub fn concavity_audit<T: Real, B: ModelBuilder<T> + ?Sized>(
    pulse: &PulseSet<T>,
    uncertainty: &UncertaintyBox<T>,
    builder: &B,
    target: &StateVector<T>,
    evolution: &EvolutionConfig<T>,
    worst_case: f64,
    cfg: &AuditConfig,
) -> Result<AuditReport> {
    audit_landscape(uncertainty, worst_case, cfg, |j| {
        fidelity(pulse, &builder.build(j)?, target, evolution)
    })
}
