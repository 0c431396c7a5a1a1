// Copyright 2026 The robust-ghz Contributors
// SPDX-License-Identifier: Apache-2.0

//! Experiment configuration: one JSON document, unknown keys rejected.
//!
//! Frequencies in the config are ordinary (Hz); everything downstream is
//! angular (rad/s).

use std::f64::consts::TAU;
use std::path::PathBuf;

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

use robust_ghz::control::EvolutionConfig;
use robust_ghz::device::{DeviceModel, ModelBuilder, TlsStarBuilder, TransmonParams, TransmonStarBuilder};
use robust_ghz::optim::{OptimizerConfig, RobustMethod};
use robust_ghz::pulse::PulseGrid;
use robust_ghz::robustness::{AuditConfig, RobustProblem, UncertaintyBox};
use robust_ghz::sensing::{DEFAULT_GRID_POINTS, DERIVATIVE_FLOOR};
use robust_ghz::tensor::StateVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub device: DeviceConfig,
    pub uncertainty: UncertaintyConfig,
    #[serde(default)]
    pub optimizer: OptimizerBlock,
    #[serde(default)]
    pub sensing: SensingConfig,
    #[serde(default)]
    pub audit: AuditBlock,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceConfig {
    pub sites: usize,
    /// Levels per site: 2 for qubits, 3 for transmons.
    pub levels: usize,
    /// Only read when `levels == 3`.
    pub transmon: TransmonParams<f64>,
    /// `J̄/2π`.
    pub mean_coupling_hz: f64,
    pub duration_s: f64,
    pub bins: usize,
    /// `Ω_max/2π`.
    pub amplitude_bound_hz: f64,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        Self {
            sites: 4,
            levels: 2,
            transmon: TransmonParams::default(),
            mean_coupling_hz: 30e6,
            duration_s: 100e-9,
            bins: 100,
            amplitude_bound_hz: 150e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncertaintyConfig {
    /// Full interval widths `ΔJ/J̄`, e.g. `0.05` for ±2.5%.
    pub delta_j: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerBlock {
    pub method: RobustMethod,
    pub seed: u64,
    pub seed_count: usize,
    pub max_iters: usize,
    pub center_target: f64,
    pub center_max_iters: usize,
    pub grad_tolerance: f64,
    pub trust_region_fraction: f64,
    pub trust_grow: f64,
    pub trust_shrink: f64,
    pub trust_floor: f64,
    pub initial_fraction: f64,
}

impl Default for OptimizerBlock {
    fn default() -> Self {
        let d = OptimizerConfig::<f64>::default();
        Self {
            method: RobustMethod::Scp,
            seed: 0,
            seed_count: d.seed_count,
            max_iters: d.max_iters,
            center_target: d.center_target,
            center_max_iters: d.center_max_iters,
            grad_tolerance: d.grad_tolerance,
            trust_region_fraction: d.trust_region_fraction,
            trust_grow: d.trust_grow,
            trust_shrink: d.trust_shrink,
            trust_floor: d.trust_floor,
            initial_fraction: d.initial_fraction,
        }
    }
}

/// Which coupling assignment supplies the final state for sensing and
/// the leakage column of pulse figures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateSelection {
    WorstCase,
    Center,
    /// Extreme-point group by id.
    Group(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensingConfig {
    pub grid_points: usize,
    pub derivative_floor: f64,
    pub state: StateSelection,
}

impl Default for SensingConfig {
    fn default() -> Self {
        Self {
            grid_points: DEFAULT_GRID_POINTS,
            derivative_floor: DERIVATIVE_FLOOR,
            state: StateSelection::WorstCase,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditBlock {
    /// Run the sampling audit as part of `sweep`.
    pub enabled: bool,
    pub samples: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for AuditBlock {
    fn default() -> Self {
        let d = AuditConfig::default();
        Self {
            enabled: true,
            samples: d.samples,
            tolerance: d.tolerance,
            seed: d.seed,
        }
    }
}

impl AuditBlock {
    pub fn config(&self) -> AuditConfig {
        AuditConfig {
            samples: self.samples,
            tolerance: self.tolerance,
            seed: self.seed,
        }
    }
}

/// Command-line overrides of top-level scalars.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub levels: Option<usize>,
    pub delta_j: Option<Vec<f64>>,
    pub method: Option<RobustMethod>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(l) = o.levels {
            self.device.levels = l;
        }
        if let Some(d) = &o.delta_j {
            self.uncertainty.delta_j = d.clone();
        }
        if let Some(m) = o.method {
            self.optimizer.method = m;
        }
        if let Some(s) = o.seed {
            self.optimizer.seed = s;
        }
        if let Some(p) = &o.out {
            self.output = p.clone();
        }
    }

    pub fn seeds(&self) -> Vec<u64> {
        robust_ghz::optim::start_seeds(self.optimizer.seed, self.optimizer.seed_count)
    }

    pub fn optimizer_config(&self) -> OptimizerConfig<f64> {
        let o = &self.optimizer;
        OptimizerConfig {
            center_target: o.center_target,
            center_max_iters: o.center_max_iters,
            max_iters: o.max_iters,
            grad_tolerance: o.grad_tolerance,
            trust_region_init: None,
            trust_region_fraction: o.trust_region_fraction,
            trust_grow: o.trust_grow,
            trust_shrink: o.trust_shrink,
            trust_floor: o.trust_floor,
            seed_count: o.seed_count,
            initial_fraction: o.initial_fraction,
        }
    }

    /// Checks every module precondition and builds the shared setup.
    pub fn validate(&self) -> Result<Setup> {
        let d = &self.device;
        ensure!(d.sites >= 2, "device.sites must be at least 2");
        ensure!(d.levels == 2 || d.levels == 3, "device.levels must be 2 or 3, got {}", d.levels);
        ensure!(d.mean_coupling_hz > 0.0 && d.mean_coupling_hz.is_finite(), "device.mean_coupling_hz must be positive");
        ensure!(d.amplitude_bound_hz > 0.0 && d.amplitude_bound_hz.is_finite(), "device.amplitude_bound_hz must be positive");
        ensure!(!self.uncertainty.delta_j.is_empty(), "uncertainty.delta_j must list at least one level");
        let mut seen = self.uncertainty.delta_j.clone();
        seen.sort_by(f64::total_cmp);
        if seen.windows(2).any(|w| w[0] == w[1]) {
            bail!("uncertainty.delta_j contains duplicates");
        }
        ensure!(self.sensing.grid_points > 0, "sensing.grid_points must be positive");
        ensure!(self.sensing.derivative_floor >= 0.0, "sensing.derivative_floor must be non-negative");
        ensure!(self.audit.samples > 0, "audit.samples must be positive");
        self.optimizer_config().validate()?;

        let grid = PulseGrid::new(d.duration_s, d.bins)?;
        let builder = if d.levels == 2 {
            Builder::Tls(TlsStarBuilder { site_count: d.sites })
        } else {
            Builder::Transmon(TransmonStarBuilder::new(d.sites, &d.transmon)?)
        };
        let jbar = TAU * d.mean_coupling_hz;
        for &f in &self.uncertainty.delta_j {
            UncertaintyBox::from_fraction(jbar, f, d.sites - 1).with_context(|| format!("uncertainty level {f}"))?;
        }
        if let StateSelection::Group(g) = self.sensing.state {
            let b = UncertaintyBox::from_fraction(jbar, 0.0, d.sites - 1)?;
            let count = robust_ghz::robustness::extreme_point_groups(&b, &builder)?.len();
            ensure!(g < count, "sensing.state group {g} out of range (have {count})");
        }
        Ok(Setup {
            grid,
            amplitude_bound: TAU * d.amplitude_bound_hz,
            mean_coupling: jbar,
            target: StateVector::ghz(d.levels, d.sites)?,
            evolution: EvolutionConfig::default(),
            optimizer: self.optimizer_config(),
            builder,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Builder {
    Tls(TlsStarBuilder),
    Transmon(TransmonStarBuilder<f64>),
}

impl ModelBuilder<f64> for Builder {
    fn coupling_count(&self) -> usize {
        match self {
            Builder::Tls(b) => ModelBuilder::<f64>::coupling_count(b),
            Builder::Transmon(b) => b.coupling_count(),
        }
    }

    fn build(&self, couplings: &[f64]) -> robust_ghz::Result<DeviceModel<f64>> {
        match self {
            Builder::Tls(b) => b.build(couplings),
            Builder::Transmon(b) => b.build(couplings),
        }
    }

    fn star_symmetric(&self) -> bool {
        true
    }
}

/// Validated, unit-converted experiment inputs.
#[derive(Debug, Clone)]
pub struct Setup {
    pub grid: PulseGrid<f64>,
    /// `Ω_max`, rad/s.
    pub amplitude_bound: f64,
    /// `J̄`, rad/s.
    pub mean_coupling: f64,
    pub target: StateVector<f64>,
    pub evolution: EvolutionConfig<f64>,
    pub optimizer: OptimizerConfig<f64>,
    pub builder: Builder,
}

impl Setup {
    pub fn uncertainty(&self, fraction: f64) -> Result<UncertaintyBox<f64>> {
        let n = ModelBuilder::<f64>::coupling_count(&self.builder);
        Ok(UncertaintyBox::from_fraction(self.mean_coupling, fraction, n)?)
    }

    pub fn problem(&self, fraction: f64) -> Result<RobustProblem<f64>> {
        Ok(RobustProblem::new(self.uncertainty(fraction)?, &self.builder, self.target.clone(), self.evolution)?)
    }
}

/// Directory name for one uncertainty level.
pub fn level_dir(fraction: f64) -> String {
    format!("dj_{fraction}")
}
