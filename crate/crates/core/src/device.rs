// Copyright 2026 The robust-ghz Contributors
// SPDX-License-Identifier: Apache-2.0

//! Drift and control operators for star graphs of two-level qubits and
//! three-level transmons, in the frame rotating with a resonant drive.
//!
//! Level conventions: `|0⟩` ground, `|1⟩` first excited; the raising
//! operator is `|1⟩⟨0|` (plus `r·|2⟩⟨1|` for transmons) and the quadrature
//! controls are `Sˣ = S⁺ + S⁻`, `Sʸ = -i(S⁺ - S⁻)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cplx, Real, C};
use crate::tensor::tridiag::tridiag_eigen;
use crate::tensor::{LocalOp, OperatorBuilder, SharedPattern, SparseOperator};

/// Star topology: one driven center coupled to every other site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarGraphSpec<T> {
    site_count: usize,
    levels: usize,
    driven_site: usize,
    /// One coupling per boundary site, in increasing site order (rad/s).
    couplings: Vec<T>,
}

impl<T: Real> StarGraphSpec<T> {
    pub fn new(site_count: usize, levels: usize, driven_site: usize, couplings: Vec<T>) -> Result<Self> {
        if site_count < 2 {
            return Err(Error::InvalidParameter(format!("a star needs at least 2 sites, got {site_count}")));
        }
        if !(2..=3).contains(&levels) {
            return Err(Error::InvalidParameter(format!("levels must be 2 or 3, got {levels}")));
        }
        if driven_site >= site_count {
            return Err(Error::InvalidParameter(format!(
                "driven site {driven_site} out of range for {site_count} sites"
            )));
        }
        if couplings.len() != site_count - 1 {
            return Err(Error::DimensionMismatch {
                expected: site_count - 1,
                actual: couplings.len(),
            });
        }
        if couplings.iter().any(|j| !j.is_finite()) {
            return Err(Error::InvalidParameter("couplings must be finite".into()));
        }
        Ok(Self {
            site_count,
            levels,
            driven_site,
            couplings,
        })
    }

    /// Center at site 0, all couplings equal.
    pub fn uniform(site_count: usize, levels: usize, coupling: T) -> Result<Self> {
        Self::new(site_count, levels, 0, vec![coupling; site_count.saturating_sub(1)])
    }

    pub fn site_count(&self) -> usize {
        self.site_count
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn driven_site(&self) -> usize {
        self.driven_site
    }

    pub fn couplings(&self) -> &[T] {
        &self.couplings
    }

    pub fn coupling_count(&self) -> usize {
        self.couplings.len()
    }

    /// Boundary site indices, aligned with [`couplings`](Self::couplings).
    pub fn boundary_sites(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.site_count).filter(move |&s| s != self.driven_site)
    }

    pub fn dim(&self) -> usize {
        self.levels.pow(self.site_count as u32)
    }
}

/// Transmon parameters. Frequencies are ordinary (cycles per second).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmonParams<T> {
    /// `ω⁽¹⁰⁾/2π`.
    pub qubit_freq_hz: T,
    /// `δ/2π`, the diagonal `|2⟩⟨2|` energy in the rotating frame.
    pub anharmonicity_hz: T,
    pub ej_over_ec: T,
    pub gate_charge: T,
    /// Charge states `-cutoff..=cutoff`.
    pub charge_basis_cutoff: usize,
}

impl<T: Real> Default for TransmonParams<T> {
    fn default() -> Self {
        Self {
            qubit_freq_hz: T::lit(5e9),
            anharmonicity_hz: T::lit(300e6),
            ej_over_ec: T::lit(50.0),
            gate_charge: T::lit(0.25),
            charge_basis_cutoff: 15,
        }
    }
}

impl<T: Real> TransmonParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.ej_over_ec > T::zero()) {
            return Err(Error::InvalidParameter("E_J/E_C must be positive".into()));
        }
        if self.charge_basis_cutoff < 5 {
            return Err(Error::InvalidParameter(format!(
                "charge basis cutoff must be at least 5, got {}",
                self.charge_basis_cutoff
            )));
        }
        if !self.anharmonicity_hz.is_finite() || !self.gate_charge.is_finite() || !(self.qubit_freq_hz > T::zero()) {
            return Err(Error::InvalidParameter("transmon frequencies must be finite and positive".into()));
        }
        Ok(())
    }

    /// `δ` in rad/s.
    pub fn anharmonicity(&self) -> T {
        T::TAU() * self.anharmonicity_hz
    }
}

/// Lowest three levels of the Cooper-pair box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargeMatrixElements<T> {
    /// Eigenenergies `E₀, E₁, E₂` in units of `E_C`.
    pub energies: [T; 3],
    /// `⟨0|n̂|1⟩`, real positive.
    pub n01: T,
    /// `⟨1|n̂|2⟩`, real positive.
    pub n12: T,
}

impl<T: Real> ChargeMatrixElements<T> {
    /// `n⁽¹²⁾/n⁽⁰¹⁾`, the relative strength of the 1→2 ladder step.
    pub fn ladder_ratio(&self) -> T {
        self.n12 / self.n01
    }

    /// Level energies `ω⁽ᵏ⁾` relative to the ground state in rad/s, with
    /// `E_C` fixed by matching `ω⁽¹⁰⁾` to `qubit_freq_hz`.
    pub fn level_frequencies(&self, qubit_freq_hz: T) -> [T; 3] {
        let scale = T::TAU() * qubit_freq_hz / (self.energies[1] - self.energies[0]);
        [
            T::zero(),
            (self.energies[1] - self.energies[0]) * scale,
            (self.energies[2] - self.energies[0]) * scale,
        ]
    }
}

/// Diagonalizes `4E_C(n̂ - n_g)² - (E_J/2)Σ(|q⟩⟨q+1| + h.c.)` in the truncated
/// charge basis and returns the three lowest levels with charge matrix
/// elements. Eigenvector signs are fixed so that both `n⁽ᵏ,ᵏ⁺¹⁾` are positive.
pub fn charge_matrix_elements<T: Real>(p: &TransmonParams<T>) -> Result<ChargeMatrixElements<T>> {
    p.validate()?;
    let cutoff = p.charge_basis_cutoff as i64;
    let charges: Vec<T> = (-cutoff..=cutoff).map(|q| T::from_i64(q).expect("small integer")).collect();
    let four = T::lit(4.0);
    let diag: Vec<T> = charges.iter().map(|&q| four * (q - p.gate_charge) * (q - p.gate_charge)).collect();
    let off = vec![-p.ej_over_ec / T::lit(2.0); charges.len() - 1];
    let eig = tridiag_eigen(&diag, &off)?;
    let n = charges.len();

    let mut vecs: Vec<Vec<T>> = (0..3).map(|k| (0..n).map(|r| eig.vector_component(r, k)).collect()).collect();
    for v in &vecs {
        let weight = v[0] * v[0] + v[n - 1] * v[n - 1];
        if weight.as_f64() > 1e-8 {
            return Err(Error::ChargeCutoffTooSmall {
                cutoff: p.charge_basis_cutoff,
                weight: weight.as_f64(),
            });
        }
    }
    // ground state: largest component positive
    let lead = vecs[0]
        .iter()
        .copied()
        .fold(T::zero(), |acc, x| if x.abs() > acc.abs() { x } else { acc });
    if lead < T::zero() {
        vecs[0].iter_mut().for_each(|x| *x = -*x);
    }
    let charge_element = |a: &[T], b: &[T]| -> T { a.iter().zip(b).zip(&charges).map(|((x, y), q)| *x * *q * *y).sum() };
    let mut n01 = charge_element(&vecs[0], &vecs[1]);
    if n01 < T::zero() {
        vecs[1].iter_mut().for_each(|x| *x = -*x);
        n01 = -n01;
    }
    let mut n12 = charge_element(&vecs[1], &vecs[2]);
    if n12 < T::zero() {
        n12 = -n12;
    }
    Ok(ChargeMatrixElements {
        energies: [eig.values[0], eig.values[1], eig.values[2]],
        n01,
        n12,
    })
}

/// Drift `H0` and quadrature controls for one coupling assignment.
#[derive(Debug, Clone)]
pub struct DeviceModel<T> {
    h0: SparseOperator<T>,
    sx: SparseOperator<T>,
    sy: SparseOperator<T>,
    spec: StarGraphSpec<T>,
    shared: SharedPattern<T>,
}

impl<T: Real> DeviceModel<T> {
    pub fn new(h0: SparseOperator<T>, sx: SparseOperator<T>, sy: SparseOperator<T>, spec: StarGraphSpec<T>) -> Result<Self> {
        for op in [&h0, &sx, &sy] {
            if op.dim() != spec.dim() {
                return Err(Error::DimensionMismatch {
                    expected: spec.dim(),
                    actual: op.dim(),
                });
            }
            if !op.is_hermitian() {
                return Err(Error::InvalidParameter("device operators must be hermitian".into()));
            }
        }
        let shared = SharedPattern::new(&[&h0, &sx, &sy])?;
        Ok(Self { h0, sx, sy, spec, shared })
    }

    /// A lone two-level qubit driven by `σˣ, σʸ` with no drift. Useful as
    /// an analytic reference.
    pub fn single_qubit() -> Self {
        let ops = Ladder::<T>::qubit();
        let spec = StarGraphSpec {
            site_count: 1,
            levels: 2,
            driven_site: 0,
            couplings: Vec::new(),
        };
        let (sx, sy) = ops.controls(&spec).expect("single site controls");
        Self::new(SparseOperator::zero(2), sx, sy, spec).expect("consistent single-qubit model")
    }

    pub fn h0(&self) -> &SparseOperator<T> {
        &self.h0
    }

    pub fn sx(&self) -> &SparseOperator<T> {
        &self.sx
    }

    pub fn sy(&self) -> &SparseOperator<T> {
        &self.sy
    }

    /// Control operators in pulse-channel order `[Sˣ, Sʸ]`.
    pub fn controls(&self) -> [&SparseOperator<T>; 2] {
        [&self.sx, &self.sy]
    }

    pub fn spec(&self) -> &StarGraphSpec<T> {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    pub fn levels(&self) -> usize {
        self.spec.levels
    }

    pub fn site_count(&self) -> usize {
        self.spec.site_count
    }

    /// Number of independently driven sites (pulse channels).
    pub fn channels(&self) -> usize {
        1
    }

    pub(crate) fn shared(&self) -> &SharedPattern<T> {
        &self.shared
    }
}

/// Single-site operator set.
struct Ladder<T> {
    raise: LocalOp<T>,
    bare: Option<LocalOp<T>>,
}

impl<T: Real> Ladder<T> {
    fn qubit() -> Self {
        let mut raise = LocalOp::zeros(2);
        raise.set(1, 0, one());
        Self { raise, bare: None }
    }

    fn transmon(anharmonicity: T, ladder_ratio: T) -> Self {
        let mut raise = LocalOp::zeros(3);
        raise.set(1, 0, one());
        raise.set(2, 1, cplx(ladder_ratio, T::zero()));
        let mut bare = LocalOp::zeros(3);
        bare.set(2, 2, cplx(anharmonicity, T::zero()));
        Self { raise, bare: Some(bare) }
    }

    fn controls(&self, spec: &StarGraphSpec<T>) -> Result<(SparseOperator<T>, SparseOperator<T>)> {
        let lower = self.raise.adjoint();
        let x = self.raise.add(&lower);
        let y = self.raise.scaled(cplx(T::zero(), -T::one())).add(&lower.scaled(cplx(T::zero(), T::one())));
        let (l, n, d) = (spec.levels, spec.site_count, spec.driven_site);
        let mut bx = OperatorBuilder::new(spec.dim());
        bx.add_product(l, n, one(), &[(d, &x)])?;
        let mut by = OperatorBuilder::new(spec.dim());
        by.add_product(l, n, one(), &[(d, &y)])?;
        Ok((bx.build(true)?, by.build(true)?))
    }

    fn model(&self, spec: StarGraphSpec<T>) -> Result<DeviceModel<T>> {
        let lower = self.raise.adjoint();
        let (l, n, d) = (spec.levels, spec.site_count, spec.driven_site);
        let mut h0 = OperatorBuilder::new(spec.dim());
        if let Some(bare) = &self.bare {
            for site in 0..n {
                h0.add_product(l, n, one(), &[(site, bare)])?;
            }
        }
        for (site, &j) in spec.boundary_sites().zip(spec.couplings()) {
            let coeff = cplx(j, T::zero());
            h0.add_product(l, n, coeff, &[(site, &self.raise), (d, &lower)])?;
            h0.add_product(l, n, coeff, &[(site, &lower), (d, &self.raise)])?;
        }
        let h0 = h0.build(true)?;
        let (sx, sy) = self.controls(&spec)?;
        DeviceModel::new(h0, sx, sy, spec)
    }
}

#[inline]
fn one<T: Real>() -> C<T> {
    cplx(T::one(), T::zero())
}

/// Two-level star: `H0 = Σ_j J_j(σ⁺_j σ⁻_d + σ⁻_j σ⁺_d)`, controls `σˣ_d, σʸ_d`.
pub fn build_tls_star<T: Real>(spec: &StarGraphSpec<T>) -> Result<DeviceModel<T>> {
    if spec.levels != 2 {
        return Err(Error::InvalidParameter(format!(
            "two-level star requires levels = 2, got {}",
            spec.levels
        )));
    }
    Ladder::qubit().model(spec.clone())
}

/// Three-level transmon star with `Q_j = δ|2⟩⟨2|` and ladder operators
/// normalized by `n⁽¹⁰⁾`.
pub fn build_transmon_star<T: Real>(spec: &StarGraphSpec<T>, params: &TransmonParams<T>) -> Result<DeviceModel<T>> {
    let elements = charge_matrix_elements(params)?;
    build_transmon_star_with(spec, params.anharmonicity(), elements.ladder_ratio())
}

/// Transmon star from an explicit anharmonicity (rad/s) and ladder ratio
/// `n⁽¹²⁾/n⁽⁰¹⁾`.
pub fn build_transmon_star_with<T: Real>(spec: &StarGraphSpec<T>, anharmonicity: T, ladder_ratio: T) -> Result<DeviceModel<T>> {
    if spec.levels != 3 {
        return Err(Error::InvalidParameter(format!(
            "transmon star requires levels = 3, got {}",
            spec.levels
        )));
    }
    Ladder::transmon(anharmonicity, ladder_ratio).model(spec.clone())
}

/// Produces device models for arbitrary coupling assignments.
pub trait ModelBuilder<T: Real>: Sync {
    fn coupling_count(&self) -> usize;

    fn build(&self, couplings: &[T]) -> Result<DeviceModel<T>>;

    /// True when permuting couplings leaves every fidelity unchanged, so
    /// extreme points may be grouped by their number of upper-bound entries.
    fn star_symmetric(&self) -> bool {
        false
    }
}

/// Builds two-level stars with the center at site 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TlsStarBuilder {
    pub site_count: usize,
}

impl<T: Real> ModelBuilder<T> for TlsStarBuilder {
    fn coupling_count(&self) -> usize {
        self.site_count - 1
    }

    fn build(&self, couplings: &[T]) -> Result<DeviceModel<T>> {
        build_tls_star(&StarGraphSpec::new(self.site_count, 2, 0, couplings.to_vec())?)
    }

    fn star_symmetric(&self) -> bool {
        true
    }
}

/// Builds transmon stars with the center at site 0; charge matrix elements
/// are computed once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmonStarBuilder<T> {
    pub site_count: usize,
    anharmonicity: T,
    ladder_ratio: T,
}

impl<T: Real> TransmonStarBuilder<T> {
    pub fn new(site_count: usize, params: &TransmonParams<T>) -> Result<Self> {
        let elements = charge_matrix_elements(params)?;
        Ok(Self {
            site_count,
            anharmonicity: params.anharmonicity(),
            ladder_ratio: elements.ladder_ratio(),
        })
    }

    pub fn ladder_ratio(&self) -> T {
        self.ladder_ratio
    }
}

impl<T: Real> ModelBuilder<T> for TransmonStarBuilder<T> {
    fn coupling_count(&self) -> usize {
        self.site_count - 1
    }

    fn build(&self, couplings: &[T]) -> Result<DeviceModel<T>> {
        let spec = StarGraphSpec::new(self.site_count, 3, 0, couplings.to_vec())?;
        build_transmon_star_with(&spec, self.anharmonicity, self.ladder_ratio)
    }

    fn star_symmetric(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::StateVector;

    fn c(re: f64) -> C<f64> {
        C::new(re, 0.0)
    }

    #[test]
    fn two_qubit_flip_flop_entries() {
        let spec = StarGraphSpec::new(2, 2, 0, vec![0.7]).unwrap();
        let m = build_tls_star(&spec).unwrap();
        assert_eq!(m.h0().nnz(), 2);
        assert_eq!(m.h0().get(0b01, 0b10), c(0.7));
        assert_eq!(m.h0().get(0b10, 0b01), c(0.7));
    }

    #[test]
    fn drift_annihilates_ground_state() {
        for n in 2..6 {
            let spec = StarGraphSpec::new(n, 2, 0, (0..n - 1).map(|k| 1.0 + k as f64).collect()).unwrap();
            let m = build_tls_star(&spec).unwrap();
            let g = StateVector::ground(2, n).unwrap();
            assert!(m.h0().mul_vec(g.amplitudes()).iter().all(|a| *a == C::new(0.0, 0.0)));
        }
        let spec = StarGraphSpec::new(3, 3, 1, vec![1.0, 2.0]).unwrap();
        let m = build_transmon_star(&spec, &TransmonParams::default()).unwrap();
        let g = StateVector::ground(3, 3).unwrap();
        assert!(m.h0().mul_vec(g.amplitudes()).iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn wrong_level_count_is_rejected() {
        let spec3 = StarGraphSpec::new(2, 3, 0, vec![1.0]).unwrap();
        assert!(build_tls_star(&spec3).is_err());
        let spec2 = StarGraphSpec::new(2, 2, 0, vec![1.0]).unwrap();
        assert!(build_transmon_star(&spec2, &TransmonParams::default()).is_err());
        assert!(StarGraphSpec::new(3, 2, 0, vec![1.0]).is_err());
        assert!(StarGraphSpec::<f64>::new(1, 2, 0, vec![]).is_err());
    }

    #[test]
    fn controls_are_paulis_on_the_center() {
        let spec = StarGraphSpec::new(2, 2, 0, vec![1.0]).unwrap();
        let m = build_tls_star(&spec).unwrap();
        // site 0 is the most significant bit
        assert_eq!(m.sx().get(0b10, 0b00), c(1.0));
        assert_eq!(m.sx().get(0b00, 0b10), c(1.0));
        assert_eq!(m.sy().get(0b10, 0b00), C::new(0.0, -1.0));
        assert_eq!(m.sy().get(0b00, 0b10), C::new(0.0, 1.0));
        assert_eq!(m.sx().nnz(), 4);
    }

    #[test]
    fn transmon_ladder_normalization_and_bare_term() {
        let p = TransmonParams::<f64>::default();
        let spec = StarGraphSpec::new(2, 3, 0, vec![0.0]).unwrap();
        let m = build_transmon_star(&spec, &p).unwrap();
        // ⟨1|S⁺|0⟩ = 1 on the driven site (digit weight 3)
        assert_eq!(m.sx().get(3, 0), c(1.0));
        let delta = 2.0 * std::f64::consts::PI * 300e6;
        // |2,0⟩ and |0,2⟩ carry δ, |2,2⟩ carries 2δ; no couplings
        assert_eq!(m.h0().nnz(), 5);
        assert_eq!(m.h0().get(6, 6), c(delta));
        assert_eq!(m.h0().get(2, 2), c(delta));
        assert_eq!(m.h0().get(8, 8), c(2.0 * delta));
    }

    #[test]
    fn charge_cutoff_too_small_is_an_error() {
        let p = TransmonParams {
            ej_over_ec: 5000.0,
            charge_basis_cutoff: 5,
            ..TransmonParams::default()
        };
        assert!(matches!(charge_matrix_elements(&p), Err(Error::ChargeCutoffTooSmall { .. })));
        let p = TransmonParams {
            charge_basis_cutoff: 4,
            ..TransmonParams::<f64>::default()
        };
        assert!(matches!(charge_matrix_elements(&p), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn spectrum_is_periodic_in_gate_charge() {
        let p = TransmonParams::<f64>::default();
        let a = charge_matrix_elements(&p).unwrap();
        let b = charge_matrix_elements(&TransmonParams {
            gate_charge: p.gate_charge + 1.0,
            ..p
        })
        .unwrap();
        for k in 0..3 {
            assert!((a.energies[k] - b.energies[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn level_frequencies_reproduce_qubit_frequency() {
        let e = charge_matrix_elements(&TransmonParams::<f64>::default()).unwrap();
        let w = e.level_frequencies(5e9);
        assert!((w[1] / (2.0 * std::f64::consts::PI) - 5e9).abs() < 1e-3);
        // transmons are negatively anharmonic
        assert!(w[2] - 2.0 * w[1] < 0.0);
    }
}
