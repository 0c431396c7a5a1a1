// Copyright 2026 The robust-ghz Contributors
// SPDX-License-Identifier: Apache-2.0

//! Time evolution under a piecewise-constant pulse, state-transfer
//! fidelity and its gradient with respect to every bin amplitude.
//!
//! Forward states `ψᶠ_n = U_n⋯U_1|ψ₀⟩` and costates
//! `ψᵇ_n = U_n†⋯U_m†|ψ_tg⟩` are stored once; the derivative of the overlap
//! `A = ⟨ψ_tg|ψᶠ_m⟩` with respect to a bin-`n` amplitude of control `S` is
//!
//! ```text
//! ∂A/∂Ω = ⟨ψᵇ_{n+1}| X |ψᶠ_n⟩,
//! X = -i Σ_k (-i)^k Δt^{k+1}/(k+1)! · ad_H^k(S)
//!   = -iΔt·S - (Δt²/2)·[H_n, S] + O(Δt³)
//! ```
//!
//! and `∂F/∂Ω = 2·Re(conj(A)·∂A/∂Ω)`. Nested commutators are never formed:
//! `⟨χ|ad_H^k(S)|ψ⟩ = Σ_j C(k,j)(-1)^j ⟨H^{k-j}χ|S H^j ψ⟩`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::device::DeviceModel;
use crate::error::{Error, Result};
use crate::pulse::PulseSet;
use crate::scalar::{Real, C};
use crate::tensor::{expv, inner, Combined, KrylovConfig, LinearOperator, SparseOperator, StateVector};

/// How many terms of the commutator expansion of `∂U_n/∂Ω` are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMethod {
    /// `-iΔt·S - (Δt²/2)·[H_n, S]`, exact to `O(Δt³)`.
    SecondOrder,
    /// Expansion summed until terms fall below machine precision relative
    /// to the running sum, capped at `max_order`. Bins with a wide spectrum
    /// are split so the sum stays well conditioned.
    Series { max_order: usize },
}

impl Default for GradientMethod {
    fn default() -> Self {
        GradientMethod::Series { max_order: 60 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionConfig<T> {
    pub krylov: KrylovConfig<T>,
    pub gradient: GradientMethod,
}

impl<T: Real> Default for EvolutionConfig<T> {
    fn default() -> Self {
        Self {
            krylov: KrylovConfig::default(),
            gradient: GradientMethod::default(),
        }
    }
}

/// Stored trajectories for one (pulse, model, target) triple.
#[derive(Debug, Clone)]
pub struct PropagationRecord<T> {
    /// `ψᶠ_0 … ψᶠ_m`.
    pub forward: Vec<StateVector<T>>,
    /// `ψᵇ_1 … ψᵇ_{m+1}`; `backward[n]` is `ψᵇ_{n+1}`, so `backward[m]` is the target.
    pub backward: Vec<StateVector<T>>,
}

impl<T: Real> PropagationRecord<T> {
    /// `⟨ψᵇ_{n+1}|ψᶠ_n⟩`, identical for every `n` up to propagation error.
    pub fn overlap_at(&self, n: usize) -> C<T> {
        self.backward[n].inner(&self.forward[n])
    }

    /// `⟨ψ_tg|ψᶠ_m⟩`.
    pub fn overlap(&self) -> C<T> {
        let m = self.forward.len() - 1;
        self.overlap_at(m)
    }

    pub fn fidelity(&self) -> T {
        self.overlap().norm_sqr()
    }

    pub fn final_state(&self) -> &StateVector<T> {
        self.forward.last().expect("record holds at least the initial state")
    }
}

fn check_shapes<T: Real>(pulse: &PulseSet<T>, model: &DeviceModel<T>, state: &StateVector<T>) -> Result<()> {
    if pulse.channels() != model.channels() {
        return Err(Error::DimensionMismatch {
            expected: model.channels(),
            actual: pulse.channels(),
        });
    }
    if state.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            actual: state.dim(),
        });
    }
    Ok(())
}

/// `H_n = H0 + Σ_μ Ω^μ_n S^μ` on the model's shared sparsity pattern.
fn bin_hamiltonian<T: Real>(model: &DeviceModel<T>, pulse: &PulseSet<T>, bin: usize) -> Combined<T> {
    let mut coeffs = Vec::with_capacity(1 + 2 * pulse.channels());
    coeffs.push(T::one());
    coeffs.extend_from_slice(pulse.bin(bin));
    model.shared().combine(&coeffs)
}

fn initial_state<T: Real>(model: &DeviceModel<T>) -> Result<StateVector<T>> {
    StateVector::ground(model.levels(), model.site_count())
}

/// Forward states from `initial`, all `m + 1` of them.
pub fn forward_states<T: Real>(
    initial: &StateVector<T>,
    pulse: &PulseSet<T>,
    model: &DeviceModel<T>,
    cfg: &EvolutionConfig<T>,
) -> Result<Vec<StateVector<T>>> {
    check_shapes(pulse, model, initial)?;
    let dt = pulse.grid().dt();
    let mut states = Vec::with_capacity(pulse.bins() + 1);
    states.push(initial.clone());
    for bin in 0..pulse.bins() {
        let h = bin_hamiltonian(model, pulse, bin);
        let next = expv(&h, states[bin].amplitudes(), dt, &cfg.krylov)?;
        states.push(initial.with_amplitudes(next));
    }
    Ok(states)
}

/// `U(T)|initial⟩` without storing intermediate states.
pub fn evolve<T: Real>(
    initial: &StateVector<T>,
    pulse: &PulseSet<T>,
    model: &DeviceModel<T>,
    cfg: &EvolutionConfig<T>,
) -> Result<StateVector<T>> {
    check_shapes(pulse, model, initial)?;
    let dt = pulse.grid().dt();
    let mut psi = initial.amplitudes().to_vec();
    for bin in 0..pulse.bins() {
        let h = bin_hamiltonian(model, pulse, bin);
        psi = expv(&h, &psi, dt, &cfg.krylov)?;
    }
    Ok(initial.with_amplitudes(psi))
}

/// End-of-pulse state starting from `|0…0⟩`.
pub fn final_state<T: Real>(pulse: &PulseSet<T>, model: &DeviceModel<T>, cfg: &EvolutionConfig<T>) -> Result<StateVector<T>> {
    evolve(&initial_state(model)?, pulse, model, cfg)
}

fn backward_states<T: Real>(
    pulse: &PulseSet<T>,
    model: &DeviceModel<T>,
    target: &StateVector<T>,
    cfg: &EvolutionConfig<T>,
) -> Result<Vec<StateVector<T>>> {
    let m = pulse.bins();
    let dt = pulse.grid().dt();
    let mut states = vec![target.clone(); m + 1];
    for bin in (0..m).rev() {
        let h = bin_hamiltonian(model, pulse, bin);
        // ψᵇ_n = U_n† ψᵇ_{n+1}
        let prev = expv(&h, states[bin + 1].amplitudes(), -dt, &cfg.krylov)?;
        states[bin] = target.with_amplitudes(prev);
    }
    Ok(states)
}

/// Forward and backward sweeps (`2m` Krylov propagations).
pub fn propagate<T: Real>(
    pulse: &PulseSet<T>,
    model: &DeviceModel<T>,
    target: &StateVector<T>,
    cfg: &EvolutionConfig<T>,
) -> Result<PropagationRecord<T>> {
    check_shapes(pulse, model, target)?;
    let initial = initial_state(model)?;
    let (forward, backward) = rayon::join(
        || forward_states(&initial, pulse, model, cfg),
        || backward_states(pulse, model, target, cfg),
    );
    Ok(PropagationRecord {
        forward: forward?,
        backward: backward?,
    })
}

/// `|⟨target|U(T)|initial⟩|²`.
pub fn transfer_fidelity<T: Real>(
    initial: &StateVector<T>,
    pulse: &PulseSet<T>,
    model: &DeviceModel<T>,
    target: &StateVector<T>,
    cfg: &EvolutionConfig<T>,
) -> Result<T> {
    check_shapes(pulse, model, target)?;
    Ok(target.inner(&evolve(initial, pulse, model, cfg)?).norm_sqr())
}

/// `F = |⟨ψ_tg|U(T)|0…0⟩|²`.
pub fn fidelity<T: Real>(pulse: &PulseSet<T>, model: &DeviceModel<T>, target: &StateVector<T>, cfg: &EvolutionConfig<T>) -> Result<T> {
    transfer_fidelity(&initial_state(model)?, pulse, model, target, cfg)
}

/// `F` and `∂F/∂c` in the pulse's flat amplitude layout.
pub fn fidelity_and_gradient<T: Real>(
    pulse: &PulseSet<T>,
    model: &DeviceModel<T>,
    target: &StateVector<T>,
    cfg: &EvolutionConfig<T>,
) -> Result<(T, Vec<T>)> {
    let record = propagate(pulse, model, target, cfg)?;
    let grad = gradient_from_record(&record, pulse, model, cfg)?;
    Ok((record.fidelity(), grad))
}

/// Gradient from an existing record; a constant number of sparse products
/// per bin against the stored states.
pub fn gradient_from_record<T: Real>(
    record: &PropagationRecord<T>,
    pulse: &PulseSet<T>,
    model: &DeviceModel<T>,
    cfg: &EvolutionConfig<T>,
) -> Result<Vec<T>> {
    if record.forward.len() != pulse.bins() + 1 || record.backward.len() != pulse.bins() + 1 {
        return Err(Error::DimensionMismatch {
            expected: pulse.bins() + 1,
            actual: record.forward.len(),
        });
    }
    let overlap = record.overlap();
    let dt = pulse.grid().dt();
    let per_bin: Vec<Vec<C<T>>> = (0..pulse.bins())
        .into_par_iter()
        .map(|bin| {
            let h = bin_hamiltonian(model, pulse, bin);
            bin_derivatives(
                &h,
                &model.controls(),
                record.backward[bin + 1].amplitudes(),
                record.forward[bin + 1].amplitudes(),
                dt,
                cfg,
            )
        })
        .collect::<Result<_>>()?;
    let two = T::lit(2.0);
    let mut grad = vec![T::zero(); pulse.len()];
    for (bin, derivs) in per_bin.iter().enumerate() {
        for (k, d) in derivs.iter().enumerate() {
            grad[bin * derivs.len() + k] = two * (overlap.conj() * d).re;
        }
    }
    Ok(grad)
}

/// Largest `τ` times the half-width of the spectrum of `H` for which the
/// series is summed directly; beyond it the bin is split.
const SERIES_REACH: f64 = 4.0;

/// `H - c`, which leaves every commutator unchanged.
struct Shifted<'a, T> {
    h: &'a Combined<T>,
    shift: T,
}

impl<T: Real> LinearOperator<T> for Shifted<'_, T> {
    fn dim(&self) -> usize {
        self.h.dim()
    }

    fn apply_into(&self, x: &[C<T>], y: &mut [C<T>]) {
        self.h.apply_into(x, y);
        for (v, &u) in y.iter_mut().zip(x) {
            *v = *v - u * self.shift;
        }
    }
}

/// `⟨χ|X_c|ψ⟩` for one bin, `ψ = ψᶠ_n`, `χ = ψᵇ_{n+1}`.
///
/// For the full series the spectrum is centered first and, when `Δt·‖H - c‖`
/// is still large, the bin is cut into `s = 2^p` pieces of length `τ`:
/// `X(Δt) = Σ_{r<s} V^r X(τ) V^{-r}` with `V = e^{-iHτ}`, which keeps the
/// alternating sums well conditioned.
fn bin_derivatives<T: Real>(
    h: &Combined<T>,
    controls: &[&SparseOperator<T>],
    chi: &[C<T>],
    psi: &[C<T>],
    dt: T,
    cfg: &EvolutionConfig<T>,
) -> Result<Vec<C<T>>> {
    let max_order = match cfg.gradient {
        GradientMethod::SecondOrder => return Ok(overlap_derivatives(h, controls, chi, psi, dt, 1, false)),
        GradientMethod::Series { max_order } => max_order.max(1),
    };
    let (lo, hi) = h.spectral_bounds();
    let shifted = Shifted {
        h,
        shift: (lo + hi) / T::lit(2.0),
    };
    let reach = ((hi - lo) / T::lit(2.0) * dt.abs()).as_f64();
    let mut pieces = 1usize;
    while reach / pieces as f64 > SERIES_REACH {
        pieces *= 2;
    }
    let tau = dt / T::from_usize(pieces).expect("small count");
    let mut sums = overlap_derivatives(&shifted, controls, chi, psi, tau, max_order, true);
    let (mut chi_r, mut psi_r) = (chi.to_vec(), psi.to_vec());
    for _ in 1..pieces {
        chi_r = expv(h, &chi_r, -tau, &cfg.krylov)?;
        psi_r = expv(h, &psi_r, -tau, &cfg.krylov)?;
        let part = overlap_derivatives(&shifted, controls, &chi_r, &psi_r, tau, max_order, true);
        for (s, p) in sums.iter_mut().zip(part) {
            *s = *s + p;
        }
    }
    Ok(sums)
}

/// `⟨χ|X_c(Δt)|ψ⟩` for every control `c` from the truncated series.
fn overlap_derivatives<T: Real, H: LinearOperator<T>>(
    h: &H,
    controls: &[&SparseOperator<T>],
    chi: &[C<T>],
    psi: &[C<T>],
    dt: T,
    max_order: usize,
    adaptive: bool,
) -> Vec<C<T>> {
    let n = psi.len();
    let scaled_apply = |x: &[C<T>]| -> Vec<C<T>> {
        let mut y = vec![C::new(T::zero(), T::zero()); n];
        h.apply_into(x, &mut y);
        y.iter_mut().for_each(|v| *v = *v * dt);
        y
    };
    // (Δt·H)^j applied to ψ and χ
    let mut psi_pows: Vec<Vec<C<T>>> = vec![psi.to_vec()];
    let mut chi_pows: Vec<Vec<C<T>>> = vec![chi.to_vec()];
    // S_c (Δt·H)^j ψ
    let mut s_psi: Vec<Vec<Vec<C<T>>>> = controls.iter().map(|s| vec![s.mul_vec(psi)]).collect();

    let zero = C::new(T::zero(), T::zero());
    let minus_i = C::new(T::zero(), -T::one());
    let mut sums = vec![zero; controls.len()];
    let scale: T = s_psi.iter().map(|v| crate::tensor::norm_of(&v[0])).fold(T::zero(), T::max) * dt;
    // Pascal row C(k, ·)
    let mut binom: Vec<T> = vec![T::one()];
    // -i·(-i)^k/(k+1)!·Δt
    let mut coef = minus_i * dt;
    let mut quiet = 0;
    for k in 0..=max_order {
        if k > 0 {
            let next_psi = scaled_apply(&psi_pows[k - 1]);
            let next_chi = scaled_apply(&chi_pows[k - 1]);
            for (c, s) in controls.iter().enumerate() {
                s_psi[c].push(s.mul_vec(&next_psi));
            }
            psi_pows.push(next_psi);
            chi_pows.push(next_chi);
            let mut row = vec![T::one(); k + 1];
            for j in 1..k {
                row[j] = binom[j - 1] + binom[j];
            }
            binom = row;
            coef = coef * minus_i / T::from_usize(k + 1).expect("small order");
        }
        let mut largest = T::zero();
        for (c, sum) in sums.iter_mut().enumerate() {
            let mut acc = zero;
            for j in 0..=k {
                let term = inner(&chi_pows[k - j], &s_psi[c][j]) * binom[j];
                acc = if j % 2 == 0 { acc + term } else { acc - term };
            }
            let term = acc * coef;
            largest = largest.max(term.norm());
            *sum = *sum + term;
        }
        if adaptive && k >= 1 {
            let mag = sums.iter().map(|s| s.norm()).fold(scale, T::max);
            if largest <= T::epsilon() * mag {
                quiet += 1;
                if quiet >= 2 {
                    break;
                }
            } else {
                quiet = 0;
            }
        }
    }
    sums
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{build_tls_star, StarGraphSpec};
    use crate::pulse::PulseGrid;

    #[test]
    fn zero_pulse_keeps_ground_state() {
        let spec = StarGraphSpec::new(4, 2, 0, vec![1e8, 1.1e8, 0.9e8]).unwrap();
        let model = build_tls_star(&spec).unwrap();
        let pulse = PulseSet::zeros(PulseGrid::new(1e-7, 10).unwrap(), 1, 1e9).unwrap();
        let ground = StateVector::ground(2, 4).unwrap();
        let rec = propagate(&pulse, &model, &ground, &EvolutionConfig::default()).unwrap();
        assert_eq!(rec.final_state(), &ground);
        assert_eq!(fidelity(&pulse, &model, &ground, &EvolutionConfig::default()).unwrap(), 1.0);
    }

    #[test]
    fn rabi_pi_pulse() {
        let model = DeviceModel::<f64>::single_qubit();
        let t = 2e-8;
        let omega = std::f64::consts::FRAC_PI_2 / t;
        let grid = PulseGrid::new(t, 4).unwrap();
        let pulse = PulseSet::constant(grid, 1, omega, 0.0, 2.0 * omega).unwrap();
        let one = StateVector::basis(2, &[1]).unwrap();
        let f = fidelity(&pulse, &model, &one, &EvolutionConfig::default()).unwrap();
        assert!((f - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_bin_gradient_is_analytic() {
        // F = sin²(ΩΔt), dF/dΩ = Δt·sin(2ΩΔt)
        let model = DeviceModel::<f64>::single_qubit();
        let dt = 1e-8;
        let omega = 0.37 / dt;
        let pulse = PulseSet::constant(PulseGrid::new(dt, 1).unwrap(), 1, omega, 0.0, 1e9).unwrap();
        let one = StateVector::basis(2, &[1]).unwrap();
        let (f, g) = fidelity_and_gradient(&pulse, &model, &one, &EvolutionConfig::default()).unwrap();
        assert!((f - (omega * dt).sin().powi(2)).abs() < 1e-14);
        let want = dt * (2.0 * omega * dt).sin();
        assert!((g[0] - want).abs() < 1e-12 * want.abs());
        // y quadrature is stationary for a pure-x pulse starting at |0⟩
        assert!(g[1].abs() < 1e-12 * want.abs());
    }

    #[test]
    fn channel_mismatch_is_rejected() {
        let model = DeviceModel::<f64>::single_qubit();
        let pulse = PulseSet::zeros(PulseGrid::new(1.0, 2).unwrap(), 2, 1.0).unwrap();
        let one = StateVector::basis(2, &[1]).unwrap();
        assert!(fidelity(&pulse, &model, &one, &EvolutionConfig::default()).is_err());
    }
}
