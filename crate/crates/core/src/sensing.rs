// Copyright 2026 The robust-ghz Contributors
// SPDX-License-Identifier: Apache-2.0

//! Phase estimation with the prepared state: a phase `θ` per site in level
//! one, parity-like readout `M = ⊗σ_x` restricted to the qubit subspace,
//! and error-propagation variance `Δθ² = ΔM²/(∂⟨M⟩/∂θ)²`.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{forward_states, EvolutionConfig};
use crate::device::DeviceModel;
use crate::error::{Error, Result};
use crate::pulse::PulseSet;
use crate::scalar::{cis, Real, C};
use crate::tensor::StateVector;

/// Default `|∂⟨M⟩/∂θ|` below which `Δθ²` is not reported.
pub const DERIVATIVE_FLOOR: f64 = 1e-6;

/// Number of points in the default θ grid.
pub const DEFAULT_GRID_POINTS: usize = 201;

fn digits_iter(levels: usize, sites: usize, mut index: usize) -> impl Iterator<Item = usize> {
    let mut out = vec![0; sites];
    for slot in out.iter_mut().rev() {
        *slot = index % levels;
        index /= levels;
    }
    out.into_iter()
}

fn count_level(psi: &StateVector<impl Real>, index: usize, level: usize) -> usize {
    digits_iter(psi.site_levels(), psi.site_count(), index)
        .filter(|&d| d == level)
        .count()
}

/// Index with every qubit digit flipped, or `None` if some site is in `|2⟩`.
fn flipped(psi: &StateVector<impl Real>, index: usize) -> Option<usize> {
    let l = psi.site_levels();
    let mut out = 0;
    for d in digits_iter(l, psi.site_count(), index) {
        if d > 1 {
            return None;
        }
        out = out * l + (1 - d);
    }
    Some(out)
}

/// `U^{⊗N}|ψ⟩` with `U = e^{iθ}|1⟩⟨1| + Σ_{k≠1}|k⟩⟨k|`.
pub fn apply_phase_shift<T: Real>(psi: &StateVector<T>, theta: T) -> StateVector<T> {
    let amps = psi
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let n1 = count_level(psi, i, 1);
            if n1 == 0 {
                a
            } else {
                a * cis(theta * T::from_usize(n1).expect("small count"))
            }
        })
        .collect();
    psi.with_amplitudes(amps)
}

fn apply_m<T: Real>(psi: &StateVector<T>, x: &[C<T>]) -> Vec<C<T>> {
    let mut y = vec![C::new(T::zero(), T::zero()); x.len()];
    for (i, &a) in x.iter().enumerate() {
        if let Some(j) = flipped(psi, i) {
            y[j] = a;
        }
    }
    y
}

/// `(⟨M⟩, ⟨M²⟩ - ⟨M⟩²)`; `M²` is the projector onto the qubit subspace.
pub fn measure_m<T: Real>(psi: &StateVector<T>) -> (T, T) {
    let a = psi.amplitudes();
    let m_psi = apply_m(psi, a);
    let expect = psi.inner(&psi.with_amplitudes(m_psi)).re;
    let m2: T = a
        .iter()
        .enumerate()
        .filter(|(i, _)| flipped(psi, *i).is_some())
        .map(|(_, v)| v.norm_sqr())
        .sum();
    (expect, (m2 - expect * expect).max(T::zero()))
}

/// `∂⟨M⟩/∂θ = i⟨ψ(θ)|[M, P₁]|ψ(θ)⟩ = -2·Im⟨ψ(θ)|M P₁|ψ(θ)⟩`, with `P₁`
/// counting sites in level one.
pub fn m_derivative<T: Real>(shifted: &StateVector<T>) -> T {
    let p1: Vec<C<T>> = shifted
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, &a)| a * T::from_usize(count_level(shifted, i, 1)).expect("small count"))
        .collect();
    let mp1 = apply_m(shifted, &p1);
    T::lit(-2.0) * shifted.inner(&shifted.with_amplitudes(mp1)).im
}

/// `(k + 1/4)·2π/(201N)` for `k = 0..201`: covers `[0, 2π/N)` and never
/// lands on a zero of `sin(Nθ)`.
pub fn default_theta_grid<T: Real>(site_count: usize) -> Vec<T> {
    theta_grid(site_count, DEFAULT_GRID_POINTS)
}

/// `(k + 1/4)·2π/(PN)` for `k = 0..P`.
pub fn theta_grid<T: Real>(site_count: usize, points: usize) -> Vec<T> {
    let h = 2.0 * std::f64::consts::PI / (points as f64 * site_count as f64);
    (0..points).map(|k| T::lit((k as f64 + 0.25) * h)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensingCurve<T> {
    pub site_count: usize,
    pub theta: Vec<T>,
    pub expect_m: Vec<T>,
    pub var_m: Vec<T>,
    pub dm_dtheta: Vec<T>,
    /// `None` where the derivative is below the floor.
    pub var_theta: Vec<Option<T>>,
}

impl<T: Real> SensingCurve<T> {
    pub const CSV_COLUMNS: [&'static str; 6] = ["theta", "expect_M", "var_M", "dM_dtheta", "var_theta", "masked"];
    pub const CSV_UNITS: [&'static str; 6] = ["rad", "1", "1", "1/rad", "rad^2", "bool"];

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn masked(&self, k: usize) -> bool {
        self.var_theta[k].is_none()
    }

    /// Column-name row, unit row, then one row per θ; masked rows leave
    /// `var_theta` empty.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n{}\n", Self::CSV_COLUMNS.join(","), Self::CSV_UNITS.join(","));
        for k in 0..self.len() {
            let vt = self.var_theta[k].map(|v| format!("{:e}", v.as_f64())).unwrap_or_default();
            let _ = writeln!(
                out,
                "{:e},{:e},{:e},{:e},{},{}",
                self.theta[k].as_f64(),
                self.expect_m[k].as_f64(),
                self.var_m[k].as_f64(),
                self.dm_dtheta[k].as_f64(),
                vt,
                self.masked(k)
            );
        }
        out
    }
}

/// Evaluates the readout statistics of `psi` over `thetas`.
pub fn sensing_curve<T: Real>(psi: &StateVector<T>, thetas: &[T], derivative_floor: T) -> SensingCurve<T> {
    let rows: Vec<(T, T, T)> = thetas
        .par_iter()
        .map(|&th| {
            let shifted = apply_phase_shift(psi, th);
            let (e, v) = measure_m(&shifted);
            (e, v, m_derivative(&shifted))
        })
        .collect();
    SensingCurve {
        site_count: psi.site_count(),
        theta: thetas.to_vec(),
        expect_m: rows.iter().map(|r| r.0).collect(),
        var_m: rows.iter().map(|r| r.1).collect(),
        dm_dtheta: rows.iter().map(|r| r.2).collect(),
        var_theta: rows
            .iter()
            .map(|&(_, v, d)| (d.abs() >= derivative_floor).then(|| v / (d * d)))
            .collect(),
    }
}

/// Population of `|2⟩` on each site.
pub fn level_two_populations<T: Real>(psi: &StateVector<T>) -> Result<Vec<T>> {
    if psi.site_levels() < 3 {
        return Err(Error::LeakageUndefined { levels: psi.site_levels() });
    }
    let mut pops = vec![T::zero(); psi.site_count()];
    for (i, a) in psi.amplitudes().iter().enumerate() {
        let p = a.norm_sqr();
        for (site, d) in digits_iter(psi.site_levels(), psi.site_count(), i).enumerate() {
            if d == 2 {
                pops[site] = pops[site] + p;
            }
        }
    }
    Ok(pops)
}

/// `P⁽²⁾ = Σ_j P⁽²⁾_j`.
pub fn leakage<T: Real>(psi: &StateVector<T>) -> Result<T> {
    Ok(level_two_populations(psi)?.into_iter().sum())
}

/// Population outside the qubit subspace (at least one site in `|2⟩`).
pub fn population_outside_qubit_subspace<T: Real>(psi: &StateVector<T>) -> T {
    psi.amplitudes()
        .iter()
        .enumerate()
        .filter(|(i, _)| flipped(psi, *i).is_none())
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

/// `P⁽²⁾` at every bin boundary `t_n = nΔt`, `n = 0..=m`, starting from `|0…0⟩`.
pub fn leakage_trajectory<T: Real>(pulse: &PulseSet<T>, model: &DeviceModel<T>, cfg: &EvolutionConfig<T>) -> Result<Vec<T>> {
    let ground = StateVector::ground(model.levels(), model.site_count())?;
    forward_states(&ground, pulse, model, cfg)?
        .iter()
        .map(leakage)
        .collect()
}
