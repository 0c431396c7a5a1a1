// Copyright 2026 The robust-ghz Contributors
// SPDX-License-Identifier: Apache-2.0

//! Dense reference implementations shared by the integration tests.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use robust_ghz::tensor::{OperatorBuilder, SparseOperator, StateVector};

pub type Dense = DMatrix<Complex64>;

pub fn dense(op: &SparseOperator<f64>) -> Dense {
    let n = op.dim();
    let mut m = Dense::zeros(n, n);
    for (r, c, v) in op.triplets() {
        m[(r, c)] += v;
    }
    m
}

/// `exp(-iHt)` from the eigendecomposition of a Hermitian matrix.
pub fn expm_hermitian(h: &Dense, t: f64) -> Dense {
    let eig = h.clone().symmetric_eigen();
    let v = eig.eigenvectors;
    let phases = Dense::from_diagonal(&eig.eigenvalues.map(|l| Complex64::from_polar(1.0, -l * t)));
    &v * phases * v.adjoint()
}

pub fn column(psi: &StateVector<f64>) -> Dense {
    Dense::from_column_slice(psi.dim(), 1, psi.amplitudes())
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Random Hermitian operator with roughly `density` of the off-diagonal pairs set.
pub fn random_hermitian<R: Rng>(rng: &mut R, dim: usize, density: f64, scale: f64) -> SparseOperator<f64> {
    let mut b = OperatorBuilder::new(dim);
    for r in 0..dim {
        b.push(r, r, Complex64::new(rng.gen_range(-scale..scale), 0.0));
        for c in r + 1..dim {
            if rng.gen_bool(density) {
                let v = Complex64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale));
                b.push(r, c, v);
                b.push(c, r, v.conj());
            }
        }
    }
    b.build(true).unwrap()
}

pub fn random_state<R: Rng>(rng: &mut R, levels: usize, sites: usize) -> StateVector<f64> {
    let dim = levels.pow(sites as u32);
    let amps = (0..dim)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    StateVector::from_amplitudes(levels, sites, amps).unwrap().normalized()
}

/// Spectral norm bound `max_r Σ_c |H_rc|`.
pub fn row_sum_norm(op: &SparseOperator<f64>) -> f64 {
    let mut rows = vec![0.0; op.dim()];
    for (r, _, v) in op.triplets() {
        rows[r] += v.norm();
    }
    rows.into_iter().fold(0.0, f64::max)
}
