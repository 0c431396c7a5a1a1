// Copyright 2026 The robust-ghz Contributors
// SPDX-License-Identifier: Apache-2.0

//! `exp(-iH·t)·ψ` by Lanczos projection onto a small Krylov subspace.
//!
//! The subspace `span{ψ, Hψ, …, H^{k-1}ψ}` is built with the Hermitian
//! three-term recurrence (plus one reorthogonalization pass), the projected
//! tridiagonal matrix is diagonalized exactly, and the step is accepted once
//! the residual estimate
//!
//! ```text
//! err(τ) ≈ β · β_k · |τ| · |e_kᵀ φ₁(-iτT_k) e₁|,   φ₁(z) = (eᶻ - 1)/z
//! ```
//!
//! drops below `tolerance · |τ| / |t|`. Otherwise `τ` is halved, reusing the
//! same basis, and the remainder of the interval is covered by further
//! substeps.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{cis, cplx, Real, C};

use super::sparse::{LinearOperator, SparseOperator};
use super::state::{inner, norm, StateVector};
use super::tridiag::tridiag_eigen_rows;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovConfig<T> {
    pub max_subspace_dim: usize,
    pub tolerance: T,
    pub max_substeps: usize,
}

impl<T: Real> Default for KrylovConfig<T> {
    fn default() -> Self {
        Self {
            max_subspace_dim: 30,
            // 1e-12 is out of reach in single precision
            tolerance: T::lit(1e-12).max(T::epsilon() * T::lit(1e3)),
            max_substeps: 64,
        }
    }
}

impl<T: Real> KrylovConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.max_subspace_dim < 2 {
            return Err(Error::InvalidParameter("max_subspace_dim must be at least 2".into()));
        }
        if !(self.tolerance > T::zero()) {
            return Err(Error::InvalidParameter("krylov tolerance must be positive".into()));
        }
        if self.max_substeps == 0 {
            return Err(Error::InvalidParameter("max_substeps must be positive".into()));
        }
        Ok(())
    }
}

/// `exp(-iH·dt)·ψ` for Hermitian `H` without forming the exponential.
pub fn krylov_expv<T: Real>(h: &SparseOperator<T>, psi: &StateVector<T>, dt: T, cfg: &KrylovConfig<T>) -> Result<StateVector<T>> {
    if !h.is_hermitian() {
        return Err(Error::InvalidParameter("krylov_expv requires a hermitian generator".into()));
    }
    if h.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            actual: psi.dim(),
        });
    }
    let out = expv(h, psi.amplitudes(), dt, cfg)?;
    Ok(psi.with_amplitudes(out))
}

/// Lanczos basis with the projected tridiagonal matrix.
struct Lanczos<T> {
    basis: Vec<Vec<C<T>>>,
    alpha: Vec<T>,
    beta: Vec<T>,
    /// `β_k`, the norm of the residual left after the last basis vector.
    residual: T,
}

/// Spectral data of `T_k` needed to evaluate a trial step size.
struct Projection<T> {
    values: Vec<T>,
    first_row: Vec<T>,
    last_row: Vec<T>,
}

impl<T: Real> Projection<T> {
    fn new(lz: &Lanczos<T>) -> Result<Self> {
        let k = lz.alpha.len();
        let (values, rows) = tridiag_eigen_rows(&lz.alpha, &lz.beta[..k - 1], &[0, k - 1])?;
        Ok(Self {
            values,
            first_row: rows[..k].to_vec(),
            last_row: rows[k..].to_vec(),
        })
    }

    /// `β_k · |e_kᵀ φ₁(-iτT) e₁|`; multiply by `β·|τ|` for the error estimate.
    fn error_rate(&self, tau: T, residual: T) -> T {
        if residual.is_zero() {
            return T::zero();
        }
        let mut acc = C::<T>::zero();
        for ((&lam, &q0), &qk) in self.values.iter().zip(&self.first_row).zip(&self.last_row) {
            acc = acc + phi1(-tau * lam) * (q0 * qk);
        }
        residual * acc.norm()
    }
}

/// `φ₁(-iθ) = (e^{-iθ} - 1)/(-iθ)`.
fn phi1<T: Real>(theta: T) -> C<T> {
    if theta.abs() < T::lit(1e-5) {
        // series: 1 + z/2 + z²/6 with z = iθ·(-1)
        let z = cplx(T::zero(), theta);
        return C::new(T::one(), T::zero()) + z / T::lit(2.0) + z * z / T::lit(6.0);
    }
    let z = cplx(T::zero(), theta);
    (cis(theta) - C::new(T::one(), T::zero())) / z
}

fn lanczos<T: Real, A: LinearOperator<T> + ?Sized>(
    h: &A,
    start: &[C<T>],
    start_norm: T,
    kmax: usize,
    mut converged: impl FnMut(&Lanczos<T>) -> Result<bool>,
) -> Result<Lanczos<T>> {
    let n = start.len();
    let mut lz = Lanczos {
        basis: vec![start.iter().map(|a| *a / start_norm).collect()],
        alpha: Vec::with_capacity(kmax),
        beta: Vec::with_capacity(kmax),
        residual: T::zero(),
    };
    let mut u = vec![C::zero(); n];
    let mut scale = T::zero();
    for j in 0..kmax {
        h.apply_into(&lz.basis[j], &mut u);
        let a = inner(&lz.basis[j], &u).re;
        for (ui, vi) in u.iter_mut().zip(&lz.basis[j]) {
            *ui = *ui - *vi * a;
        }
        if j > 0 {
            let b = lz.beta[j - 1];
            for (ui, vi) in u.iter_mut().zip(&lz.basis[j - 1]) {
                *ui = *ui - *vi * b;
            }
        }
        for v in &lz.basis {
            let c = inner(v, &u);
            for (ui, vi) in u.iter_mut().zip(v) {
                *ui = *ui - *vi * c;
            }
        }
        let b = norm(&u);
        lz.alpha.push(a);
        scale = scale.max(a.abs() + b + lz.beta.last().copied().unwrap_or(T::zero()));
        if b <= scale * T::epsilon() * T::lit(16.0) {
            lz.residual = T::zero();
            lz.beta.push(T::zero());
            return Ok(lz);
        }
        lz.beta.push(b);
        lz.residual = b;
        if j + 1 == kmax || j + 1 == n || converged(&lz)? {
            return Ok(lz);
        }
        lz.basis.push(u.iter().map(|x| *x / b).collect());
    }
    Ok(lz)
}

/// Core propagator on raw amplitudes; `h` must be Hermitian.
pub(crate) fn expv<T: Real, A: LinearOperator<T> + ?Sized>(h: &A, x: &[C<T>], dt: T, cfg: &KrylovConfig<T>) -> Result<Vec<C<T>>> {
    cfg.validate()?;
    if !dt.is_finite() {
        return Err(Error::InvalidParameter("time step must be finite".into()));
    }
    let mut w = x.to_vec();
    if dt.is_zero() || w.is_empty() {
        return Ok(w);
    }
    let kmax = cfg.max_subspace_dim.min(w.len());
    let sign = dt.signum();
    let total = dt.abs();
    // error budget per unit |time|
    let budget = cfg.tolerance / total;
    let mut remaining = total;
    let mut tau = total;
    let mut substeps = 0usize;
    let mut last_estimate = T::zero();

    while remaining > T::zero() {
        if substeps >= cfg.max_substeps {
            return Err(Error::KrylovNonConvergence {
                substeps,
                estimate: last_estimate.as_f64(),
            });
        }
        let beta = norm(&w);
        if beta.is_zero() {
            return Ok(w);
        }
        tau = tau.min(remaining);
        let trial = tau * sign;
        let lz = lanczos(h, &w, beta, kmax, |lz| {
            if lz.alpha.len() < 2 || lz.alpha.len() % 4 != 0 {
                return Ok(false);
            }
            let proj = Projection::new(lz)?;
            Ok(beta * proj.error_rate(trial, lz.residual) <= budget)
        })?;
        let proj = Projection::new(&lz)?;
        let mut halvings = 0;
        loop {
            let rate = beta * proj.error_rate(tau * sign, lz.residual);
            last_estimate = rate * tau;
            if rate <= budget {
                break;
            }
            halvings += 1;
            tau = tau / T::lit(2.0);
            if halvings > 60 || tau.is_zero() {
                return Err(Error::KrylovNonConvergence {
                    substeps,
                    estimate: last_estimate.as_f64(),
                });
            }
        }

        let k = lz.alpha.len();
        let full_rows: Vec<usize> = (0..k).collect();
        let (values, q) = tridiag_eigen_rows(&lz.alpha, &lz.beta[..k - 1], &full_rows)?;
        // y = Q·exp(-iτΛ)·Qᵀ·e₁
        let phases: Vec<C<T>> = values
            .iter()
            .enumerate()
            .map(|(l, &lam)| cis(-tau * sign * lam) * q[l])
            .collect();
        let y: Vec<C<T>> = (0..k)
            .map(|i| {
                phases
                    .iter()
                    .enumerate()
                    .fold(C::zero(), |acc, (l, p)| acc + *p * q[i * k + l])
            })
            .collect();
        for wi in w.iter_mut() {
            *wi = C::zero();
        }
        for (v, yj) in lz.basis.iter().zip(&y) {
            let c = *yj * beta;
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi = *wi + *vi * c;
            }
        }
        remaining = remaining - tau;
        if remaining <= total * T::epsilon() {
            remaining = T::zero();
        }
        substeps += 1;
        if halvings == 0 {
            tau = tau * T::lit(2.0);
        }
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::sparse::OperatorBuilder;

    fn c(re: f64, im: f64) -> C<f64> {
        C::new(re, im)
    }

    fn sigma_z(omega: f64) -> SparseOperator<f64> {
        let mut b = OperatorBuilder::new(2);
        b.push(0, 0, c(-omega / 2.0, 0.0));
        b.push(1, 1, c(omega / 2.0, 0.0));
        b.build(true).unwrap()
    }

    #[test]
    fn zero_generator_is_identity() {
        let psi = StateVector::from_amplitudes(2, 1, vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let out = krylov_expv(&SparseOperator::zero(2), &psi, 1.7, &KrylovConfig::default()).unwrap();
        assert_eq!(out, psi);
    }

    #[test]
    fn one_qubit_precession() {
        let omega = 2.0 * std::f64::consts::PI * 5e9;
        let h = sigma_z(omega);
        let s = 0.5f64.sqrt();
        let psi = StateVector::from_amplitudes(2, 1, vec![c(s, 0.0), c(s, 0.0)]).unwrap();
        let out = krylov_expv(&h, &psi, std::f64::consts::PI / omega, &KrylovConfig::default()).unwrap();
        let want = StateVector::from_amplitudes(2, 1, vec![c(0.0, s), c(0.0, -s)]).unwrap();
        assert!(out.phase_aligned_distance(&want) < 1e-12);
    }

    #[test]
    fn non_hermitian_generator_rejected() {
        let mut b = OperatorBuilder::new(2);
        b.push(0, 1, c(1.0, 0.0));
        let h = b.build(false).unwrap();
        let psi = StateVector::ground(2, 1).unwrap();
        assert!(krylov_expv(&h, &psi, 1.0, &KrylovConfig::default()).is_err());
    }

    #[test]
    fn substep_budget_exhaustion_reports_estimate() {
        // large ‖H·dt‖ with a tiny subspace needs far more than two substeps
        let n = 64;
        let mut b = OperatorBuilder::new(n);
        for i in 0..n - 1 {
            b.push(i, i + 1, c(1.0, 0.0));
            b.push(i + 1, i, c(1.0, 0.0));
        }
        let h = b.build(true).unwrap();
        let mut amps = vec![c(0.0, 0.0); n];
        amps[0] = c(1.0, 0.0);
        let psi = StateVector::from_amplitudes(2, 6, amps).unwrap();
        let cfg = KrylovConfig {
            max_subspace_dim: 4,
            tolerance: 1e-12,
            max_substeps: 2,
        };
        match krylov_expv(&h, &psi, 50.0, &cfg) {
            Err(Error::KrylovNonConvergence { substeps, estimate }) => {
                assert_eq!(substeps, 2);
                assert!(estimate.is_finite());
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = KrylovConfig::<f64>::default();
        cfg.max_subspace_dim = 1;
        assert!(cfg.validate().is_err());
        let mut cfg = KrylovConfig::<f64>::default();
        cfg.tolerance = 0.0;
        assert!(cfg.validate().is_err());
        assert_eq!(KrylovConfig::<f64>::default().tolerance, 1e-12);
    }

    #[test]
    fn single_precision_runs() {
        let h = {
            let mut b = OperatorBuilder::<f32>::new(2);
            b.push(0, 1, C::new(1.0, 0.0));
            b.push(1, 0, C::new(1.0, 0.0));
            b.build(true).unwrap()
        };
        let psi = StateVector::<f32>::ground(2, 1).unwrap();
        let out = krylov_expv(&h, &psi, std::f32::consts::FRAC_PI_2, &KrylovConfig::default()).unwrap();
        assert!((out.amplitudes()[1].norm() - 1.0).abs() < 1e-5);
    }
}
