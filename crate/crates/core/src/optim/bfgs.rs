// Copyright 2026 The robust-ghz Contributors
// SPDX-License-Identifier: Apache-2.0

//! Projected BFGS for box-constrained minimization with exact gradients.

use crate::error::Result;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsConfig<T> {
    pub max_iters: usize,
    /// Stop when the projected gradient's max-norm falls below this.
    pub grad_tolerance: T,
    /// Stop as soon as the objective is at or below this value.
    pub target_value: Option<T>,
    /// Armijo sufficient-decrease constant.
    pub armijo: T,
    pub max_backtracks: usize,
    /// Max-norm of a steepest-descent step taken before curvature is known.
    pub initial_step: T,
}

impl<T: Real> Default for BfgsConfig<T> {
    fn default() -> Self {
        Self {
            max_iters: 500,
            grad_tolerance: T::lit(1e-9),
            target_value: None,
            armijo: T::lit(1e-4),
            max_backtracks: 40,
            initial_step: T::lit(0.05),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BfgsStop {
    TargetReached,
    Stationary,
    MaxIterations,
    LineSearchFailed,
}

/// Objective value, gradient and whatever the caller wants carried along.
pub struct Evaluation<T, A> {
    pub value: T,
    pub gradient: Vec<T>,
    pub aux: A,
}

/// Per-iteration record handed to the observer.
pub struct Step<'a, T, A> {
    pub iter: usize,
    pub x: &'a [T],
    pub eval: &'a Evaluation<T, A>,
    pub step_norm: T,
    pub step_length: T,
}

pub struct BfgsOutcome<T, A> {
    pub x: Vec<T>,
    pub eval: Evaluation<T, A>,
    pub iterations: usize,
    pub stop: BfgsStop,
}

fn project<T: Real>(x: &mut [T], lo: &[T], hi: &[T]) {
    for ((v, &l), &h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.max(l).min(h);
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Max-norm of `P(x - g) - x`.
fn projected_gradient_norm<T: Real>(x: &[T], g: &[T], lo: &[T], hi: &[T]) -> T {
    x.iter()
        .zip(g)
        .zip(lo.iter().zip(hi))
        .map(|((&xk, &gk), (&l, &h))| ((xk - gk).max(l).min(h) - xk).abs())
        .fold(T::zero(), T::max)
}

/// Minimizes `f` over `lo ≤ x ≤ hi` from `x0` (projected first).
///
/// Coordinates pinned at a bound with the gradient pushing outward are held
/// fixed for the iteration; the inverse-Hessian estimate acts on the rest.
pub fn minimize_box<T, A, F, O>(
    x0: &[T],
    lo: &[T],
    hi: &[T],
    cfg: &BfgsConfig<T>,
    mut f: F,
    mut observe: O,
) -> Result<BfgsOutcome<T, A>>
where
    T: Real,
    F: FnMut(&[T]) -> Result<Evaluation<T, A>>,
    O: FnMut(&Step<'_, T, A>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x, lo, hi);
    let mut cur = f(&x)?;
    let mut h = identity::<T>(n);
    let mut fresh = true;
    let tiny = T::epsilon();

    for iter in 0..cfg.max_iters {
        if cfg.target_value.is_some_and(|t| cur.value <= t) {
            return Ok(BfgsOutcome { x, eval: cur, iterations: iter, stop: BfgsStop::TargetReached });
        }
        if projected_gradient_norm(&x, &cur.gradient, lo, hi) <= cfg.grad_tolerance {
            return Ok(BfgsOutcome { x, eval: cur, iterations: iter, stop: BfgsStop::Stationary });
        }
        let g = &cur.gradient;
        let free: Vec<bool> = (0..n)
            .map(|k| !((x[k] <= lo[k] && g[k] > T::zero()) || (x[k] >= hi[k] && g[k] < T::zero())))
            .collect();

        let mut accepted = None;
        for attempt in 0..2 {
            let mut d = vec![T::zero(); n];
            for i in (0..n).filter(|&i| free[i]) {
                d[i] = -(0..n).filter(|&j| free[j]).map(|j| h[i * n + j] * g[j]).sum::<T>();
            }
            if dot(&d, g) >= T::zero() {
                h = identity(n);
                fresh = true;
                for i in 0..n {
                    d[i] = if free[i] { -g[i] } else { T::zero() };
                }
            }
            if fresh {
                let big = d.iter().fold(T::zero(), |m, v| m.max(v.abs()));
                if big > cfg.initial_step {
                    let s = cfg.initial_step / big;
                    d.iter_mut().for_each(|v| *v = *v * s);
                }
            }
            let mut alpha = T::one();
            for _ in 0..cfg.max_backtracks {
                let mut trial: Vec<T> = x.iter().zip(&d).map(|(&xk, &dk)| xk + alpha * dk).collect();
                project(&mut trial, lo, hi);
                let s: Vec<T> = trial.iter().zip(&x).map(|(&a, &b)| a - b).collect();
                let decrease = dot(g, &s);
                if decrease >= T::zero() {
                    alpha = alpha / T::lit(2.0);
                    continue;
                }
                let next = f(&trial)?;
                if next.value <= cur.value + cfg.armijo * decrease {
                    accepted = Some((trial, s, next, alpha));
                    break;
                }
                alpha = alpha / T::lit(2.0);
            }
            if accepted.is_some() || fresh || attempt == 1 {
                break;
            }
            h = identity(n);
            fresh = true;
        }
        let Some((trial, s, next, alpha)) = accepted else {
            return Ok(BfgsOutcome { x, eval: cur, iterations: iter, stop: BfgsStop::LineSearchFailed });
        };

        let y: Vec<T> = next.gradient.iter().zip(&cur.gradient).map(|(&a, &b)| a - b).collect();
        let sy = dot(&s, &y);
        let yy = dot(&y, &y);
        if sy > tiny * dot(&s, &s).sqrt() * yy.sqrt() && sy > T::zero() {
            if fresh {
                let gamma = sy / yy;
                h.iter_mut().for_each(|v| *v = *v * gamma);
                fresh = false;
            }
            bfgs_update(&mut h, &s, &y, sy);
        }
        let step_norm = dot(&s, &s).sqrt();
        x = trial;
        cur = next;
        observe(&Step { iter: iter + 1, x: &x, eval: &cur, step_norm, step_length: alpha });
    }
    let stop = if cfg.target_value.is_some_and(|t| cur.value <= t) {
        BfgsStop::TargetReached
    } else {
        BfgsStop::MaxIterations
    };
    Ok(BfgsOutcome { x, eval: cur, iterations: cfg.max_iters, stop })
}

fn identity<T: Real>(n: usize) -> Vec<T> {
    let mut h = vec![T::zero(); n * n];
    for i in 0..n {
        h[i * n + i] = T::one();
    }
    h
}

/// `H ← (I - ρsyᵀ) H (I - ρysᵀ) + ρssᵀ`, `ρ = 1/(s·y)`.
fn bfgs_update<T: Real>(h: &mut [T], s: &[T], y: &[T], sy: T) {
    let n = s.len();
    let rho = T::one() / sy;
    let hy: Vec<T> = (0..n).map(|i| (0..n).map(|j| h[i * n + j] * y[j]).sum()).collect();
    let yhy = dot(y, &hy);
    let coef = (T::one() + rho * yhy) * rho;
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] = h[i * n + j] - rho * (hy[i] * s[j] + s[i] * hy[j]) + coef * s[i] * s[j];
        }
    }
}
