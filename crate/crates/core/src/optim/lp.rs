// Copyright 2026 The robust-ghz Contributors
// SPDX-License-Identifier: Apache-2.0

//! Dense tableau simplex for small linear programs with a feasible origin,
//! and the max-min ascent step built on it.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<T> {
    pub x: Vec<T>,
    pub objective: T,
}

/// Maximizes `c·x` subject to `A x ≤ b`, `x ≥ 0`, with `b ≥ 0`.
///
/// Dantzig pricing, switching to Bland's rule after a run of degenerate
/// pivots so cycling cannot occur.
pub fn maximize<T: Real>(c: &[T], a: &[Vec<T>], b: &[T]) -> Result<LpSolution<T>> {
    let n = c.len();
    let m = a.len();
    if b.len() != m {
        return Err(Error::DimensionMismatch { expected: m, actual: b.len() });
    }
    if let Some(row) = a.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, actual: row.len() });
    }
    if b.iter().any(|&v| !(v >= T::zero())) {
        return Err(Error::LinearProgram("right-hand side must be non-negative".into()));
    }
    if c.iter().chain(a.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::LinearProgram("non-finite coefficient".into()));
    }

    // rows 0..m: [A | I | b], row m: [-c | 0 | 0]
    let width = n + m + 1;
    let mut t = vec![T::zero(); (m + 1) * width];
    for i in 0..m {
        t[i * width..i * width + n].copy_from_slice(&a[i]);
        t[i * width + n + i] = T::one();
        t[i * width + n + m] = b[i];
    }
    for j in 0..n {
        t[m * width + j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    let scale = c.iter().chain(a.iter().flatten()).fold(T::one(), |s, v| s.max(v.abs()));
    let eps = T::epsilon() * T::lit(1e3) * scale;
    let max_pivots = 50 * (n + m) + 100;
    let mut degenerate_run = 0;
    for _ in 0..max_pivots {
        let bland = degenerate_run > n + m;
        let obj = &t[m * width..m * width + n + m];
        let entering = if bland {
            obj.iter().position(|&v| v < -eps)
        } else {
            obj.iter()
                .enumerate()
                .filter(|(_, &v)| v < -eps)
                .min_by(|x, y| x.1.partial_cmp(y.1).expect("finite tableau"))
                .map(|(j, _)| j)
        };
        let Some(col) = entering else {
            let mut x = vec![T::zero(); n];
            for (i, &bv) in basis.iter().enumerate() {
                if bv < n {
                    x[bv] = t[i * width + n + m];
                }
            }
            let objective = c.iter().zip(&x).map(|(&ci, &xi)| ci * xi).sum();
            return Ok(LpSolution { x, objective });
        };

        let mut leave: Option<(usize, T)> = None;
        for i in 0..m {
            let piv = t[i * width + col];
            if piv > eps {
                let ratio = t[i * width + n + m] / piv;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) if ratio < best || (ratio == best && basis[i] < basis[r]) => Some((i, ratio)),
                    keep => keep,
                };
            }
        }
        let Some((row, ratio)) = leave else {
            return Err(Error::LinearProgram("objective is unbounded".into()));
        };
        degenerate_run = if ratio <= eps { degenerate_run + 1 } else { 0 };

        let p = t[row * width + col];
        for v in &mut t[row * width..(row + 1) * width] {
            *v = *v / p;
        }
        let pivot_row: Vec<T> = t[row * width..(row + 1) * width].to_vec();
        for i in 0..=m {
            if i == row {
                continue;
            }
            let f = t[i * width + col];
            if f != T::zero() {
                for (v, &pv) in t[i * width..(i + 1) * width].iter_mut().zip(&pivot_row) {
                    *v = *v - f * pv;
                }
            }
        }
        basis[row] = col;
    }
    Err(Error::LinearProgram(format!("no optimum after {max_pivots} pivots")))
}

/// Step `δ` with `lower ≤ δ ≤ upper` maximizing `t = min_i g_i·δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScpStep<T> {
    pub delta: Vec<T>,
    /// Predicted minimum first-order increment.
    pub t: T,
}

/// Solves `max t s.t. g_i·δ ≥ t, lower ≤ δ ≤ upper` (requires `lower ≤ 0 ≤ upper`).
///
/// Substituting `δ = lower + w∘y` with `y ∈ [0, 1]` and `t = τ - B`, where
/// `B` bounds `-g_i·lower`, makes the origin feasible.
pub fn scp_minimax_step<T: Real>(gradients: &[Vec<T>], lower: &[T], upper: &[T]) -> Result<ScpStep<T>> {
    let n = lower.len();
    if upper.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: upper.len() });
    }
    if gradients.is_empty() {
        return Err(Error::InvalidParameter("max-min step needs at least one gradient".into()));
    }
    if let Some(g) = gradients.iter().find(|g| g.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, actual: g.len() });
    }
    if lower.iter().zip(upper).any(|(&l, &u)| !(l <= T::zero() && T::zero() <= u)) {
        return Err(Error::InvalidParameter("step bounds must bracket zero".into()));
    }
    let width: Vec<T> = lower.iter().zip(upper).map(|(&l, &u)| u - l).collect();
    let at_lower: Vec<T> = gradients
        .iter()
        .map(|g| g.iter().zip(lower).map(|(&gk, &lk)| gk * lk).sum())
        .collect();
    let offset = at_lower.iter().fold(T::zero(), |b, &v| b.max(-v));

    // variables [τ, y_0 … y_{n-1}]
    let mut c = vec![T::zero(); n + 1];
    c[0] = T::one();
    let mut a = Vec::with_capacity(gradients.len() + n);
    let mut b = Vec::with_capacity(gradients.len() + n);
    for (g, &gl) in gradients.iter().zip(&at_lower) {
        let mut row = Vec::with_capacity(n + 1);
        row.push(T::one());
        row.extend(g.iter().zip(&width).map(|(&gk, &wk)| -gk * wk));
        a.push(row);
        b.push((offset + gl).max(T::zero()));
    }
    for k in 0..n {
        let mut row = vec![T::zero(); n + 1];
        row[k + 1] = T::one();
        a.push(row);
        b.push(T::one());
    }
    let sol = maximize(&c, &a, &b)?;
    let delta: Vec<T> = (0..n)
        .map(|k| (lower[k] + width[k] * sol.x[k + 1]).max(lower[k]).min(upper[k]))
        .collect();
    let t = gradients
        .iter()
        .map(|g| g.iter().zip(&delta).map(|(&gk, &dk)| gk * dk).sum::<T>())
        .fold(T::infinity(), T::min);
    Ok(ScpStep { delta, t })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_lp() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36
        let s = maximize(
            &[3.0, 5.0],
            &[vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]],
            &[4.0, 12.0, 18.0],
        )
        .unwrap();
        assert!((s.objective - 36.0f64).abs() < 1e-12);
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_and_bad_input() {
        assert!(maximize(&[1.0f64], &[vec![-1.0]], &[1.0]).is_err());
        assert!(maximize(&[1.0f64], &[vec![1.0]], &[-1.0]).is_err());
    }

    #[test]
    fn single_gradient_closed_form() {
        let g = vec![0.3, -1.2, 2.0, -0.01];
        let u = vec![0.5, 0.25, 1.0, 2.0];
        let lo: Vec<f64> = u.iter().map(|v| -v).collect();
        let s = scp_minimax_step(std::slice::from_ref(&g), &lo, &u).unwrap();
        let want: f64 = g.iter().zip(&u).map(|(a, b)| a.abs() * b).sum();
        assert!((s.t - want).abs() < 1e-12);
        for k in 0..4 {
            assert!((s.delta[k] - u[k] * g[k].signum()).abs() < 1e-12);
        }
    }

    #[test]
    fn opposing_gradients_give_zero() {
        let g = vec![1.0, -2.0, 0.5];
        let ng: Vec<f64> = g.iter().map(|v| -v).collect();
        let u = vec![1.0; 3];
        let s = scp_minimax_step(&[g, ng], &[-1.0; 3], &u).unwrap();
        assert!(s.t.abs() < 1e-12);
    }

    #[test]
    fn asymmetric_bounds() {
        // only positive moves on the first coordinate
        let s = scp_minimax_step(&[vec![-1.0, 1.0]], &[0.0, -1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(s.delta, vec![0.0, 1.0]);
        assert!((s.t - 1.0f64).abs() < 1e-15);
    }
}
