// Copyright 2026 The robust-ghz Contributors
// SPDX-License-Identifier: Apache-2.0

//! Symmetric tridiagonal eigensolver (implicit QL with Wilkinson-type shifts).

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Eigen-decomposition `T = Q·diag(λ)·Qᵀ` of a real symmetric tridiagonal matrix.
#[derive(Debug, Clone)]
pub(crate) struct TridiagEigen<T> {
    pub values: Vec<T>,
    /// Row-major `n × n`; column `k` is the eigenvector of `values[k]`.
    pub vectors: Vec<T>,
    pub n: usize,
}

impl<T: Real> TridiagEigen<T> {
    #[inline]
    pub fn vector_component(&self, row: usize, k: usize) -> T {
        self.vectors[row * self.n + k]
    }
}

/// `diag` has length `n`, `off` has length `n - 1` (sub/super-diagonal).
/// Eigenvalues come back in ascending order.
pub(crate) fn tridiag_eigen<T: Real>(diag: &[T], off: &[T]) -> Result<TridiagEigen<T>> {
    let rows: Vec<usize> = (0..diag.len()).collect();
    let (values, vectors) = tridiag_eigen_rows(diag, off, &rows)?;
    Ok(TridiagEigen {
        values,
        vectors,
        n: diag.len(),
    })
}

/// Eigenvalues (ascending) plus only the listed rows of the eigenvector
/// matrix, row-major `rows.len() × n`. Costs `O(n²)` per tracked row set
/// instead of `O(n³)` for the full basis.
pub(crate) fn tridiag_eigen_rows<T: Real>(diag: &[T], off: &[T], rows: &[usize]) -> Result<(Vec<T>, Vec<T>)> {
    let n = diag.len();
    let nr = rows.len();
    assert!(n == 0 || off.len() + 1 == n, "off-diagonal must have n-1 entries");
    let mut d = diag.to_vec();
    let mut e = vec![T::zero(); n];
    e[..n.saturating_sub(1)].copy_from_slice(off);
    let mut z = vec![T::zero(); nr * n];
    for (t, &r) in rows.iter().enumerate() {
        z[t * n + r] = T::one();
    }
    let two = T::lit(2.0);
    let eps = T::epsilon();

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::EigenNonConvergence);
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            let signed_r = if g >= T::zero() { r.abs() } else { -r.abs() };
            g = d[m] - d[l] + e[l] / (g + signed_r);
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] = d[i + 1] - p;
                    e[m] = T::zero();
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..nr {
                    let zf = z[k * n + i + 1];
                    z[k * n + i + 1] = s * z[k * n + i] + c * zf;
                    z[k * n + i] = c * z[k * n + i] - s * zf;
                }
            }
            if deflated {
                continue;
            }
            d[l] = d[l] - p;
            e[l] = g;
            e[m] = T::zero();
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&k| d[k]).collect();
    let mut vectors = vec![T::zero(); nr * n];
    for (new_k, &old_k) in order.iter().enumerate() {
        for t in 0..nr {
            vectors[t * n + new_k] = z[t * n + old_k];
        }
    }
    Ok((values, vectors))
}
