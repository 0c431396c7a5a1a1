// Copyright 2026 The robust-ghz Contributors
// SPDX-License-Identifier: Apache-2.0

use std::sync::Arc;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{Real, C};

use super::state::{hilbert_dim, StateVector};

/// Compressed-sparse-row structure shared between operators with the same
/// nonzero pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsePattern {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl SparsePattern {
    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    #[inline]
    pub fn row(&self, r: usize) -> std::ops::Range<usize> {
        self.row_ptr[r]..self.row_ptr[r + 1]
    }

    #[inline]
    pub fn col(&self, k: usize) -> usize {
        self.col_idx[k]
    }

    fn find(&self, row: usize, col: usize) -> Option<usize> {
        let range = self.row(row);
        self.col_idx[range.clone()]
            .binary_search(&col)
            .ok()
            .map(|k| range.start + k)
    }

    /// `y = A·x` where `A` has this pattern and the given values.
    #[inline]
    pub(crate) fn mul_into<T: Real>(&self, values: &[C<T>], x: &[C<T>], y: &mut [C<T>]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = C::zero();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc = acc + values[k] * x[self.col_idx[k]];
            }
            *yr = acc;
        }
    }
}

/// Sparse complex matrix in CSR layout. Never stores explicit zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator<T> {
    pattern: Arc<SparsePattern>,
    values: Vec<C<T>>,
    hermitian: bool,
}

/// Anything that can act as `y = A·x` on a flat amplitude slice.
pub trait LinearOperator<T: Real>: Sync {
    fn dim(&self) -> usize;
    fn apply_into(&self, x: &[C<T>], y: &mut [C<T>]);
}

impl<T: Real> SparseOperator<T> {
    pub fn zero(dim: usize) -> Self {
        Self {
            pattern: Arc::new(SparsePattern {
                dim,
                row_ptr: vec![0; dim + 1],
                col_idx: Vec::new(),
            }),
            values: Vec::new(),
            hermitian: true,
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut b = OperatorBuilder::new(dim);
        for i in 0..dim {
            b.push(i, i, C::new(T::one(), T::zero()));
        }
        b.build(true).expect("identity is hermitian")
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.pattern.dim
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn pattern(&self) -> &Arc<SparsePattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[C<T>] {
        &self.values
    }

    /// Stored entry at `(row, col)`, zero when absent.
    pub fn get(&self, row: usize, col: usize) -> C<T> {
        self.pattern
            .find(row, col)
            .map(|k| self.values[k])
            .unwrap_or_else(C::zero)
    }

    /// Iterator over stored `(row, col, value)` triplets in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C<T>)> + '_ {
        (0..self.dim()).flat_map(move |r| self.pattern.row(r).map(move |k| (r, self.pattern.col(k), self.values[k])))
    }

    pub fn to_dense(&self) -> Vec<Vec<C<T>>> {
        let mut m = vec![vec![C::zero(); self.dim()]; self.dim()];
        for (r, c, v) in self.triplets() {
            m[r][c] = v;
        }
        m
    }

    /// `A·x` written into `y`; `x` and `y` must have length `dim`.
    #[inline]
    pub fn mul_into(&self, x: &[C<T>], y: &mut [C<T>]) {
        self.pattern.mul_into(&self.values, x, y);
    }

    /// `A·x` into a fresh vector.
    pub fn mul_vec(&self, x: &[C<T>]) -> Vec<C<T>> {
        let mut y = vec![C::zero(); self.dim()];
        self.mul_into(x, &mut y);
        y
    }

    /// `self + scale·other` with zero entries dropped.
    pub fn add_scaled(&self, other: &Self, scale: C<T>) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        let mut b = OperatorBuilder::new(self.dim());
        b.extend(self.triplets());
        b.extend(other.triplets().map(|(r, c, v)| (r, c, v * scale)));
        b.build(self.hermitian && other.hermitian && scale.im == T::zero())
    }
}

impl<T: Real> LinearOperator<T> for SparseOperator<T> {
    fn dim(&self) -> usize {
        self.pattern.dim
    }

    fn apply_into(&self, x: &[C<T>], y: &mut [C<T>]) {
        self.mul_into(x, y)
    }
}

/// Exact sparse product `A·ψ`.
pub fn spmv<T: Real>(a: &SparseOperator<T>, psi: &StateVector<T>) -> Result<StateVector<T>> {
    if a.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: psi.dim(),
        });
    }
    Ok(psi.with_amplitudes(a.mul_vec(psi.amplitudes())))
}

/// Dense single-site operator (`levels × levels`, row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct LocalOp<T> {
    levels: usize,
    entries: Vec<C<T>>,
}

impl<T: Real> LocalOp<T> {
    pub fn zeros(levels: usize) -> Self {
        Self {
            levels,
            entries: vec![C::zero(); levels * levels],
        }
    }

    pub fn from_rows(rows: &[&[C<T>]]) -> Self {
        let levels = rows.len();
        let mut op = Self::zeros(levels);
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), levels, "local operator must be square");
            op.entries[r * levels..(r + 1) * levels].copy_from_slice(row);
        }
        op
    }

    /// `|row⟩⟨col|` scaled by `value`.
    pub fn set(&mut self, row: usize, col: usize, value: C<T>) {
        self.entries[row * self.levels + col] = value;
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C<T> {
        self.entries[row * self.levels + col]
    }

    #[inline]
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.levels);
        for r in 0..self.levels {
            for c in 0..self.levels {
                out.set(c, r, self.get(r, c).conj());
            }
        }
        out
    }

    pub fn scaled(&self, s: C<T>) -> Self {
        Self {
            levels: self.levels,
            entries: self.entries.iter().map(|e| *e * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            levels: self.levels,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| *a + *b).collect(),
        }
    }
}

/// Triplet accumulator that merges duplicates and drops zeros on build.
#[derive(Debug, Clone)]
pub struct OperatorBuilder<T> {
    dim: usize,
    triplets: Vec<(usize, usize, C<T>)>,
}

impl<T: Real> OperatorBuilder<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            triplets: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn push(&mut self, row: usize, col: usize, value: C<T>) {
        self.triplets.push((row, col, value));
    }

    pub fn extend(&mut self, it: impl IntoIterator<Item = (usize, usize, C<T>)>) {
        self.triplets.extend(it);
    }

    /// Adds `coeff · ⊗_k op_k` acting on the listed sites of an
    /// `levels^sites` tensor-product space (identity elsewhere).
    pub fn add_product(&mut self, levels: usize, sites: usize, coeff: C<T>, factors: &[(usize, &LocalOp<T>)]) -> Result<()> {
        let dim = hilbert_dim(levels, sites)?;
        if dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: dim,
            });
        }
        for &(site, op) in factors {
            if site >= sites || op.levels() != levels {
                return Err(Error::InvalidParameter(format!(
                    "factor on site {site} with {} levels does not fit {sites} sites of {levels} levels",
                    op.levels()
                )));
            }
        }
        let stride = |site: usize| levels.pow((sites - 1 - site) as u32);
        let mut current: Vec<(usize, C<T>)> = Vec::new();
        let mut next = Vec::new();
        for col in 0..dim {
            current.clear();
            current.push((col, coeff));
            for &(site, op) in factors {
                let s = stride(site);
                next.clear();
                for &(idx, amp) in &current {
                    let d = (idx / s) % levels;
                    for r in 0..levels {
                        let e = op.get(r, d);
                        if !e.is_zero() {
                            next.push((idx - d * s + r * s, amp * e));
                        }
                    }
                }
                std::mem::swap(&mut current, &mut next);
            }
            for &(row, v) in &current {
                self.triplets.push((row, col, v));
            }
        }
        Ok(())
    }

    /// Finalizes the CSR layout. With `hermitian`, verifies `A = A†` exactly.
    pub fn build(mut self, hermitian: bool) -> Result<SparseOperator<T>> {
        for &(r, c, _) in &self.triplets {
            if r >= self.dim || c >= self.dim {
                return Err(Error::IndexOutOfRange { row: r, col: c, dim: self.dim });
            }
        }
        self.triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; self.dim + 1];
        let mut col_idx = Vec::with_capacity(self.triplets.len());
        let mut values: Vec<C<T>> = Vec::with_capacity(self.triplets.len());
        let mut rows = Vec::with_capacity(self.triplets.len());
        let mut it = self.triplets.into_iter().peekable();
        while let Some((r, c, mut v)) = it.next() {
            while let Some(&(r2, c2, v2)) = it.peek() {
                if (r2, c2) != (r, c) {
                    break;
                }
                v = v + v2;
                it.next();
            }
            if !v.is_zero() {
                rows.push(r);
                col_idx.push(c);
                values.push(v);
            }
        }
        for &r in &rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..self.dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        let op = SparseOperator {
            pattern: Arc::new(SparsePattern {
                dim: self.dim,
                row_ptr,
                col_idx,
            }),
            values,
            hermitian,
        };
        if hermitian {
            for (r, c, v) in op.triplets() {
                match op.pattern.find(c, r) {
                    Some(k) if op.values[k] == v.conj() => {}
                    _ => return Err(Error::NotHermitian { row: r, col: c }),
                }
            }
        }
        Ok(op)
    }
}

/// Several operators merged onto one union pattern, so that any linear
/// combination `Σ_k a_k·A_k` can be assembled in `O(nnz)` without
/// re-sorting.
#[derive(Debug, Clone)]
pub(crate) struct SharedPattern<T> {
    pattern: Arc<SparsePattern>,
    terms: Vec<Vec<C<T>>>,
}

impl<T: Real> SharedPattern<T> {
    pub(crate) fn new(ops: &[&SparseOperator<T>]) -> Result<Self> {
        let dim = ops.first().map(|o| o.dim()).unwrap_or(0);
        let mut union = OperatorBuilder::<T>::new(dim);
        for op in ops {
            if op.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: op.dim(),
                });
            }
            // unit placeholder so that cancelling values never drop a slot
            union.extend(op.triplets().map(|(r, c, _)| (r, c, C::new(T::one(), T::zero()))));
        }
        let pattern = union.build(false)?.pattern;
        let terms = ops
            .iter()
            .map(|op| {
                let mut vals = vec![C::zero(); pattern.nnz()];
                for (r, c, v) in op.triplets() {
                    let k = pattern.find(r, c).expect("union contains every entry");
                    vals[k] = v;
                }
                vals
            })
            .collect();
        Ok(Self { pattern, terms })
    }

    /// `Σ_k coeffs[k]·A_k` over the shared pattern.
    pub(crate) fn combine(&self, coeffs: &[T]) -> Combined<T> {
        debug_assert_eq!(coeffs.len(), self.terms.len());
        let mut values = vec![C::zero(); self.pattern.nnz()];
        for (term, &a) in self.terms.iter().zip(coeffs) {
            if a.is_zero() {
                continue;
            }
            for (v, t) in values.iter_mut().zip(term) {
                *v = *v + *t * a;
            }
        }
        Combined {
            pattern: Arc::clone(&self.pattern),
            values,
        }
    }
}

/// A linear combination assembled on a shared pattern. May hold zeros.
#[derive(Debug, Clone)]
pub(crate) struct Combined<T> {
    pattern: Arc<SparsePattern>,
    values: Vec<C<T>>,
}

impl<T: Real> Combined<T> {
    /// Gershgorin interval `[min_r(d_r - ρ_r), max_r(d_r + ρ_r)]` enclosing
    /// the spectrum, where `d_r` is the real diagonal and `ρ_r` the
    /// off-diagonal absolute row sum.
    pub(crate) fn spectral_bounds(&self) -> (T, T) {
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for r in 0..self.pattern.dim {
            let mut d = T::zero();
            let mut rho = T::zero();
            for k in self.pattern.row(r) {
                if self.pattern.col(k) == r {
                    d = self.values[k].re;
                } else {
                    rho = rho + self.values[k].norm();
                }
            }
            lo = lo.min(d - rho);
            hi = hi.max(d + rho);
        }
        if self.pattern.dim == 0 {
            (T::zero(), T::zero())
        } else {
            (lo, hi)
        }
    }
}

impl<T: Real> LinearOperator<T> for Combined<T> {
    fn dim(&self) -> usize {
        self.pattern.dim
    }

    fn apply_into(&self, x: &[C<T>], y: &mut [C<T>]) {
        self.pattern.mul_into(&self.values, x, y)
    }
}
