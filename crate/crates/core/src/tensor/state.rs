// Copyright 2026 The robust-ghz Contributors
// SPDX-License-Identifier: Apache-2.0

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Real, C};

/// Pure state of `site_count` sites with `site_levels` levels each.
///
/// Basis index `b = Σ_j k_j · L^{N-1-j}`: site 0 is the most significant digit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector<T> {
    amplitudes: Vec<C<T>>,
    site_levels: usize,
    site_count: usize,
}

pub(crate) fn hilbert_dim(levels: usize, sites: usize) -> Result<usize> {
    if levels == 0 || sites == 0 {
        return Err(Error::InvalidParameter(format!(
            "levels ({levels}) and sites ({sites}) must be positive"
        )));
    }
    u32::try_from(sites)
        .ok()
        .and_then(|s| levels.checked_pow(s))
        .ok_or_else(|| Error::InvalidParameter(format!("{levels}^{sites} overflows")))
}

impl<T: Real> StateVector<T> {
    pub fn from_amplitudes(site_levels: usize, site_count: usize, amplitudes: Vec<C<T>>) -> Result<Self> {
        let dim = hilbert_dim(site_levels, site_count)?;
        if amplitudes.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: amplitudes.len(),
            });
        }
        Ok(Self {
            amplitudes,
            site_levels,
            site_count,
        })
    }

    pub fn zeros(site_levels: usize, site_count: usize) -> Result<Self> {
        let dim = hilbert_dim(site_levels, site_count)?;
        Ok(Self {
            amplitudes: vec![C::zero(); dim],
            site_levels,
            site_count,
        })
    }

    /// Computational basis state from per-site levels.
    pub fn basis(site_levels: usize, digits: &[usize]) -> Result<Self> {
        let mut psi = Self::zeros(site_levels, digits.len())?;
        let idx = psi.index_of(digits)?;
        psi.amplitudes[idx] = C::one();
        Ok(psi)
    }

    /// `|0…0⟩`.
    pub fn ground(site_levels: usize, site_count: usize) -> Result<Self> {
        Self::basis(site_levels, &vec![0; site_count])
    }

    /// `(|0…0⟩ + |1…1⟩)/√2`.
    pub fn ghz(site_levels: usize, site_count: usize) -> Result<Self> {
        if site_levels < 2 {
            return Err(Error::InvalidParameter("GHZ state needs at least two levels".into()));
        }
        let mut psi = Self::zeros(site_levels, site_count)?;
        let h = T::FRAC_1_SQRT_2();
        psi.amplitudes[0] = C::new(h, T::zero());
        let ones = psi.index_of(&vec![1; site_count])?;
        psi.amplitudes[ones] = C::new(h, T::zero());
        Ok(psi)
    }

    /// Product state `⊗_j |φ⟩` with the same single-site state on every site.
    pub fn product(site_count: usize, local: &[C<T>]) -> Result<Self> {
        let levels = local.len();
        let mut psi = Self::zeros(levels, site_count)?;
        for (b, amp) in psi.amplitudes.iter_mut().enumerate() {
            let mut rest = b;
            let mut a = C::one();
            for _ in 0..site_count {
                a = a * local[rest % levels];
                rest /= levels;
            }
            *amp = a;
        }
        Ok(psi)
    }

    #[inline]
    pub fn amplitudes(&self) -> &[C<T>] {
        &self.amplitudes
    }

    #[inline]
    pub fn amplitudes_mut(&mut self) -> &mut [C<T>] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C<T>> {
        self.amplitudes
    }

    #[inline]
    pub fn site_levels(&self) -> usize {
        self.site_levels
    }

    #[inline]
    pub fn site_count(&self) -> usize {
        self.site_count
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// Same shape, new amplitudes.
    pub(crate) fn with_amplitudes(&self, amplitudes: Vec<C<T>>) -> Self {
        debug_assert_eq!(amplitudes.len(), self.amplitudes.len());
        Self {
            amplitudes,
            site_levels: self.site_levels,
            site_count: self.site_count,
        }
    }

    pub fn index_of(&self, digits: &[usize]) -> Result<usize> {
        if digits.len() != self.site_count {
            return Err(Error::DimensionMismatch {
                expected: self.site_count,
                actual: digits.len(),
            });
        }
        let mut idx = 0;
        for &d in digits {
            if d >= self.site_levels {
                return Err(Error::InvalidParameter(format!(
                    "level {d} out of range for {}-level site",
                    self.site_levels
                )));
            }
            idx = idx * self.site_levels + d;
        }
        Ok(idx)
    }

    /// Level of `site` in basis state `index`.
    #[inline]
    pub fn digit(&self, index: usize, site: usize) -> usize {
        let shift = self.site_count - 1 - site;
        (index / self.site_levels.pow(shift as u32)) % self.site_levels
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> C<T> {
        inner(&self.amplitudes, &other.amplitudes)
    }

    pub fn norm(&self) -> T {
        norm(&self.amplitudes)
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > T::zero() {
            for a in &mut self.amplitudes {
                *a = *a / n;
            }
        }
        self
    }

    /// `min_φ ‖self − e^{iφ}·other‖₂`.
    pub fn phase_aligned_distance(&self, other: &Self) -> T {
        let ov = other.inner(self);
        let phase = if ov.norm() > T::zero() { ov / ov.norm() } else { C::one() };
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (*a - phase * *b).norm_sqr())
            .sum::<T>()
            .sqrt()
    }
}

#[inline]
pub(crate) fn inner<T: Real>(a: &[C<T>], b: &[C<T>]) -> C<T> {
    a.iter()
        .zip(b)
        .fold(C::zero(), |acc, (x, y)| acc + x.conj() * y)
}

#[inline]
pub(crate) fn norm<T: Real>(a: &[C<T>]) -> T {
    a.iter().map(|x| x.norm_sqr()).sum::<T>().sqrt()
}
