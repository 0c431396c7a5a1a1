// Copyright 2026 The robust-ghz Contributors
// SPDX-License-Identifier: Apache-2.0

//! Piecewise-constant control pulses.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// `m` equal bins covering `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseGrid<T> {
    total_time: T,
    bins: usize,
}

impl<T: Real> PulseGrid<T> {
    pub fn new(total_time: T, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidParameter("pulse grid needs at least one bin".into()));
        }
        if !(total_time > T::zero()) || !total_time.is_finite() {
            return Err(Error::InvalidParameter("pulse duration must be positive and finite".into()));
        }
        Ok(Self { total_time, bins })
    }

    pub fn total_time(&self) -> T {
        self.total_time
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn dt(&self) -> T {
        self.total_time / T::from_usize(self.bins).expect("bin count fits scalar")
    }
}

/// Quadrature index within a channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quadrature {
    X = 0,
    Y = 1,
}

/// All drive amplitudes (rad/s), laid out `[bin][channel][quadrature]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSet<T> {
    grid: PulseGrid<T>,
    channels: usize,
    amplitudes: Vec<T>,
    amplitude_bound: T,
}

impl<T: Real> PulseSet<T> {
    pub fn new(grid: PulseGrid<T>, channels: usize, amplitudes: Vec<T>, amplitude_bound: T) -> Result<Self> {
        if channels == 0 {
            return Err(Error::InvalidParameter("pulse needs at least one channel".into()));
        }
        let expected = grid.bins * channels * 2;
        if amplitudes.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: amplitudes.len(),
            });
        }
        if !(amplitude_bound > T::zero()) || !amplitude_bound.is_finite() {
            return Err(Error::InvalidParameter("amplitude bound must be positive and finite".into()));
        }
        if let Some(a) = amplitudes.iter().find(|a| !(a.abs() <= amplitude_bound)) {
            return Err(Error::InvalidParameter(format!(
                "amplitude {a} exceeds bound {amplitude_bound}"
            )));
        }
        Ok(Self {
            grid,
            channels,
            amplitudes,
            amplitude_bound,
        })
    }

    pub fn zeros(grid: PulseGrid<T>, channels: usize, amplitude_bound: T) -> Result<Self> {
        Self::new(grid, channels, vec![T::zero(); grid.bins * channels * 2], amplitude_bound)
    }

    /// Every bin of every channel set to `(x, y)`.
    pub fn constant(grid: PulseGrid<T>, channels: usize, x: T, y: T, amplitude_bound: T) -> Result<Self> {
        let amps = (0..grid.bins * channels).flat_map(|_| [x, y]).collect();
        Self::new(grid, channels, amps, amplitude_bound)
    }

    /// Independent uniform draws in `[-fraction·Ω_max, fraction·Ω_max]`.
    pub fn random(grid: PulseGrid<T>, channels: usize, amplitude_bound: T, fraction: T, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = (fraction * amplitude_bound).min(amplitude_bound).as_f64();
        let amps = (0..grid.bins * channels * 2)
            .map(|_| T::lit(rng.gen_range(-half..=half)))
            .collect();
        Self::new(grid, channels, amps, amplitude_bound)
    }

    pub fn grid(&self) -> &PulseGrid<T> {
        &self.grid
    }

    pub fn bins(&self) -> usize {
        self.grid.bins
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn amplitude_bound(&self) -> T {
        self.amplitude_bound
    }

    /// The flat control vector `c`.
    pub fn amplitudes(&self) -> &[T] {
        &self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    #[inline]
    pub fn index(&self, bin: usize, channel: usize, q: Quadrature) -> usize {
        (bin * self.channels + channel) * 2 + q as usize
    }

    #[inline]
    pub fn get(&self, bin: usize, channel: usize, q: Quadrature) -> T {
        self.amplitudes[self.index(bin, channel, q)]
    }

    /// Amplitudes of one bin, `[ch0.x, ch0.y, ch1.x, …]`.
    pub fn bin(&self, bin: usize) -> &[T] {
        let w = self.channels * 2;
        &self.amplitudes[bin * w..(bin + 1) * w]
    }

    /// Replaces the control vector, clamping into `[-Ω_max, Ω_max]`.
    pub fn with_amplitudes_clamped(&self, amplitudes: Vec<T>) -> Result<Self> {
        if amplitudes.len() != self.amplitudes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.amplitudes.len(),
                actual: amplitudes.len(),
            });
        }
        let b = self.amplitude_bound;
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|a| a.max(-b).min(b)).collect(),
            ..self.clone()
        })
    }

    /// Same amplitudes with the bin order reversed.
    pub fn reversed(&self) -> Self {
        let w = self.channels * 2;
        let mut amps = Vec::with_capacity(self.amplitudes.len());
        for bin in (0..self.grid.bins).rev() {
            amps.extend_from_slice(&self.amplitudes[bin * w..(bin + 1) * w]);
        }
        Self {
            amplitudes: amps,
            ..self.clone()
        }
    }

    pub fn to_document(&self) -> PulseDocument {
        PulseDocument {
            total_time: self.grid.total_time.as_f64(),
            bins: self.grid.bins,
            channels: self.channels,
            amplitudes: self.amplitudes.iter().map(|a| a.as_f64()).collect(),
            amplitude_bound: self.amplitude_bound.as_f64(),
            convention: PulseDocument::CONVENTION.into(),
        }
    }

    pub fn from_document(doc: &PulseDocument) -> Result<Self> {
        if doc.convention != PulseDocument::CONVENTION {
            return Err(Error::PulseFormat(format!(
                "unsupported amplitude convention {:?}, expected {:?}",
                doc.convention,
                PulseDocument::CONVENTION
            )));
        }
        let grid = PulseGrid::new(T::lit(doc.total_time), doc.bins)?;
        Self::new(
            grid,
            doc.channels,
            doc.amplitudes.iter().map(|&a| T::lit(a)).collect(),
            T::lit(doc.amplitude_bound),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: PulseDocument = serde_json::from_str(s)?;
        Self::from_document(&doc)
    }
}

/// On-disk pulse form. Amplitudes are row-major `[bin][channel][x, y]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseDocument {
    #[serde(rename = "T")]
    pub total_time: f64,
    #[serde(rename = "m")]
    pub bins: usize,
    pub channels: usize,
    pub amplitudes: Vec<f64>,
    pub amplitude_bound: f64,
    pub convention: String,
}

impl PulseDocument {
    pub const CONVENTION: &'static str = "rad_per_s";
}
