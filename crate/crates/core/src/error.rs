// Copyright 2026 The robust-ghz Contributors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("operator flagged hermitian is not: entry ({row}, {col}) has no conjugate partner")]
    NotHermitian { row: usize, col: usize },

    #[error("index ({row}, {col}) out of range for dimension {dim}")]
    IndexOutOfRange { row: usize, col: usize, dim: usize },

    #[error("krylov propagation did not converge after {substeps} substeps (last error estimate {estimate:e})")]
    KrylovNonConvergence { substeps: usize, estimate: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("charge basis cutoff {cutoff} too small: boundary weight {weight:e} exceeds 1e-8")]
    ChargeCutoffTooSmall { cutoff: usize, weight: f64 },

    #[error("eigensolver failed to converge")]
    EigenNonConvergence,

    #[error("{count} uncertain parameters give 2^{count} extreme points; use symmetry grouping instead")]
    TooManyExtremePoints { count: usize },

    #[error("evaluation at extreme point {point} failed: {source}")]
    AtPoint {
        point: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("linear program solver failed: {0}")]
    LinearProgram(String),

    #[error("leakage is undefined for {levels}-level sites")]
    LeakageUndefined { levels: usize },

    #[error("pulse document: {0}")]
    PulseFormat(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
