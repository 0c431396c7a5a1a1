// Copyright 2026 The robust-ghz Contributors
// SPDX-License-Identifier: Apache-2.0

//! State vectors, sparse Hermitian operators on tensor-product spaces and
//! a Lanczos propagator for `exp(-iHt)·ψ`.

mod krylov;
mod sparse;
mod state;
pub(crate) mod tridiag;

pub use krylov::{krylov_expv, KrylovConfig};
pub use sparse::{spmv, LinearOperator, LocalOp, OperatorBuilder, SparseOperator, SparsePattern};
pub(crate) use krylov::expv;
pub(crate) use sparse::{Combined, SharedPattern};
pub(crate) use state::{inner, norm as norm_of};
pub use state::StateVector;
