// Copyright 2026 The robust-ghz Contributors
// SPDX-License-Identifier: Apache-2.0

//! Robust optimal control of GHZ-state preparation on star graphs of
//! coupled two-level qubits or three-level transmons.
//!
//! All numerical code is generic over the real scalar ([`Real`], i.e. `f32`
//! or `f64`); the `*64` aliases below fix the common double-precision case.

// `!(x > 0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod device;
pub mod error;
pub mod optim;
pub mod pulse;
pub mod robustness;
pub mod scalar;
pub mod sensing;
pub mod tensor;

pub use error::{Error, Result};
pub use scalar::{Real, C};

pub type StateVector64 = tensor::StateVector<f64>;
pub type SparseOperator64 = tensor::SparseOperator<f64>;
pub type KrylovConfig64 = tensor::KrylovConfig<f64>;
pub type PulseSet64 = pulse::PulseSet<f64>;
pub type EvolutionConfig64 = control::EvolutionConfig<f64>;
pub type DeviceModel64 = device::DeviceModel<f64>;
pub type UncertaintyBox64 = robustness::UncertaintyBox<f64>;
pub type RobustProblem64 = robustness::RobustProblem<f64>;
pub type OptimizerConfig64 = optim::OptimizerConfig<f64>;
pub type SensingCurve64 = sensing::SensingCurve<f64>;
