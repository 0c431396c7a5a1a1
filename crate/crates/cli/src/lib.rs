// Copyright 2026 The robust-ghz Contributors
// SPDX-License-Identifier: Apache-2.0

//! Experiment runner: sweeps over uncertainty levels with robust and
//! non-robust arms, sensing curves, pulse-figure tables and audits.

pub mod artifacts;
pub mod commands;
pub mod config;
