// SPDX-License-Identifier: Apache-2.0

//! Machinery for diversity-driven RTL generation training: a Verilog-subset
//! frontend, structural equivalence classes, a cycle-based simulator,
//! multi-objective rewards, a reference GRPO kernel and evaluation metrics.

pub mod canon;
pub mod cli;
pub mod config;
pub mod grpo;
pub mod metrics;
pub mod reward;
pub mod sim;
pub mod verilog;
