//! Statistical auditing of associations between protected user attributes
//! and application outputs.
//!
//! The pipeline has three stages: a guided search over user subpopulations on
//! a training split ([`tree`]), out-of-sample validation with multiple-testing
//! correction on a held-out split ([`stats`], [`investigations`]), and report
//! rendering ([`report`]). [`synth`] generates populations with planted
//! disparities for benchmarking.

pub mod dataset;
pub mod error;
pub mod investigations;
pub mod metrics;
pub mod report;
pub mod stats;
pub mod synth;
pub mod tree;

pub use error::{Error, Result};
