//! Banding-aware video quality toolkit.
//!
//! The crate computes a contrast-aware multi-scale banding index on raw
//! video, fuses it with externally computed VMAF scores into a
//! banding-aware score, calibrates the fusion weight by rank-correlation
//! maximization, and carries the surrounding evaluation stack: subjective
//! score recovery with per-subject bias and inconsistency, PLCC/SROCC, the
//! better/worse AUC over significant pairs, and dataset manifests with
//! deterministic reports.

pub mod banding;
pub mod cli;
pub mod error;
pub mod fusion;
pub mod harness;
pub mod media;
pub mod stats;
pub mod subjective;

pub use error::{Error, Result};
