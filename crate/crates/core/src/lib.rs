//! Lightweight neural error detectors for silent data corruption.
//!
//! This crate trains small multilayer-perceptron classifiers that inspect
//! the outputs of fine-grained tasks, executes those tasks under a
//! simulated unreliable (bit-flip) regime, corrects flagged outputs by
//! reliable re-execution, and ranks candidate detectors by a combined
//! quality/overhead fitness score.
//!
//! Module map:
//! - [`metrics`]: confusion rates, missed relative error, EE, the
//!   overhead-gated EEOP score, PSNR and relative-error quality metrics.
//! - [`mlp`]: the detector network (inner-product + ReLU layers, one-hot
//!   output), inference, softmax cross-entropy training math, and the
//!   JSON model format.
//! - [`arch`]: the seven candidate detector shapes derived from the
//!   feature-vector size.
//! - [`augment`]: perturbation of correct feature vectors into labelled
//!   incorrect ones, and balanced epoch-set construction.
//! - [`trainer`]: profile splitting, the ticket early-stopping heuristic,
//!   and per-architecture training.
//! - [`harness`]: task execution with Poisson bit-flip fault injection,
//!   per-task or batched detection, and correction by re-execution.
//! - [`kernels`]: benchmark task kinds (DCT, Black-Scholes, Sobel,
//!   two-link inverse kinematics) with input generators and cost models.
//! - [`perf`]: overhead accounting, the reliable-vs-overclocked speedup
//!   model, and EEOP-based detector selection.

pub mod arch;
pub mod augment;
pub mod cost;
pub mod error;
pub mod harness;
pub mod kernels;
pub mod metrics;
pub mod mlp;
pub mod perf;
pub mod stream;
pub mod trainer;

pub use error::{Error, Result};

/// Flat list of real values inspected by a detector (task outputs,
/// optionally parts of the task input).
pub type FeatureVector = Vec<f32>;
