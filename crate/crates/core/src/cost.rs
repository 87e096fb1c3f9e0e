//! Deterministic operation-count cost model, used as the cycle proxy.
//!
//! Every kernel and every detector charges cycles according to the same
//! weights, so overhead and speedup figures are machine-independent and
//! reproducible. The weights are rough throughput-relative costs of the
//! operation classes on a scalar FPU; their absolute scale cancels out
//! of every ratio we report.

/// Addition, subtraction, comparison, abs, min/max.
pub const ADD: f64 = 1.0;
/// Multiplication.
pub const MUL: f64 = 1.0;
/// Division.
pub const DIV: f64 = 4.0;
/// Square root.
pub const SQRT: f64 = 8.0;
/// exp, ln, sin, cos, acos, atan2, pow.
pub const TRANSCENDENTAL: f64 = 20.0;
