//! The gated parse-tree model.
//!
//! A tree of depth `m` has `2^m` affine leaves `w*x + b`. Every interior
//! node evaluates all candidate operators on its two children (unary
//! operators see `left + delta*right`), mixes them with a gate computed
//! from its weight vector `omega`, and applies its own affine map. Early in
//! training the gate is a plain softmax; later a sharpened version that is
//! (numerically) one-hot on the arg-max entry.

mod config;
mod gate;
mod params;
mod tree;

pub use config::{GateMode, SflConfig, MAX_DEPTH};
pub use gate::{argmax, discrete_softmax, gate_jacobian, softmax, Gate};
pub use params::{ParamEntry, SflParams};
pub use tree::{extract, forward, forward_taped, gates_for, operate, param_gradient, pull_back_gates, record_forward};
