//! Symbolic function learner.
//!
//! Learns closed-form expressions that (approximately) solve differential
//! equations, antiderivatives, inverse functions, roots and regression
//! problems. A balanced parse tree whose interior nodes softly select an
//! operator is trained by gradient descent on a residual loss; the discrete
//! formula it settles on is then read off the gate weights.
//!
//! Every numeric layer is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` / `*32` aliases below fix the precision.

pub mod autodiff;
pub mod error;
pub mod eval;
pub mod expr;
pub mod scalar;
pub mod sfl;
pub mod task;
pub mod train;

pub use autodiff::{jet_apply, tape_backward, tape_forward, Gradient, Jet, NodeId, Tape};
pub use error::{Error, ParseError, Result};
pub use expr::{parse, Bindings, Expr, ExprDoc, Op, Var};
pub use scalar::Scalar;
pub use sfl::{GateMode, SflConfig, SflParams};
pub use task::{Constraint, TaskKind, TaskSpec};
pub use train::{RestartRecord, RunResult, TrainConfig};

pub type Expr64 = Expr<f64>;
pub type Expr32 = Expr<f32>;
pub type Jet64 = Jet<f64>;
pub type Jet32 = Jet<f32>;
pub type Tape64 = Tape<f64>;
pub type SflParams64 = SflParams<f64>;
pub type SflParams32 = SflParams<f32>;

pub type TaskSpec64 = TaskSpec<f64>;
pub type TaskSpec32 = TaskSpec<f32>;
pub type TrainConfig64 = TrainConfig<f64>;
pub type RunResult64 = RunResult<f64>;
