use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Op;

/// Which gate the interior nodes use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateMode {
    /// Plain softmax: a convex mix of all operators.
    Soft,
    /// Softmax divided by its maximum and passed through a narrow hump at 1.
    Discrete,
}

/// Structural hyperparameters of the tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SflConfig {
    /// Number of interior layers.
    pub depth: usize,
    pub unary: Vec<Op>,
    pub binary: Vec<Op>,
    /// Whether unary operators see `left + right` (true) or `left` alone.
    pub delta: bool,
    /// Width of the hump `exp(-(1 - t)^2 / sigma^2)`.
    pub sigma: f64,
}

pub const MAX_DEPTH: usize = 10;

impl SflConfig {
    /// `U = [id, sin, sqrt]`, `V = [mul]`, `delta = 1` for shallow trees.
    pub fn new(depth: usize) -> Self {
        Self {
            depth,
            unary: vec![Op::Identity, Op::Sin, Op::SqrtAbs],
            binary: vec![Op::Mul],
            delta: Self::default_delta(depth),
            sigma: 0.05,
        }
    }

    pub fn default_delta(depth: usize) -> bool {
        depth <= 2
    }

    pub fn with_ops(mut self, unary: Vec<Op>, binary: Vec<Op>) -> Self {
        self.unary = unary;
        self.binary = binary;
        self
    }

    pub fn with_division(mut self) -> Self {
        if !self.binary.contains(&Op::Div) {
            self.binary.push(Op::Div);
        }
        self
    }

    pub fn with_delta(mut self, delta: bool) -> Self {
        self.delta = delta;
        self
    }

    /// Total operator count `k = |U| + |V|`.
    pub fn k(&self) -> usize {
        self.unary.len() + self.binary.len()
    }

    /// Operator for gate index `j` (unary first, then binary).
    pub fn op(&self, j: usize) -> Op {
        if j < self.unary.len() {
            self.unary[j]
        } else {
            self.binary[j - self.unary.len()]
        }
    }

    pub fn num_leaves(&self) -> usize {
        1 << self.depth
    }

    /// Interior nodes in layer `n` (1-based; the root is layer `depth`).
    pub fn nodes_in_layer(&self, n: usize) -> usize {
        1 << (self.depth - n)
    }

    pub fn num_interior(&self) -> usize {
        self.num_leaves() - 1
    }

    /// `2 * 2^m + sum_n 2^(m-n) * (k + 2)`
    pub fn num_params(&self) -> usize {
        2 * self.num_leaves() + self.num_interior() * (self.k() + 2)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.depth == 0 || self.depth > MAX_DEPTH {
            return bad(format!("depth must be in 1..={MAX_DEPTH}, got {}", self.depth));
        }
        if self.k() == 0 {
            return bad("operator lists are empty".into());
        }
        if !self.unary.contains(&Op::Identity) {
            return bad("unary operators must include id".into());
        }
        if let Some(op) = self.unary.iter().find(|o| o.is_binary()) {
            return bad(format!("`{}` is not unary", op.name()));
        }
        if let Some(op) = self.binary.iter().find(|o| !o.is_binary()) {
            return bad(format!("`{}` is not binary", op.name()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        Ok(())
    }
}
