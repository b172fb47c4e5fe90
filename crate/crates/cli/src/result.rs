//! Result documents written by `solve`.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sfl_core::sfl::ParamEntry;
use sfl_core::train::CurvePoint;
use sfl_core::{Expr, ExprDoc, GateMode, RunResult};

use crate::spec::RunSpec;

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultDoc {
    pub tool_version: String,
    pub spec: RunSpec,
    /// `ok` or `all_diverged`.
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best: Option<BestDoc>,
    pub restarts: Vec<RestartDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub metrics: Vec<MetricDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BestDoc {
    pub restart: usize,
    /// Full-precision text; parses back to `tree`.
    pub expression: String,
    /// Constants rounded to three decimals, for reading.
    pub display: String,
    pub tree: ExprDoc,
    pub validation_err: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestartDoc {
    pub restart: usize,
    pub seed: u64,
    pub expression: String,
    /// Absent when not finite.
    pub validation_err: Option<f64>,
    pub diverged: bool,
    pub loss_curve: Vec<CurveDoc>,
    /// Final weights, by tree node.
    pub params: Vec<ParamEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveDoc {
    pub iteration: usize,
    pub mode: GateMode,
    pub err: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricDoc {
    pub interval: [f64; 2],
    pub residual_error: Option<f64>,
    /// Grid points moved off a non-finite integrand value.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nudged: Vec<f64>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl From<&CurvePoint> for CurveDoc {
    fn from(p: &CurvePoint) -> Self {
        Self {
            iteration: p.iteration,
            mode: p.mode,
            err: finite(p.err),
        }
    }
}

impl ResultDoc {
    pub fn new(spec: RunSpec, run: &RunResult<f64>) -> Self {
        let restarts = run
            .restarts
            .iter()
            .map(|r| RestartDoc {
                restart: r.restart,
                seed: r.seed,
                expression: r.expr.to_string(),
                validation_err: finite(r.validation_err),
                diverged: r.diverged,
                loss_curve: r.curve.iter().map(CurveDoc::from).collect(),
                params: r.params.entries(),
            })
            .collect();
        let best = run.best_record().map(|r| BestDoc {
            restart: r.restart,
            expression: r.expr.to_string(),
            display: r.expr.to_string_prec(3),
            tree: ExprDoc::from(&r.expr),
            validation_err: finite(r.validation_err),
        });
        Self {
            tool_version: TOOL_VERSION.into(),
            spec,
            status: if best.is_some() { "ok" } else { "all_diverged" }.into(),
            best,
            restarts,
            metrics: Vec::new(),
            wall_time_s: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("invalid result document {}", path.display()))
    }

    pub fn best_expr(&self) -> Result<Expr<f64>> {
        let best = self.best.as_ref().context("result document has no best expression")?;
        best.tree.to_expr().map_err(anyhow::Error::msg).context("best.tree")
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result documents serialize");
        s.push('\n');
        s
    }
}
