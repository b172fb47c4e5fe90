//! Run-spec documents (TOML or JSON) and their conversion to core types.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sfl_core::train::AdamConfig;
use sfl_core::{parse, Constraint, Op, SflConfig, TaskKind, TaskSpec, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub task: TaskDoc,
    #[serde(default)]
    pub model: ModelDoc,
    #[serde(default)]
    pub train: TrainDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskDoc {
    pub kind: TaskKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<String>,
    pub domain: [f64; 2],
    #[serde(default)]
    pub exclusions: Vec<[f64; 2]>,
    #[serde(default)]
    pub constraints: Vec<ConstraintDoc>,
    #[serde(default = "one")]
    pub lambda: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintDoc {
    pub x: f64,
    #[serde(default)]
    pub order: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelDoc {
    pub depth: usize,
    pub unary_ops: Vec<String>,
    pub binary_ops: Vec<String>,
    /// Defaults to true for depth <= 2.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<bool>,
    pub sigma: f64,
}

impl Default for ModelDoc {
    fn default() -> Self {
        let cfg = SflConfig::new(2);
        Self {
            depth: cfg.depth,
            unary_ops: cfg.unary.iter().map(|o| o.name().to_string()).collect(),
            binary_ops: cfg.binary.iter().map(|o| o.name().to_string()).collect(),
            delta: None,
            sigma: cfg.sigma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainDoc {
    pub restarts: usize,
    pub iterations: usize,
    pub soft_fraction: f64,
    pub pool_size: usize,
    pub batch_size: usize,
    pub full_batch: bool,
    pub validation_size: usize,
    pub step_size: f64,
    pub base_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub early_stop: Option<f64>,
}

impl Default for TrainDoc {
    fn default() -> Self {
        let t = TrainConfig::<f64>::default();
        Self {
            restarts: t.restarts,
            iterations: t.iterations,
            soft_fraction: t.soft_fraction,
            pool_size: t.pool_size,
            batch_size: t.batch_size,
            full_batch: t.full_batch,
            validation_size: t.validation_size,
            step_size: t.adam.step_size,
            base_seed: t.base_seed,
            early_stop: t.early_stop,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsDoc {
    /// Intervals on which the residual error of the best expression is reported.
    pub residual_intervals: Vec<[f64; 2]>,
}

/// Everything a run needs, checked.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub task: TaskSpec<f64>,
    pub model: SflConfig,
    pub train: TrainConfig<f64>,
    pub residual_intervals: Vec<(f64, f64)>,
}

impl RunSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let spec = if is_json {
            serde_json::from_str(&text).with_context(|| format!("invalid spec {}", path.display()))?
        } else {
            toml::from_str(&text).with_context(|| format!("invalid spec {}", path.display()))?
        };
        Ok(spec)
    }

    /// Fill in defaults that depend on other keys, so the echo re-runs identically.
    pub fn normalized(mut self) -> Self {
        if self.model.delta.is_none() {
            self.model.delta = Some(SflConfig::default_delta(self.model.depth));
        }
        self
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let task = self.task.resolve()?;
        let model = self.model.resolve()?;
        let train = self.train.resolve()?;
        let mut residual_intervals = Vec::new();
        if let Some(m) = &self.metrics {
            for (i, &[a, b]) in m.residual_intervals.iter().enumerate() {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    bail!("metrics.residual_intervals[{i}]: [{a}, {b}] must satisfy a < b");
                }
                residual_intervals.push((a, b));
            }
        }
        Ok(Resolved {
            task,
            model,
            train,
            residual_intervals,
        })
    }
}

impl TaskDoc {
    pub fn resolve(&self) -> Result<TaskSpec<f64>> {
        let [a, b] = self.domain;
        if !(a.is_finite() && b.is_finite() && a < b) {
            bail!("task.domain: [{a}, {b}] must satisfy a < b");
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            bail!("task.lambda: must be finite and >= 0, got {}", self.lambda);
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.order > 2 {
                bail!("task.constraints[{i}].order: {} exceeds 2", c.order);
            }
            if !(c.x.is_finite() && c.value.is_finite()) {
                bail!("task.constraints[{i}]: x and value must be finite");
            }
        }
        for (i, &[lo, hi]) in self.exclusions.iter().enumerate() {
            if !(lo < hi && lo >= a && hi <= b) {
                bail!("task.exclusions[{i}]: ({lo}, {hi}) must be a non-empty interval inside the domain");
            }
        }
        let (text, key) = match self.kind {
            TaskKind::Ode | TaskKind::Functional => {
                if self.p.is_some() {
                    bail!("task.p: not used by {} tasks (give g)", self.kind.name());
                }
                (self.g.as_deref(), "g")
            }
            TaskKind::Integrate | TaskKind::Inverse | TaskKind::Root => {
                if self.g.is_some() {
                    bail!("task.g: not used by {} tasks (give p)", self.kind.name());
                }
                (self.p.as_deref(), "p")
            }
            TaskKind::Regression => {
                if self.g.is_some() || self.p.is_some() {
                    bail!("task.g/task.p: regression fits the constraints only");
                }
                if self.constraints.is_empty() {
                    bail!("task.constraints: regression needs at least one data point");
                }
                (Some(""), "")
            }
        };
        let text = text.with_context(|| format!("task.{key}: required for {} tasks", self.kind.name()))?;
        let constraints = self
            .constraints
            .iter()
            .map(|c| Constraint::new(c.x, c.order, c.value))
            .collect();
        let task =
            TaskSpec::new(self.kind, text, (a, b), constraints, self.lambda).with_context(|| format!("task.{key}"))?;
        let exclusions = self.exclusions.iter().map(|&[l, h]| (l, h)).collect();
        let task = task.with_exclusions(exclusions).context("task.exclusions")?;
        Ok(task)
    }
}

fn ops(names: &[String], key: &str, arity: usize) -> Result<Vec<Op>> {
    names
        .iter()
        .map(|n| match Op::from_name(n) {
            Some(op) if op.arity() == arity && op != Op::Neg => Ok(op),
            Some(_) => bail!(
                "model.{key}: '{n}' is not a {} operator",
                if arity == 1 { "unary" } else { "binary" }
            ),
            None => bail!("model.{key}: unknown operator '{n}'"),
        })
        .collect()
}

impl ModelDoc {
    pub fn resolve(&self) -> Result<SflConfig> {
        let unary = ops(&self.unary_ops, "unary_ops", 1)?;
        let binary = ops(&self.binary_ops, "binary_ops", 2)?;
        let delta = self.delta.unwrap_or(SflConfig::default_delta(self.depth));
        let mut cfg = SflConfig::new(self.depth).with_ops(unary, binary).with_delta(delta);
        cfg.sigma = self.sigma;
        if self.depth > sfl_core::sfl::MAX_DEPTH {
            bail!("model.depth: at most {}", sfl_core::sfl::MAX_DEPTH);
        }
        if self.unary_ops.is_empty() && self.binary_ops.is_empty() {
            bail!("model.unary_ops/binary_ops: at least one operator is needed");
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            bail!("model.sigma: must be positive");
        }
        cfg.validate().context("model")?;
        Ok(cfg)
    }
}

impl TrainDoc {
    pub fn resolve(&self) -> Result<TrainConfig<f64>> {
        if self.restarts == 0 {
            bail!("train.restarts: must be >= 1");
        }
        for (v, key) in [
            (self.pool_size, "pool_size"),
            (self.batch_size, "batch_size"),
            (self.validation_size, "validation_size"),
        ] {
            if v == 0 {
                bail!("train.{key}: must be >= 1");
            }
        }
        if !(0.0..=1.0).contains(&self.soft_fraction) {
            bail!("train.soft_fraction: must lie in [0, 1]");
        }
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            bail!("train.step_size: must be positive");
        }
        let t = TrainConfig {
            restarts: self.restarts,
            iterations: self.iterations,
            soft_fraction: self.soft_fraction,
            pool_size: self.pool_size,
            batch_size: self.batch_size,
            full_batch: self.full_batch,
            validation_size: self.validation_size,
            adam: AdamConfig {
                step_size: self.step_size,
                ..AdamConfig::default()
            },
            base_seed: self.base_seed,
            early_stop: self.early_stop,
            ..TrainConfig::default()
        };
        t.validate().context("train")?;
        Ok(t)
    }
}

/// A number given on the command line; constant expressions such as `pi/2`
/// are accepted.
pub fn parse_number(s: &str) -> Result<f64> {
    let e = parse::<f64>(s).with_context(|| format!("'{s}' is not a number"))?;
    if e.references(sfl_core::Var::X) || e.has_unknown() {
        bail!("'{s}' must be a constant");
    }
    let v = e.eval(0.0);
    if !v.is_finite() {
        bail!("'{s}' is not finite");
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lane_emden_spec() {
        let text = r#"
            [task]
            kind = "ode"
            g = "y2 + (2/x)*y1 + y*y"
            domain = [0.1, 4.0]
            constraints = [{ x = 0, order = 0, value = 1.0 }, { x = 0, order = 1, value = 0.0 }]

            [model]
            binary_ops = ["mul", "div"]

            [metrics]
            residual_intervals = [[1, 5]]
        "#;
        let spec: RunSpec = toml::from_str(text).unwrap();
        let r = spec.resolve().unwrap();
        assert_eq!(r.model.binary, vec![Op::Mul, Op::Div]);
        assert!(r.model.delta);
        assert_eq!(r.train.restarts, 20);
        assert_eq!(r.residual_intervals, vec![(1.0, 5.0)]);
        assert_eq!(spec.normalized().model.delta, Some(true));
    }

    #[test]
    fn errors_name_the_key() {
        let bad = |t: &str| {
            let spec: RunSpec = toml::from_str(t).unwrap();
            format!("{:#}", spec.resolve().unwrap_err())
        };
        let e = bad("[task]\nkind = \"ode\"\ng = \"y2+y\"\ndomain = [5, 1]\n");
        assert!(e.contains("task.domain"), "{e}");
        let e = bad("[task]\nkind = \"integrate\"\ndomain = [0, 1]\n");
        assert!(e.contains("task.p"), "{e}");
        let e = bad("[task]\nkind = \"ode\"\ng = \"y2+y\"\ndomain = [0, 1]\n[model]\nunary_ops = [\"mul\"]\n");
        assert!(e.contains("model.unary_ops"), "{e}");
        let e = bad("[task]\nkind = \"ode\"\ng = \"y2+\"\ndomain = [0, 1]\n");
        assert!(e.contains("task.g"), "{e}");
    }

    #[test]
    fn unknown_keys_rejected() {
        let r: std::result::Result<RunSpec, _> =
            toml::from_str("[task]\nkind = \"ode\"\ng = \"y\"\ndomain = [0, 1]\n[train]\nepochs = 3\n");
        assert!(format!("{}", r.unwrap_err()).contains("epochs"));
    }

    #[test]
    fn numbers() {
        assert_eq!(parse_number("-2").unwrap(), -2.0);
        assert!((parse_number("pi/2").unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!(parse_number("x").is_err());
    }
}
