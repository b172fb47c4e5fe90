//! Problem encodings and the residual/constraint losses.
//!
//! Every task is a residual `g(x, y, y', y'')` that should vanish on the
//! domain plus optional point constraints `f^(n)(x_i) = y_i`. The training
//! objective is `mean(g^2) + lambda * sum((f^(n_i)(x_i) - y_i)^2)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Jet, Tape};
use crate::error::{Error, Result};
use crate::expr::{parse, Bindings, Expr, Var};
use crate::scalar::Scalar;
use crate::sfl::{gates_for, pull_back_gates, record_forward, GateMode, SflConfig, SflParams};

/// Residual magnitudes are clipped here before squaring.
pub const RESIDUAL_CLIP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    /// `g(x, y, y', y'') = 0` given directly.
    Ode,
    /// Antiderivative of `p`: `g = y' - p(x)`.
    Integrate,
    /// `h(x, y) = 0` given directly.
    Functional,
    /// Inverse of `p`: `g = x - p(y)`.
    Inverse,
    /// Root of `p`: `g = p(y)`.
    Root,
    /// Fit the constraint points; `g = 0`.
    Regression,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Ode => "ode",
            TaskKind::Integrate => "integrate",
            TaskKind::Functional => "functional",
            TaskKind::Inverse => "inverse",
            TaskKind::Root => "root",
            TaskKind::Regression => "regression",
        }
    }
}

/// `f^(order)(x) = value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constraint<T> {
    pub x: T,
    pub order: usize,
    pub value: T,
}

impl<T: Scalar> Constraint<T> {
    pub fn new(x: T, order: usize, value: T) -> Self {
        Self { x, order, value }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec<T> {
    pub kind: TaskKind,
    pub residual: Expr<T>,
    pub domain: (T, T),
    /// Open intervals never sampled.
    pub exclusions: Vec<(T, T)>,
    pub constraints: Vec<Constraint<T>>,
    pub lambda: T,
    /// The user-supplied `p` for integrate/inverse/root tasks.
    pub aux: Option<Expr<T>>,
}

impl<T: Scalar> TaskSpec<T> {
    /// Build a task from text. For `ode` and `functional` the text is the
    /// residual itself; for `integrate`, `inverse` and `root` it is `p(x)`;
    /// for `regression` it is ignored.
    pub fn new(kind: TaskKind, text: &str, domain: (T, T), constraints: Vec<Constraint<T>>, lambda: T) -> Result<Self> {
        let (residual, aux) = match kind {
            TaskKind::Ode => (parse::<T>(text)?, None),
            TaskKind::Functional => {
                let g = parse::<T>(text)?;
                if g.references(Var::Y1) || g.references(Var::Y2) {
                    return Err(Error::InvalidTask("functional equations may only use x and y".into()));
                }
                (g, None)
            }
            TaskKind::Integrate | TaskKind::Inverse | TaskKind::Root => {
                let p = parse::<T>(text)?;
                if p.has_unknown() {
                    return Err(Error::InvalidTask(format!(
                        "p(x) for a {} task may not use y, y1 or y2",
                        kind.name()
                    )));
                }
                let g = match kind {
                    TaskKind::Integrate => Expr::var(Var::Y1) - p.clone(),
                    TaskKind::Inverse => Expr::x() - p.substitute(Var::X, &Expr::var(Var::Y)),
                    _ => p.substitute(Var::X, &Expr::var(Var::Y)),
                };
                (g, Some(p))
            }
            TaskKind::Regression => (Expr::Const(T::zero()), None),
        };
        let task = Self {
            kind,
            residual,
            domain,
            exclusions: Vec::new(),
            constraints,
            lambda,
            aux,
        };
        task.validate()?;
        Ok(task)
    }

    pub fn with_exclusions(mut self, exclusions: Vec<(T, T)>) -> Result<Self> {
        self.exclusions = exclusions;
        self.validate()?;
        Ok(self)
    }

    /// `y'' + (2/x) y' + y^m = 0` on `[0.1, 4]` with `y(0) = 1`, `y'(0) = 0`.
    pub fn lane_emden(m: i32) -> Self {
        let g = format!("y2 + (2/x)*y1 + y^{m}");
        Self::new(
            TaskKind::Ode,
            &g,
            (T::lit(0.1), T::lit(4.0)),
            vec![
                Constraint::new(T::zero(), 0, T::one()),
                Constraint::new(T::zero(), 1, T::zero()),
            ],
            T::one(),
        )
        .expect("valid Lane-Emden task")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidTask(m));
        let (a, b) = self.domain;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return bad(format!("domain [{a}, {b}] must satisfy a < b"));
        }
        for &(lo, hi) in &self.exclusions {
            if !(lo < hi && lo >= a && hi <= b) {
                return bad(format!("exclusion ({lo}, {hi}) must lie inside the domain"));
            }
        }
        for c in &self.constraints {
            if c.order > 2 {
                return bad(format!("constraint order {} exceeds 2", c.order));
            }
            if !(c.x.is_finite() && c.value.is_finite()) {
                return bad("constraint values must be finite".into());
            }
        }
        if !(self.lambda >= T::zero() && self.lambda.is_finite()) {
            return bad(format!("lambda must be finite and >= 0, got {}", self.lambda));
        }
        if self.kind == TaskKind::Regression && self.constraints.is_empty() {
            return bad("regression needs at least one data point".into());
        }
        Ok(())
    }

    /// Whether the residual is identically zero (regression).
    pub fn residual_is_zero(&self) -> bool {
        self.residual.as_const() == Some(T::zero())
    }

    /// `g(x, f, f', f'')`.
    pub fn residual_at(&self, x: T, f: Jet<T>) -> T {
        self.residual.eval_with(&Bindings {
            x,
            y: f.v,
            y1: f.d1,
            y2: f.d2,
        })
    }

    /// Record `g(x, f, f', f'')` on `tape`, with `f` an existing jet node.
    pub fn record_residual(&self, tape: &mut Tape<T>, f: crate::autodiff::NodeId, x: T) -> crate::autodiff::NodeId {
        let xs = tape.constant(x);
        let y = tape.component(f, 0);
        let y1 = tape.component(f, 1);
        let y2 = tape.component(f, 2);
        tape.record_expr(&self.residual, &|v| match v {
            Var::X => xs,
            Var::Y => y,
            Var::Y1 => y1,
            Var::Y2 => y2,
        })
    }

    /// Uniform i.i.d. points on the domain minus the exclusions.
    pub fn sample_domain<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<T>> {
        let (a, b) = self.domain;
        if self.excluded_length() >= (b - a).as_f64() {
            return Err(Error::Sampling("exclusions cover the whole domain".into()));
        }
        let (af, bf) = (a.as_f64(), b.as_f64());
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let x = T::lit(rng.random_range(af..=bf));
            if !self.is_excluded(x) {
                out.push(x);
            }
        }
        Ok(out)
    }

    pub fn is_excluded(&self, x: T) -> bool {
        self.exclusions.iter().any(|&(lo, hi)| lo < x && x < hi)
    }

    fn excluded_length(&self) -> f64 {
        let mut iv: Vec<(f64, f64)> = self.exclusions.iter().map(|&(l, h)| (l.as_f64(), h.as_f64())).collect();
        iv.sort_by(|p, q| p.0.total_cmp(&q.0));
        let mut total = 0.0;
        let mut cur: Option<(f64, f64)> = None;
        for (l, h) in iv {
            cur = match cur {
                Some((cl, ch)) if l <= ch => Some((cl, ch.max(h))),
                Some((cl, ch)) => {
                    total += ch - cl;
                    Some((l, h))
                }
                None => Some((l, h)),
            };
        }
        if let Some((cl, ch)) = cur {
            total += ch - cl;
        }
        total
    }

    /// `Err = mean g^2 + lambda * L2` of a fixed expression, using its exact
    /// symbolic derivatives.
    pub fn expr_err(&self, f: &Expr<T>, xs: &[T]) -> ExprErr<T> {
        let d1 = f.differentiate();
        let d2 = d1.differentiate();
        let jet = |x: T| Jet::new(f.eval(x), d1.eval(x), d2.eval(x));
        let clip = T::lit(RESIDUAL_CLIP);
        let l1 = if self.residual_is_zero() || xs.is_empty() {
            T::zero()
        } else {
            let total: T = xs
                .iter()
                .map(|&x| {
                    let r = self.residual_at(x, jet(x));
                    let r = if r.is_nan() {
                        T::infinity()
                    } else {
                        r.max(-clip).min(clip)
                    };
                    r * r
                })
                .sum();
            total / T::lit(xs.len() as f64)
        };
        let l2: T = self
            .constraints
            .iter()
            .map(|c| {
                let d = jet(c.x).order(c.order) - c.value;
                d * d
            })
            .sum();
        let err = l1 + self.lambda * l2;
        ExprErr {
            err: if err.is_finite() { err } else { T::infinity() },
            l1,
            l2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExprErr<T> {
    pub err: T,
    pub l1: T,
    pub l2: T,
}

/// Loss value and gradient of the model on one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct LossEval<T> {
    pub err: T,
    pub l1: T,
    pub l2: T,
    /// Storage-order gradient of `err`.
    pub grads: Vec<T>,
    /// Samples whose residual or gradient was not finite.
    pub nonfinite: usize,
    pub diverged: bool,
}

/// Reusable scratch for [`loss`].
#[derive(Debug, Default)]
pub struct LossWorkspace<T> {
    tape: Tape<T>,
}

impl<T: Scalar> LossWorkspace<T> {
    pub fn new() -> Self {
        Self { tape: Tape::new() }
    }
}

/// Err and its gradient for the gated model on `batch`.
pub fn loss<T: Scalar>(
    task: &TaskSpec<T>,
    params: &SflParams<T>,
    cfg: &SflConfig,
    mode: GateMode,
    batch: &[T],
    with_constraints: bool,
) -> Result<LossEval<T>> {
    loss_with(
        &mut LossWorkspace::new(),
        task,
        params,
        cfg,
        mode,
        batch,
        with_constraints,
    )
}

pub fn loss_with<T: Scalar>(
    ws: &mut LossWorkspace<T>,
    task: &TaskSpec<T>,
    params: &SflParams<T>,
    cfg: &SflConfig,
    mode: GateMode,
    batch: &[T],
    with_constraints: bool,
) -> Result<LossEval<T>> {
    let use_residual = !task.residual_is_zero() && !batch.is_empty();
    let use_constraints = with_constraints && !task.constraints.is_empty();
    if !use_residual && !use_constraints {
        return Err(Error::InvalidTask(
            "nothing to fit: empty batch and no constraints".into(),
        ));
    }
    let gates = gates_for(params, cfg, mode);
    let mut grads = vec![T::zero(); params.len()];
    let clip = T::lit(RESIDUAL_CLIP);
    let two = T::lit(2.0);
    let tape = &mut ws.tape;

    let mut nonfinite = 0;
    let mut l1 = T::zero();
    if use_residual {
        let inv_n = T::lit(batch.len() as f64).recip();
        for &x in batch {
            tape.clear();
            let root = record_forward(tape, params, cfg, &gates, x);
            let r = task.record_residual(tape, root, x);
            let rv = tape.value(r).v;
            if !rv.is_finite() {
                nonfinite += 1;
                continue;
            }
            let clipped = rv.max(-clip).min(clip);
            let slope = if rv.abs() <= clip {
                two * clipped * inv_n
            } else {
                T::zero()
            };
            if !tape.accumulate(r, [slope, T::zero(), T::zero()], &mut grads) {
                nonfinite += 1;
                continue;
            }
            l1 += clipped * clipped * inv_n;
        }
    }

    let mut l2 = T::zero();
    if use_constraints {
        for c in &task.constraints {
            tape.clear();
            let root = record_forward(tape, params, cfg, &gates, c.x);
            let d = tape.value(root).order(c.order) - c.value;
            if !d.is_finite() {
                nonfinite += 1;
                continue;
            }
            let mut seed = [T::zero(); 3];
            seed[c.order] = two * task.lambda * d;
            if !tape.accumulate(root, seed, &mut grads) {
                nonfinite += 1;
                continue;
            }
            l2 += d * d;
        }
    }

    pull_back_gates(&mut grads, params, cfg, &gates);
    let err = l1 + task.lambda * l2;
    let total = if use_residual { batch.len() } else { 0 } + if use_constraints { task.constraints.len() } else { 0 };
    let diverged = nonfinite == total || !err.is_finite() || grads.iter().any(|g| !g.is_finite());
    Ok(LossEval {
        err,
        l1,
        l2,
        grads,
        nonfinite,
        diverged,
    })
}
