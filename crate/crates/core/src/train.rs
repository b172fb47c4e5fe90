//! Multi-restart training with the soft-to-discrete gate schedule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::scalar::Scalar;
use crate::sfl::{extract, GateMode, SflConfig, SflParams};
use crate::task::{loss_with, LossWorkspace, TaskSpec};

/// Consecutive non-finite steps after which a restart is abandoned.
pub const DIVERGENCE_PATIENCE: usize = 50;

/// Loss curve sampling interval, in iterations. The last soft and the first
/// discrete iteration are recorded as well.
pub const CURVE_EVERY: usize = 100;

/// Adaptive moment estimation hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            step_size: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Adam<T> {
    cfg: AdamConfig,
    m: Vec<T>,
    v: Vec<T>,
    t: i32,
}

impl<T: Scalar> Adam<T> {
    pub fn new(cfg: AdamConfig, n: usize) -> Self {
        Self {
            cfg,
            m: vec![T::zero(); n],
            v: vec![T::zero(); n],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [T], grads: &[T]) {
        self.t += 1;
        let b1 = T::lit(self.cfg.beta1);
        let b2 = T::lit(self.cfg.beta2);
        let lr = T::lit(self.cfg.step_size);
        let eps = T::lit(self.cfg.eps);
        let c1 = T::one() - b1.powi(self.t);
        let c2 = T::one() - b2.powi(self.t);
        for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = b1 * *m + (T::one() - b1) * g;
            *v = b2 * *v + (T::one() - b2) * g * g;
            let mh = *m / c1;
            let vh = *v / c2;
            *p -= lr * mh / (vh.sqrt() + eps);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig<T> {
    pub restarts: usize,
    pub iterations: usize,
    /// Fraction of iterations (rounded up) that use the soft gate.
    pub soft_fraction: f64,
    pub pool_size: usize,
    pub batch_size: usize,
    /// Use the whole pool every iteration instead of a random batch.
    pub full_batch: bool,
    pub validation_size: usize,
    pub adam: AdamConfig,
    pub base_seed: u64,
    /// Stop a restart once the training Err drops below this value.
    pub early_stop: Option<T>,
    /// Tolerance handed to expression simplification after extraction.
    pub extract_tol: T,
}

impl<T: Scalar> Default for TrainConfig<T> {
    fn default() -> Self {
        Self {
            restarts: 20,
            iterations: 6000,
            soft_fraction: 0.25,
            pool_size: 5000,
            batch_size: 512,
            full_batch: false,
            validation_size: 1024,
            adam: AdamConfig::default(),
            base_seed: 0,
            early_stop: None,
            extract_tol: T::lit(1e-8),
        }
    }
}

impl<T: Scalar> TrainConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.restarts == 0 {
            return bad("restarts must be >= 1");
        }
        if self.pool_size == 0 || self.batch_size == 0 || self.validation_size == 0 {
            return bad("pool_size, batch_size and validation_size must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.soft_fraction) {
            return bad("soft_fraction must lie in [0, 1]");
        }
        if !(self.adam.step_size > 0.0) {
            return bad("step_size must be positive");
        }
        Ok(())
    }

    /// Number of leading iterations that use the soft gate.
    pub fn soft_iterations(&self) -> usize {
        (self.soft_fraction * self.iterations as f64).ceil() as usize
    }

    pub fn mode_at(&self, iteration: usize) -> GateMode {
        if iteration < self.soft_iterations() {
            GateMode::Soft
        } else {
            GateMode::Discrete
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub iteration: usize,
    pub mode: GateMode,
    pub err: f64,
}

/// Outcome of one seeded training run.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartRecord<T> {
    pub restart: usize,
    pub seed: u64,
    pub params: SflParams<T>,
    pub expr: Expr<T>,
    /// Err of the extracted expression on fresh validation points.
    pub validation_err: T,
    pub diverged: bool,
    pub curve: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult<T> {
    pub restarts: Vec<RestartRecord<T>>,
    /// Index of the restart with the lowest validation Err among the
    /// non-diverged ones; `None` when every restart diverged.
    pub best: Option<usize>,
}

impl<T: Scalar> RunResult<T> {
    pub fn best_record(&self) -> Option<&RestartRecord<T>> {
        self.best.map(|i| &self.restarts[i])
    }

    pub fn best_expr(&self) -> Option<&Expr<T>> {
        self.best_record().map(|r| &r.expr)
    }

    pub fn best_validation_err(&self) -> Option<T> {
        self.best_record().map(|r| r.validation_err)
    }
}

/// One progress report per [`CURVE_EVERY`] iterations.
#[derive(Debug, Clone, Copy)]
pub struct Progress {
    pub restart: usize,
    pub iteration: usize,
    pub mode: GateMode,
    pub err: f64,
}

pub type ProgressFn<'a> = &'a (dyn Fn(Progress) + Sync);

/// Lowest finite validation Err among non-diverged restarts, earliest index on ties.
pub fn select_best<T: Scalar>(records: &[RestartRecord<T>]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, r) in records.iter().enumerate() {
        if r.diverged || r.validation_err.is_nan() {
            continue;
        }
        if best.is_none_or(|b| r.validation_err < records[b].validation_err) {
            best = Some(i);
        }
    }
    best
}

pub fn train_once<T: Scalar>(
    task: &TaskSpec<T>,
    cfg: &SflConfig,
    tcfg: &TrainConfig<T>,
    restart: usize,
    progress: Option<ProgressFn<'_>>,
) -> Result<RestartRecord<T>> {
    cfg.validate()?;
    tcfg.validate()?;
    task.validate()?;
    let seed = tcfg.base_seed.wrapping_add(restart as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = SflParams::init(cfg, &mut rng);
    let fits_residual = !task.residual_is_zero();
    let pool = if fits_residual {
        task.sample_domain(tcfg.pool_size, &mut rng)?
    } else {
        Vec::new()
    };
    let validation = task.sample_domain(tcfg.validation_size, &mut rng)?;

    let mut adam = Adam::new(tcfg.adam, params.len());
    let mut ws = LossWorkspace::new();
    let mut batch = Vec::with_capacity(tcfg.batch_size);
    let mut curve = Vec::new();
    let mut bad_streak = 0;
    let mut diverged = false;

    let soft = tcfg.soft_iterations();
    for it in 0..tcfg.iterations {
        let mode = tcfg.mode_at(it);
        let points: &[T] = if !fits_residual || tcfg.full_batch {
            &pool
        } else {
            batch.clear();
            batch.extend((0..tcfg.batch_size).map(|_| pool[rng.random_range(0..pool.len())]));
            &batch
        };
        let l = loss_with(&mut ws, task, &params, cfg, mode, points, true)?;
        let scheduled = it % CURVE_EVERY == 0 || it + 1 == tcfg.iterations;
        let switch = soft > 0 && (it + 1 == soft || it == soft);
        if scheduled || switch {
            let p = CurvePoint {
                iteration: it,
                mode,
                err: l.err.as_f64(),
            };
            curve.push(p);
            if let (true, Some(report)) = (scheduled, progress) {
                report(Progress {
                    restart,
                    iteration: it,
                    mode,
                    err: p.err,
                });
            }
        }
        if l.diverged {
            bad_streak += 1;
            if bad_streak >= DIVERGENCE_PATIENCE {
                diverged = true;
                break;
            }
            continue;
        }
        bad_streak = 0;
        if tcfg.early_stop.is_some_and(|th| l.err < th) {
            break;
        }
        adam.step(params.as_mut_slice(), &l.grads);
        if !params.is_finite() {
            diverged = true;
            break;
        }
    }

    let expr = extract(&params, cfg, tcfg.extract_tol);
    let validation_err = if diverged {
        T::infinity()
    } else {
        task.expr_err(&expr, &validation).err
    };
    Ok(RestartRecord {
        restart,
        seed,
        params,
        expr,
        validation_err,
        diverged,
        curve,
    })
}

/// Run every restart (in parallel on the current rayon pool) and select the
/// best by validation Err. The result does not depend on scheduling.
pub fn solve<T: Scalar>(
    task: &TaskSpec<T>,
    cfg: &SflConfig,
    tcfg: &TrainConfig<T>,
    progress: Option<ProgressFn<'_>>,
) -> Result<RunResult<T>> {
    cfg.validate()?;
    tcfg.validate()?;
    let restarts = (0..tcfg.restarts)
        .into_par_iter()
        .map(|r| train_once(task, cfg, tcfg, r, progress))
        .collect::<Result<Vec<_>>>()?;
    let best = select_best(&restarts);
    Ok(RunResult { restarts, best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::{Constraint, TaskKind};

    #[test]
    fn adam_step_reduces_convex_loss() {
        let mut c = [0.8_f64];
        let mut adam = Adam::new(AdamConfig::default(), 1);
        let before = c[0] * c[0];
        let g = [2.0 * c[0]];
        adam.step(&mut c, &g);
        assert!(c[0] * c[0] < before);
        for _ in 0..2000 {
            let g = [2.0 * c[0]];
            adam.step(&mut c, &g);
        }
        assert!(c[0].abs() < 1e-2);
    }

    #[test]
    fn schedule_boundary() {
        let t = TrainConfig::<f64>::default();
        assert_eq!(t.soft_iterations(), 1500);
        assert_eq!(t.mode_at(1499), GateMode::Soft);
        assert_eq!(t.mode_at(1500), GateMode::Discrete);
        let t = TrainConfig::<f64> {
            iterations: 10,
            soft_fraction: 0.25,
            ..Default::default()
        };
        assert_eq!(t.soft_iterations(), 3);
    }

    fn line_task() -> TaskSpec<f64> {
        let data = (0..21)
            .map(|i| {
                let x = -1.0 + 0.1 * i as f64;
                Constraint::new(x, 0, 2.0 * x + 1.0)
            })
            .collect();
        TaskSpec::new(TaskKind::Regression, "", (-1.0, 1.0), data, 1.0).unwrap()
    }

    #[test]
    fn zero_iterations_is_the_initial_extraction() {
        let cfg = SflConfig::new(1);
        let tcfg = TrainConfig {
            restarts: 1,
            iterations: 0,
            validation_size: 64,
            ..Default::default()
        };
        let rec = train_once(&line_task(), &cfg, &tcfg, 0, None).unwrap();
        let init = SflParams::init(&cfg, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(rec.params, init);
        let expr = extract(&init, &cfg, tcfg.extract_tol);
        assert_eq!(rec.expr, expr);
        assert_eq!(rec.validation_err, line_task().expr_err(&expr, &[]).err);
    }

    #[test]
    fn selection_skips_diverged_and_prefers_lowest_index() {
        let cfg = SflConfig::new(1);
        let params = SflParams::<f64>::zeros(&cfg);
        let rec = |err: f64, diverged| RestartRecord {
            restart: 0,
            seed: 0,
            params: params.clone(),
            expr: Expr::x(),
            validation_err: err,
            diverged,
            curve: vec![],
        };
        assert_eq!(
            select_best(&[rec(0.5, false), rec(0.1, true), rec(0.5, false)]),
            Some(0)
        );
        assert_eq!(select_best(&[rec(0.5, false), rec(0.2, false)]), Some(1));
        assert_eq!(select_best(&[rec(0.1, true)]), None);
    }
}
