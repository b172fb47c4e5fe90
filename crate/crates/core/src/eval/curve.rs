//! Curve export: the learned expression next to a reference solution.

use std::fmt::Write as _;

use crate::autodiff::Jet;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::scalar::Scalar;
use crate::task::{TaskKind, TaskSpec};

use super::ode::{ode_reference_for_task, ReferenceSolution};
use super::quad::quadrature;

pub const CSV_HEADER: &str = "x,f_hat,reference,residual";

/// Step of the ODE reference used for plotting.
const PLOT_STEP: f64 = 1e-3;

/// Panels for each antiderivative sample.
const ANTIDERIV_PANELS: usize = 400;

/// `%g`-style formatting with `sig` significant digits.
pub fn format_sig(v: f64, sig: usize) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sig = sig.max(1);
    let sci = format!("{:.*e}", sig - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= sig as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `n` evenly spaced points on `[a, b]` including both ends.
pub fn grid<T: Scalar>(a: T, b: T, n: usize) -> Vec<T> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => {
            let h = (b - a) / T::lit((n - 1) as f64);
            (0..n)
                .map(|i| if i + 1 == n { b } else { a + h * T::lit(i as f64) })
                .collect()
        }
    }
}

/// Solve `p(y) = target` by bracketing outwards from `guess`, then bisection.
pub fn invert<T: Scalar>(p: &Expr<T>, target: T, guess: T) -> Option<T> {
    let h = |y: T| p.eval(y) - target;
    let guess = if guess.is_finite() { guess } else { T::zero() };
    let mut width = T::one();
    let two = T::lit(2.0);
    let mut bracket = None;
    for _ in 0..60 {
        let (lo, hi) = (guess - width, guess + width);
        let (hl, hh) = (h(lo), h(hi));
        if hl.is_finite() && hh.is_finite() && hl * hh <= T::zero() {
            bracket = Some((lo, hi, hl));
            break;
        }
        width *= two;
    }
    let (mut lo, mut hi, mut hl) = bracket?;
    if hl == T::zero() {
        return Some(lo);
    }
    if h(hi) == T::zero() {
        return Some(hi);
    }
    for _ in 0..300 {
        let mid = (lo + hi) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        let hm = h(mid);
        if hm == T::zero() {
            return Some(mid);
        }
        if hm * hl < T::zero() {
            hi = mid;
        } else {
            lo = mid;
            hl = hm;
        }
    }
    Some((lo + hi) / two)
}

/// What the learned expression is compared with on a plot.
#[derive(Debug, Clone, PartialEq)]
pub enum Reference<T> {
    /// RK4 solution from the task's initial conditions.
    Ode(ReferenceSolution<T>),
    /// `int_0^x p + F(0)`, i.e. the antiderivative lined up with `F` at 0.
    Antiderivative { integrand: Expr<T>, anchor: T },
    /// Root of `p(y) = x`.
    Inverse(Expr<T>),
    /// Piecewise-linear interpolation of `(x, y)` data, sorted by `x`.
    Data(Vec<(T, T)>),
}

impl<T: Scalar> Reference<T> {
    pub fn at(&self, x: T, f_hat: T) -> Option<T> {
        let v = match self {
            Reference::Ode(sol) => sol.interpolate(x)?,
            Reference::Antiderivative { integrand, anchor } => {
                let p = |t: T| integrand.eval(t);
                let a = if x == T::zero() {
                    T::zero()
                } else if x > T::zero() {
                    quadrature(p, T::zero(), x, ANTIDERIV_PANELS).ok()?
                } else {
                    -quadrature(p, x, T::zero(), ANTIDERIV_PANELS).ok()?
                };
                a + *anchor
            }
            Reference::Inverse(p) => invert(p, x, f_hat)?,
            Reference::Data(pts) => {
                let (first, last) = (pts.first()?, pts.last()?);
                if x < first.0 || x > last.0 {
                    return None;
                }
                let j = pts.partition_point(|q| q.0 <= x);
                if j == 0 {
                    first.1
                } else if j == pts.len() {
                    last.1
                } else {
                    let (x0, y0) = pts[j - 1];
                    let (x1, y1) = pts[j];
                    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
                }
            }
        };
        v.is_finite().then_some(v)
    }
}

/// The reference available for `task`, if any.
pub fn task_reference<T: Scalar>(task: &TaskSpec<T>, f_hat: &Expr<T>) -> Result<Option<Reference<T>>> {
    Ok(match task.kind {
        TaskKind::Ode => ode_reference_for_task(task, T::lit(PLOT_STEP))?.map(Reference::Ode),
        TaskKind::Integrate => task.aux.as_ref().map(|p| Reference::Antiderivative {
            integrand: p.clone(),
            anchor: f_hat.eval(T::zero()),
        }),
        TaskKind::Inverse => task.aux.clone().map(Reference::Inverse),
        TaskKind::Regression => {
            let mut pts: Vec<(T, T)> = task
                .constraints
                .iter()
                .filter(|c| c.order == 0)
                .map(|c| (c.x, c.value))
                .collect();
            pts.sort_by(|p, q| p.0.partial_cmp(&q.0).expect("finite data"));
            (!pts.is_empty()).then_some(Reference::Data(pts))
        }
        TaskKind::Root | TaskKind::Functional => None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow<T> {
    pub x: T,
    pub f_hat: T,
    pub reference: Option<T>,
    pub residual: T,
}

/// Rows of the learned expression, its reference and its residual on
/// `points` evenly spaced points of the task domain.
pub fn curve<T: Scalar>(f_hat: &Expr<T>, task: &TaskSpec<T>, points: usize) -> Result<Vec<CurveRow<T>>> {
    if f_hat.has_unknown() {
        return Err(Error::InvalidTask("expression may only depend on x".into()));
    }
    let reference = task_reference(task, f_hat)?;
    let d1 = f_hat.differentiate();
    let d2 = d1.differentiate();
    let (a, b) = task.domain;
    Ok(grid(a, b, points)
        .into_iter()
        .map(|x| {
            let v = f_hat.eval(x);
            CurveRow {
                x,
                f_hat: v,
                reference: reference.as_ref().and_then(|r| r.at(x, v)),
                residual: task.residual_at(x, Jet::new(v, d1.eval(x), d2.eval(x))),
            }
        })
        .collect())
}

/// CSV text with 12 significant digits; a missing reference is left blank.
pub fn curve_csv<T: Scalar>(rows: &[CurveRow<T>]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let reference = r.reference.map(|v| format_sig(v.as_f64(), 12)).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            format_sig(r.x.as_f64(), 12),
            format_sig(r.f_hat.as_f64(), 12),
            reference,
            format_sig(r.residual.as_f64(), 12)
        );
    }
    out
}
