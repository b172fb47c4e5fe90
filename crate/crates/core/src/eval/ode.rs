//! Fourth-order Runge-Kutta reference solutions for second-order ODE tasks.

use crate::error::{Error, Result};
use crate::expr::Bindings;
use crate::scalar::Scalar;
use crate::task::{TaskKind, TaskSpec};

/// Distance from a singular start point at which integration begins.
pub const SERIES_START: f64 = 1e-4;

/// RK4 grid of `(x, y, y')`, strictly increasing in `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution<T> {
    pub xs: Vec<T>,
    pub ys: Vec<T>,
    pub yps: Vec<T>,
    /// Nominal step; steps are smaller next to a singular start.
    pub step: T,
    pub note: String,
}

impl<T: Scalar> ReferenceSolution<T> {
    pub fn range(&self) -> (T, T) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    /// Cubic Hermite interpolation from `y` and `y'`; `None` outside the grid.
    pub fn interpolate(&self, x: T) -> Option<T> {
        let (lo, hi) = self.range();
        if !(x >= lo && x <= hi) {
            return None;
        }
        let j = self.xs.partition_point(|&g| g <= x).clamp(1, self.xs.len() - 1);
        let (x0, x1) = (self.xs[j - 1], self.xs[j]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let h00 = two * t3 - three * t2 + T::one();
        let h10 = t3 - two * t2 + t;
        let h01 = three * t2 - two * t3;
        let h11 = t3 - t2;
        Some(h00 * self.ys[j - 1] + h10 * h * self.yps[j - 1] + h01 * self.ys[j] + h11 * h * self.yps[j])
    }
}

/// `y'' = G(x, y, y')` for a residual affine in `y2`.
struct Explicit<'a, T> {
    task: &'a TaskSpec<T>,
}

impl<T: Scalar> Explicit<'_, T> {
    fn parts(&self, x: T, y: T, y1: T) -> (T, T) {
        let g = |y2| self.task.residual.eval_with(&Bindings { x, y, y1, y2 });
        let a = g(T::zero());
        (a, g(T::one()) - a)
    }

    fn y2(&self, x: T, y: T, y1: T) -> T {
        let (a, b) = self.parts(x, y, y1);
        -a / b
    }

    fn check_affine(&self, x: T, y: T, y1: T) -> Result<()> {
        let (a, b) = self.parts(x, y, y1);
        let g = |y2| self.task.residual.eval_with(&Bindings { x, y, y1, y2 });
        let tol = T::lit(1e-8) * (T::one() + a.abs() + b.abs());
        for probe in [-3.0, 2.0, 7.5] {
            let p = T::lit(probe);
            if !((g(p) - (a + b * p)).abs() <= tol) {
                return Err(Error::Ode("residual is not affine in y2".into()));
            }
        }
        if b == T::zero() {
            return Err(Error::Ode("residual does not depend on y2".into()));
        }
        Ok(())
    }

    /// Whether RK4 with step `h` cannot start at this point: `y''` is not
    /// finite there or its sensitivity to `y`/`y'` makes the step unstable.
    fn stiff_at(&self, x: T, y: T, y1: T, h: T) -> bool {
        let g = self.y2(x, y, y1);
        if !g.is_finite() {
            return true;
        }
        let dy = (self.y2(x, y + T::one(), y1) - g).abs();
        let dy1 = (self.y2(x, y, y1 + T::one()) - g).abs();
        !(dy1 * h < T::one() && dy * h * h < T::one())
    }

    fn rhs(&self, x: T, s: [T; 2]) -> [T; 2] {
        [s[1], self.y2(x, s[0], s[1])]
    }
}

/// Step endpoints from `x0` to `x_end` (either direction), ending exactly on
/// `x_end`. Without `singular` the steps are uniform and at most `h`; with it
/// they are also capped at half the distance to that point, which keeps RK4
/// stable next to a `1/x`-type coefficient.
fn mesh<T: Scalar>(x0: T, x_end: T, h: T, singular: Option<T>) -> Result<Vec<T>> {
    let span = x_end - x0;
    match singular {
        None => {
            let n = (span.abs() / h).ceil().max(T::one());
            let n = n.to_usize().ok_or_else(|| Error::Ode("step count overflow".into()))?;
            let dx = span / T::lit(n as f64);
            Ok((0..=n)
                .map(|i| if i == n { x_end } else { x0 + dx * T::lit(i as f64) })
                .collect())
        }
        Some(xs) => {
            let dir = span.signum();
            let half = T::lit(0.5);
            let mut nodes = vec![x0];
            let mut x = x0;
            while (x_end - x) * dir > T::zero() {
                let dx = h.min(half * (x - xs).abs());
                x = if (x_end - x).abs() <= dx { x_end } else { x + dir * dx };
                nodes.push(x);
            }
            Ok(nodes)
        }
    }
}

fn integrate<T: Scalar>(
    sys: &Explicit<'_, T>,
    x0: T,
    s0: [T; 2],
    x_end: T,
    h: T,
    singular: Option<T>,
) -> Result<Vec<(T, [T; 2])>> {
    let nodes = mesh(x0, x_end, h, singular)?;
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let mut out = Vec::with_capacity(nodes.len());
    let mut s = s0;
    out.push((x0, s));
    for w in nodes.windows(2) {
        let (x, next) = (w[0], w[1]);
        let dx = next - x;
        let k1 = sys.rhs(x, s);
        let mid = x + dx * half;
        let k2 = sys.rhs(mid, [s[0] + dx * half * k1[0], s[1] + dx * half * k1[1]]);
        let k3 = sys.rhs(mid, [s[0] + dx * half * k2[0], s[1] + dx * half * k2[1]]);
        let k4 = sys.rhs(next, [s[0] + dx * k3[0], s[1] + dx * k3[1]]);
        let sixth = dx / T::lit(6.0);
        s = [
            s[0] + sixth * (k1[0] + two * k2[0] + two * k3[0] + k4[0]),
            s[1] + sixth * (k1[1] + two * k2[1] + two * k3[1] + k4[1]),
        ];
        if !(s[0].is_finite() && s[1].is_finite()) {
            return Err(Error::Ode(format!("solution blew up near x = {next}")));
        }
        out.push((next, s));
    }
    Ok(out)
}

fn assemble<T: Scalar>(parts: Vec<(T, [T; 2])>, step: T, note: String) -> ReferenceSolution<T> {
    let mut sol = ReferenceSolution {
        xs: Vec::with_capacity(parts.len()),
        ys: Vec::with_capacity(parts.len()),
        yps: Vec::with_capacity(parts.len()),
        step,
        note,
    };
    for (x, s) in parts {
        if sol.xs.last().is_some_and(|&l| x <= l) {
            continue;
        }
        sol.xs.push(x);
        sol.ys.push(s[0]);
        sol.yps.push(s[1]);
    }
    sol
}

fn check_kind<T: Scalar>(task: &TaskSpec<T>, h: T) -> Result<()> {
    if task.kind != TaskKind::Ode {
        return Err(Error::Ode(format!("{} tasks have no ODE reference", task.kind.name())));
    }
    if !(h > T::zero() && h.is_finite()) {
        return Err(Error::Ode("step must be positive".into()));
    }
    Ok(())
}

/// Solve `g(x, y, y', y'') = 0` from `(x0, y0, y0')` to `x_end` with RK4,
/// using the step that divides the interval evenly and is closest to `h`
/// from below.
pub fn ode_reference<T: Scalar>(
    task: &TaskSpec<T>,
    x0: T,
    y0: T,
    y0p: T,
    h: T,
    x_end: T,
) -> Result<ReferenceSolution<T>> {
    check_kind(task, h)?;
    let sys = Explicit { task };
    sys.check_affine(x0, y0, y0p)?;
    if !sys.y2(x0, y0, y0p).is_finite() {
        return Err(Error::Ode(format!("equation is singular at x = {x0}")));
    }
    let mut pts = integrate(&sys, x0, [y0, y0p], x_end, h, None)?;
    if x_end < x0 {
        pts.reverse();
    }
    Ok(assemble(pts, h, "rk4 from the given initial values".into()))
}

/// Reference from the task's own initial conditions: a value and a slope
/// constraint at the same point, integrated across the whole domain. A
/// singular (or stiff) initial point is replaced by a second-order series
/// start `SERIES_START` away, with `y''` there solved self-consistently.
/// `Ok(None)` when the task has no such pair of constraints.
pub fn ode_reference_for_task<T: Scalar>(task: &TaskSpec<T>, h: T) -> Result<Option<ReferenceSolution<T>>> {
    check_kind(task, h)?;
    let Some((x0, y0, y0p)) = task.constraints.iter().filter(|c| c.order == 0).find_map(|c0| {
        task.constraints
            .iter()
            .find(|c1| c1.order == 1 && c1.x == c0.x)
            .map(|c1| (c0.x, c0.value, c1.value))
    }) else {
        return Ok(None);
    };
    let sys = Explicit { task };
    let (a, b) = task.domain;
    let singular = sys.stiff_at(x0, y0, y0p, h);
    let eps = T::lit(SERIES_START);
    let mut pts = Vec::new();
    let mut note = String::from("rk4 from the task's initial values");
    for (dir, end) in [(-T::one(), a), (T::one(), b)] {
        if (end - x0) * dir <= T::zero() {
            continue;
        }
        let seg = if singular {
            let e = dir * eps;
            let c = series_curvature(&sys, x0, y0, y0p, e)?;
            let start = [y0 + y0p * e + c * e * e / T::lit(2.0), y0p + c * e];
            sys.check_affine(x0 + e, start[0], start[1])?;
            note = format!("series start at {} from the singular point {x0}", x0 + e);
            integrate(&sys, x0 + e, start, end, h, Some(x0))?
        } else {
            sys.check_affine(x0, y0, y0p)?;
            integrate(&sys, x0, [y0, y0p], end, h, None)?
        };
        if dir < T::zero() {
            pts.extend(seg.into_iter().rev());
        } else {
            pts.extend(seg);
        }
    }
    if pts.is_empty() {
        return Ok(None);
    }
    Ok(Some(assemble(pts, h, note)))
}

/// Secant solve of `c = G(x0 + e, y0 + y0' e + c e^2/2, y0' + c e)`.
fn series_curvature<T: Scalar>(sys: &Explicit<'_, T>, x0: T, y0: T, y0p: T, e: T) -> Result<T> {
    let two = T::lit(2.0);
    let phi = |c: T| sys.y2(x0 + e, y0 + y0p * e + c * e * e / two, y0p + c * e) - c;
    let (mut c0, mut c1) = (T::zero(), T::one());
    let (mut f0, mut f1) = (phi(c0), phi(c1));
    for _ in 0..100 {
        if f1 == T::zero() || (c1 - c0).abs() <= T::epsilon() * (T::one() + c1.abs()) {
            return Ok(c1);
        }
        let c2 = c1 - f1 * (c1 - c0) / (f1 - f0);
        if !c2.is_finite() {
            break;
        }
        (c0, f0, c1) = (c1, f1, c2);
        f1 = phi(c1);
    }
    if f1.abs() <= T::lit(1e-10) * (T::one() + c1.abs()) {
        Ok(c1)
    } else {
        Err(Error::Ode(format!("no consistent series start at x = {}", x0 + e)))
    }
}

/// Lane-Emden solution of index `m` on `[1e-4, x_end]`, seeded with
/// `y = 1 - x^2/6`, `y' = -x/3`.
pub fn lane_emden_reference<T: Scalar>(m: i32, x_end: T, h: T) -> Result<ReferenceSolution<T>> {
    let task = TaskSpec::<T>::lane_emden(m);
    check_kind(&task, h)?;
    let sys = Explicit { task: &task };
    let x0 = T::lit(SERIES_START);
    let six = T::lit(6.0);
    let start = [T::one() - x0 * x0 / six, -x0 / T::lit(3.0)];
    sys.check_affine(x0, start[0], start[1])?;
    let pts = integrate(&sys, x0, start, x_end, h, Some(T::zero()))?;
    Ok(assemble(pts, h, format!("series start at {x0}")))
}
