use crate::autodiff::Jet;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::scalar::Scalar;
use crate::task::TaskSpec;

use super::normal::normal_cdf;
use super::quad::{quadrature, quadrature_nudged, simpson_weights, Quad, QuadratureSpec, DEFAULT_PANELS};

/// Interval of the normal-CDF comparison.
pub const ERF_INTERVAL: (f64, f64) = (-1.0, 3.0);

/// `int_a^b g(x, f, f', f'')^2 dx` with exact symbolic derivatives of `f`.
pub fn residual_error<T: Scalar>(f: &Expr<T>, task: &TaskSpec<T>, a: T, b: T) -> Result<Quad<T>> {
    if f.has_unknown() {
        return Err(Error::InvalidTask("expression may only depend on x".into()));
    }
    let d1 = f.differentiate();
    let d2 = d1.differentiate();
    quadrature_nudged(
        |x| {
            let r = task.residual_at(x, Jet::new(f.eval(x), d1.eval(x), d2.eval(x)));
            r * r
        },
        a,
        b,
        DEFAULT_PANELS,
    )
}

/// How the constant of integration is removed before comparing an
/// antiderivative with the candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Offset {
    /// Compare `int_0^x p` with `F(x) - F(0)`.
    #[default]
    AnchorAtOrigin,
    /// Subtract the L2-optimal constant (Simpson mean of the difference).
    LeastSquares,
    None,
}

/// `1/(b-a) int_a^b (int_0^x p(t) dt - F(x))^2 dx`, after removing the
/// constant of integration according to `offset`.
pub fn antideriv_error<T: Scalar>(f_hat: &Expr<T>, integrand: &Expr<T>, a: T, b: T, offset: Offset) -> Result<T> {
    if f_hat.has_unknown() || integrand.has_unknown() {
        return Err(Error::InvalidTask("expressions may only depend on x".into()));
    }
    let spec = QuadratureSpec::new(a, b, DEFAULT_PANELS)?;
    let nodes = spec.nodes();
    let p = |x: T| integrand.eval(x);

    // int_0^a, then a running per-panel Simpson sum across the grid.
    let mut acc = if a == T::zero() {
        T::zero()
    } else if a > T::zero() {
        quadrature(p, T::zero(), a, DEFAULT_PANELS)?
    } else {
        -quadrature(p, a, T::zero(), DEFAULT_PANELS)?
    };
    let six = T::lit(6.0);
    let two = T::lit(2.0);
    let mut diff = Vec::with_capacity(nodes.len());
    let mut left = p(nodes[0]);
    for (i, &x) in nodes.iter().enumerate() {
        if i > 0 {
            let x0 = nodes[i - 1];
            let right = p(x);
            acc += (x - x0) / six * (left + T::lit(4.0) * p((x0 + x) / two) + right);
            left = right;
        }
        diff.push(acc - f_hat.eval(x));
    }

    let weights = simpson_weights(&spec);
    let width = b - a;
    let shift = match offset {
        Offset::AnchorAtOrigin => -f_hat.eval(T::zero()),
        Offset::LeastSquares => {
            let mean: T = diff.iter().zip(&weights).map(|(&d, &w)| d * w).sum();
            mean / width
        }
        Offset::None => T::zero(),
    };
    let total: T = diff
        .iter()
        .zip(&weights)
        .map(|(&d, &w)| {
            let r = d - shift;
            w * r * r
        })
        .sum();
    Ok(total / width)
}

/// `int_{-1}^{3} (f(x) - Phi(x))^2 dx` against the standard normal CDF.
pub fn erf_check<T: Scalar>(f: &Expr<T>) -> Result<T> {
    if f.has_unknown() {
        return Err(Error::InvalidTask("expression may only depend on x".into()));
    }
    erf_check_fn(|x: T| f.eval(x))
}

pub fn erf_check_fn<T: Scalar>(f: impl Fn(T) -> T) -> Result<T> {
    quadrature(
        |x: T| {
            let d = f(x) - T::lit(normal_cdf(x.as_f64()));
            d * d
        },
        T::lit(ERF_INTERVAL.0),
        T::lit(ERF_INTERVAL.1),
        DEFAULT_PANELS,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use std::f64::consts::PI;

    fn e(s: &str) -> Expr<f64> {
        parse(s).unwrap()
    }

    #[test]
    fn exact_solutions_have_no_residual() {
        let t0 = TaskSpec::<f64>::lane_emden(0);
        let q = residual_error(&e("1 - x*x/6"), &t0, 1.0, 5.0).unwrap();
        assert!(q.value < 1e-12 && q.is_clean());
        let t1 = TaskSpec::<f64>::lane_emden(1);
        assert!(residual_error(&e("sin(x)/x"), &t1, 1.0, 5.0).unwrap().value < 1e-8);
        let t5 = TaskSpec::<f64>::lane_emden(5);
        assert!(residual_error(&e("1/sqrt(1 + x*x/3)"), &t5, 1.0, 5.0).unwrap().value < 1e-8);
    }

    #[test]
    fn lane_emden_m0_learned() {
        // the residual is the constant 1 - 6*0.166 everywhere
        let t0 = TaskSpec::<f64>::lane_emden(0);
        let f = e("1.000 - 0.166*x*x");
        let c: f64 = 1.0 - 6.0 * 0.166;
        let v = residual_error(&f, &t0, 1.0, 5.0).unwrap().value;
        assert!((v - c * c * 4.0).abs() < 1e-12);
        assert!((v - 6.4e-5).abs() < 1e-6);
        let v = residual_error(&f, &t0, 0.1, 10.0).unwrap().value;
        assert!((v - c * c * 9.9).abs() < 1e-12);
        assert!((v - 1.6e-4).abs() < 2e-6);
    }

    #[test]
    fn exact_antiderivative() {
        let v = antideriv_error(&e("sin(x)"), &e("cos(x)"), 0.0, PI, Offset::AnchorAtOrigin).unwrap();
        assert!(v < 1e-10);
        let v = antideriv_error(&e("sin(x) + 3"), &e("cos(x)"), -1.0, 2.0, Offset::LeastSquares).unwrap();
        assert!(v < 1e-10);
        let v = antideriv_error(&e("sin(x) + 3"), &e("cos(x)"), -1.0, 2.0, Offset::None).unwrap();
        assert!((v - 9.0).abs() < 1e-8);
    }

    #[test]
    fn offset_invariance() {
        let f = e("0.938*x*sin(sqrt(0.494*x))");
        let p = e("sqrt(sin(x))");
        for offset in [Offset::AnchorAtOrigin, Offset::LeastSquares] {
            let base = antideriv_error(&f, &p, 0.0, PI, offset).unwrap();
            for c in [-3.0, 0.25, 17.0] {
                let shifted = antideriv_error(&(f.clone() + Expr::lit(c)), &p, 0.0, PI, offset).unwrap();
                assert!((shifted - base).abs() <= 1e-12 * base.max(1e-3), "{offset:?} {c}");
            }
        }
    }

    #[test]
    fn erf_oracle_against_itself() {
        let v = erf_check_fn(|x: f64| normal_cdf(x)).unwrap();
        assert!(v < 1e-12);
    }

    #[test]
    fn erf_constant_half() {
        // int_{-1}^{3} (Phi - 1/2)^2 with Phi(x) - 1/2 = int_0^x phi, nested Simpson
        let phi = |t: f64| (-t * t / 2.0).exp() / (2.0 * PI).sqrt();
        let oracle = quadrature(
            |x: f64| {
                let d = if x == 0.0 {
                    0.0
                } else if x > 0.0 {
                    quadrature(phi, 0.0, x, 400).unwrap()
                } else {
                    -quadrature(phi, x, 0.0, 400).unwrap()
                };
                d * d
            },
            -1.0,
            3.0,
            2000,
        )
        .unwrap();
        let v: f64 = erf_check(&Expr::lit(0.5)).unwrap();
        assert!((v - oracle).abs() < 1e-9);
        assert!((v - 0.51227).abs() < 1e-4);
    }
}
