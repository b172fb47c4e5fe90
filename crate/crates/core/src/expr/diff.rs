use super::{Expr, Op};
use crate::scalar::{Scalar, ABS_EPS};

impl<T: Scalar> Expr<T> {
    /// Exact symbolic derivative with respect to `x`, constant folded.
    ///
    /// `y`, `y1` and `y2` are treated as independent of `x` (partial
    /// derivative). Derivatives of the guarded operators follow the guarded
    /// definitions, e.g. `d/dv sqrt(|v| + eps) = sign(v) / (2 sqrt(|v| + eps))`.
    pub fn differentiate(&self) -> Expr<T> {
        derive(self).simplify(T::zero())
    }

    /// `n`-th derivative.
    pub fn nth_derivative(&self, n: usize) -> Expr<T> {
        (0..n).fold(self.clone(), |e, _| e.differentiate())
    }
}

fn derive<T: Scalar>(e: &Expr<T>) -> Expr<T> {
    let zero = || Expr::Const(T::zero());
    match e {
        Expr::Const(_) => zero(),
        Expr::Var(v) => Expr::Const(if *v == super::Var::X { T::one() } else { T::zero() }),
        Expr::Binary(op, a, b) => {
            let (da, db) = (derive(a), derive(b));
            let (a, b) = ((**a).clone(), (**b).clone());
            match op {
                Op::Add => da + db,
                Op::Sub => da - db,
                Op::Mul => da * b.clone() + a * db,
                Op::Div if b.as_const().is_some() => da / b,
                Op::Div => da / b.clone() - (a / b.clone()) * (db / b),
                _ => unreachable!(),
            }
        }
        Expr::Unary(op, a) => {
            let da = derive(a);
            let a = (**a).clone();
            let outer = match op {
                Op::Identity => return da,
                Op::Neg => return -da,
                Op::Sign => return zero(),
                Op::PowInt(0) => return zero(),
                Op::PowInt(1) => return da,
                Op::PowInt(k) => Expr::lit(*k as f64) * a.powi(k - 1),
                Op::Sin => a.cos(),
                Op::Cos => -a.sin(),
                Op::Exp => a.exp(),
                Op::Abs => Expr::unary(Op::Sign, a),
                Op::SqrtAbs => Expr::unary(Op::Sign, a.clone()) / (Expr::lit(2.0) * a.sqrt()),
                Op::LogAbs => Expr::unary(Op::Sign, a.clone()) / (a.abs() + Expr::lit(ABS_EPS)),
                Op::Add | Op::Sub | Op::Mul | Op::Div => unreachable!(),
            };
            outer * da
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, Expr};

    fn p(s: &str) -> Expr<f64> {
        parse(s).unwrap()
    }

    #[test]
    fn sin_to_cos() {
        assert_eq!(p("sin(x)").differentiate(), p("cos(x)"));
    }

    #[test]
    fn lane_emden_exact_solution() {
        let d = p("1 - x^2/6").differentiate();
        for x in [0.0, 0.5, 3.0] {
            assert!((d.eval(x) + x / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn second_derivative_folds_to_constant() {
        let d2 = p("1.000 - 0.166*x^2").nth_derivative(2);
        assert_eq!(d2.as_const(), Some(-0.332));
        let d2 = p("1.000 - 0.166*x*x").nth_derivative(2);
        assert!((d2.eval(7.0) + 0.332).abs() < 1e-15);
    }

    #[test]
    fn sqrt_abs_derivative() {
        let d = p("sqrt(x)").differentiate();
        assert!((d.eval(4.0) - 0.25).abs() < 1e-10);
        assert!((d.eval(-4.0) + 0.25).abs() < 1e-10);
        assert_eq!(d.eval(0.0), 0.0);
    }

    #[test]
    fn unknowns_are_held_fixed() {
        assert_eq!(p("y*x + y1").differentiate(), p("y"));
    }
}
