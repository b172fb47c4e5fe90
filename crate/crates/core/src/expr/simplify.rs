//! Constant folding and term collection.
//!
//! Sums and products are flattened into `constant + sum(coef * product)`
//! form, like terms are merged, and terms whose coefficient magnitude falls
//! below the tolerance are dropped. Function applications are never
//! rewritten beyond folding constant arguments.

use super::{Expr, Op};
use crate::scalar::{guard_denominator, Scalar};

impl<T: Scalar> Expr<T> {
    /// Fold constants, remove identity nodes and drop additive terms whose
    /// coefficient magnitude is below `tol`. With `tol = 0` only exact
    /// rewrites are applied.
    pub fn simplify(&self, tol: T) -> Expr<T> {
        simplify(self, tol)
    }
}

fn simplify<T: Scalar>(e: &Expr<T>, tol: T) -> Expr<T> {
    match e {
        Expr::Const(_) | Expr::Var(_) => e.clone(),
        Expr::Unary(Op::Identity, a) => simplify(a, tol),
        Expr::Unary(Op::PowInt(0), _) => Expr::Const(T::one()),
        Expr::Unary(Op::PowInt(1), a) => simplify(a, tol),
        Expr::Unary(Op::Neg, a) => linear(&Expr::Unary(Op::Neg, Box::new(simplify(a, tol))), tol),
        Expr::Unary(op, a) => {
            let a = simplify(a, tol);
            if let Some(c) = a.as_const() {
                let v = op.apply_unary(c);
                if v.is_finite() {
                    return Expr::Const(v);
                }
            }
            Expr::Unary(*op, Box::new(a))
        }
        Expr::Binary(op, a, b) => {
            let node = Expr::Binary(*op, Box::new(simplify(a, tol)), Box::new(simplify(b, tol)));
            linear(&node, tol)
        }
    }
}

struct Linear<T> {
    constant: T,
    terms: Vec<(T, Vec<Expr<T>>)>,
}

impl<T: Scalar> Linear<T> {
    fn push(&mut self, coef: T, factors: Vec<Expr<T>>) {
        if factors.is_empty() {
            self.constant += coef;
            return;
        }
        match self.terms.iter_mut().find(|(_, f)| *f == factors) {
            Some((c, _)) => *c += coef,
            None => self.terms.push((coef, factors)),
        }
    }
}

/// Collect a (children already simplified) sum/product node.
fn linear<T: Scalar>(e: &Expr<T>, tol: T) -> Expr<T> {
    let mut acc = Linear {
        constant: T::zero(),
        terms: Vec::new(),
    };
    collect_sum(e, T::one(), &mut acc);
    if !acc.constant.is_finite() || acc.terms.iter().any(|(c, _)| !c.is_finite()) {
        return e.clone();
    }
    let keep = |c: T| c != T::zero() && c.abs() >= tol;

    let mut out: Option<Expr<T>> = keep(acc.constant).then_some(Expr::Const(acc.constant));
    for (coef, factors) in acc.terms {
        if !keep(coef) {
            continue;
        }
        out = Some(match out {
            None => product(coef, factors),
            Some(lhs) if coef < T::zero() => Expr::binary(Op::Sub, lhs, product(-coef, factors)),
            Some(lhs) => Expr::binary(Op::Add, lhs, product(coef, factors)),
        });
    }
    out.unwrap_or(Expr::Const(T::zero()))
}

fn collect_sum<T: Scalar>(e: &Expr<T>, sign: T, acc: &mut Linear<T>) {
    match e {
        Expr::Binary(Op::Add, a, b) => {
            collect_sum(a, sign, acc);
            collect_sum(b, sign, acc);
        }
        Expr::Binary(Op::Sub, a, b) => {
            collect_sum(a, sign, acc);
            collect_sum(b, -sign, acc);
        }
        Expr::Unary(Op::Neg, a) => collect_sum(a, -sign, acc),
        _ => {
            let mut factors = Vec::new();
            let coef = collect_product(e, &mut factors);
            acc.push(sign * coef, factors);
        }
    }
}

/// Push the non-constant factors of `e` and return its constant coefficient.
fn collect_product<T: Scalar>(e: &Expr<T>, factors: &mut Vec<Expr<T>>) -> T {
    match e {
        Expr::Const(c) => *c,
        Expr::Binary(Op::Mul, a, b) => collect_product(a, factors) * collect_product(b, factors),
        Expr::Unary(Op::Neg, a) => -collect_product(a, factors),
        Expr::Binary(Op::Div, a, b) => match b.as_const() {
            Some(d) => collect_product(a, factors) / guard_denominator(d),
            None => {
                let mut num = Vec::new();
                let coef = collect_product(a, &mut num);
                let num = if num.is_empty() {
                    Expr::Const(T::one())
                } else {
                    product(T::one(), num)
                };
                factors.push(Expr::binary(Op::Div, num, (**b).clone()));
                coef
            }
        },
        // nested sums stay opaque
        _ => {
            factors.push(e.clone());
            T::one()
        }
    }
}

/// `coef * f1 * f2 * ...`, left associated, omitting a unit coefficient.
fn product<T: Scalar>(coef: T, factors: Vec<Expr<T>>) -> Expr<T> {
    let mut it = factors.into_iter();
    let mut out = if coef == T::one() {
        match it.next() {
            Some(f) => f,
            None => return Expr::Const(coef),
        }
    } else if coef == -T::one() {
        match it.next() {
            Some(f) => Expr::unary(Op::Neg, f),
            None => return Expr::Const(coef),
        }
    } else {
        Expr::Const(coef)
    };
    for f in it {
        out = Expr::binary(Op::Mul, out, f);
    }
    out
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, Expr, Op};

    fn p(s: &str) -> Expr<f64> {
        parse(s).unwrap()
    }

    #[test]
    fn removes_identity_chains() {
        let e = Expr::unary(Op::Identity, Expr::unary(Op::Identity, Expr::<f64>::x()));
        assert_eq!(e.simplify(0.0), Expr::x());
    }

    #[test]
    fn drops_sub_tolerance_terms() {
        let e = p("1*sin(x) + 0.0000004*x");
        assert_eq!(e.simplify(1e-6), p("sin(x)"));
        assert_eq!(e.simplify(0.0).to_string(), "sin(x) + 0.0000004*x");
    }

    #[test]
    fn folds_and_cancels() {
        assert_eq!(p("0.5*(2*x) + 3 - 3").simplify(0.0), Expr::x());
        assert_eq!(p("x + x").simplify(0.0).to_string(), "2*x");
        assert_eq!(p("x - x").simplify(0.0), Expr::lit(0.0));
        assert_eq!(p("sin(0)*x + cos(0)").simplify(0.0), Expr::lit(1.0));
        assert_eq!(p("x/4").simplify(0.0).to_string(), "0.25*x");
        assert_eq!(p("(2*x)/sin(x)").simplify(0.0).to_string(), "2*(x/sin(x))");
    }

    #[test]
    fn canonical_table_form() {
        let e = p("1 + -0.166*x*x").simplify(1e-9);
        assert_eq!(e.to_string_prec(3), "1.000 - 0.166*x*x");
        let e = p("-(x*3)").simplify(0.0);
        assert_eq!(e.to_string(), "-3*x");
    }

    #[test]
    fn keeps_overflowing_constants_symbolic() {
        let e = p("exp(1000)");
        assert_eq!(e.simplify(0.0), e);
    }

    #[test]
    fn folds_guarded_division() {
        let e = p("x/0");
        assert_eq!(e.simplify(0.0).eval(2.0), 2e6);
    }
}
