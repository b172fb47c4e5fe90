use serde::{Deserialize, Serialize};

use crate::scalar::{guard_denominator, Scalar, ABS_EPS};

/// Largest exponent magnitude accepted by [`Op::PowInt`].
pub const MAX_POW: i32 = 16;

/// Operators that may appear in an expression tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    PowInt(i32),
    Sin,
    Cos,
    /// `sqrt(|v| + eps)`
    SqrtAbs,
    Exp,
    /// `log(|v| + eps)`
    LogAbs,
    Abs,
    /// Derivative of `abs`; only produced by symbolic differentiation.
    Sign,
    Identity,
}

impl Op {
    pub const fn arity(self) -> usize {
        match self {
            Op::Add | Op::Sub | Op::Mul | Op::Div => 2,
            _ => 1,
        }
    }

    pub const fn is_binary(self) -> bool {
        self.arity() == 2
    }

    /// Name used in expression text and in serialized documents.
    pub fn name(self) -> &'static str {
        match self {
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Div => "div",
            Op::Neg => "neg",
            Op::PowInt(_) => "pow_int",
            Op::Sin => "sin",
            Op::Cos => "cos",
            Op::SqrtAbs => "sqrt",
            Op::Exp => "exp",
            Op::LogAbs => "log",
            Op::Abs => "abs",
            Op::Sign => "sign",
            Op::Identity => "id",
        }
    }

    /// Inverse of [`Op::name`] for everything except `pow_int`, which carries
    /// its exponent separately.
    pub fn from_name(name: &str) -> Option<Op> {
        Some(match name {
            "add" | "+" => Op::Add,
            "sub" | "-" => Op::Sub,
            "mul" | "*" => Op::Mul,
            "div" | "/" => Op::Div,
            "neg" => Op::Neg,
            "sin" => Op::Sin,
            "cos" => Op::Cos,
            "sqrt" | "sqrt_abs" => Op::SqrtAbs,
            "exp" => Op::Exp,
            "log" | "log_abs" => Op::LogAbs,
            "abs" => Op::Abs,
            "sign" => Op::Sign,
            "id" | "identity" => Op::Identity,
            _ => return None,
        })
    }

    /// Scalar semantics of a binary operator (with guarded division).
    pub fn apply_binary<T: Scalar>(self, a: T, b: T) -> T {
        match self {
            Op::Add => a + b,
            Op::Sub => a - b,
            Op::Mul => a * b,
            Op::Div => a / guard_denominator(b),
            _ => panic!("{} is not binary", self.name()),
        }
    }

    pub fn apply_unary<T: Scalar>(self, v: T) -> T {
        unary_taylor(self, v)[0]
    }
}

/// Value and first three derivatives of a unary operator at `v`.
///
/// The third derivative is what reverse-mode needs to push adjoints through
/// the second-order component of a jet.
pub fn unary_taylor<T: Scalar>(op: Op, v: T) -> [T; 4] {
    let zero = T::zero();
    let one = T::one();
    let two = T::lit(2.0);
    match op {
        Op::Identity => [v, one, zero, zero],
        Op::Neg => [-v, -one, zero, zero],
        Op::Sin => {
            let (s, c) = v.sin_cos();
            [s, c, -s, -c]
        }
        Op::Cos => {
            let (s, c) = v.sin_cos();
            [c, -s, -c, s]
        }
        Op::Exp => {
            let e = v.exp();
            [e, e, e, e]
        }
        Op::Abs => [v.abs(), v.signum0(), zero, zero],
        Op::Sign => [v.signum0(), zero, zero, zero],
        Op::SqrtAbs => {
            let s = v.signum0();
            let a = v.abs() + T::lit(ABS_EPS);
            let r = a.sqrt();
            [
                r,
                s / (two * r),
                -(s * s) / (T::lit(4.0) * a * r),
                T::lit(3.0) * s / (T::lit(8.0) * a * a * r),
            ]
        }
        Op::LogAbs => {
            let s = v.signum0();
            let a = v.abs() + T::lit(ABS_EPS);
            [a.ln(), s / a, -(s * s) / (a * a), two * s / (a * a * a)]
        }
        Op::PowInt(k) => pow_taylor(v, k),
        Op::Add | Op::Sub | Op::Mul | Op::Div => panic!("{} is not unary", op.name()),
    }
}

/// Guarded reciprocal `1 / (sign(v) * max(|v|, floor))` with derivatives;
/// inside the clamp the function is constant.
pub fn recip_taylor<T: Scalar>(v: T) -> [T; 4] {
    let g = guard_denominator(v);
    let r = g.recip();
    if g != v {
        return [r, T::zero(), T::zero(), T::zero()];
    }
    let r2 = r * r;
    [r, -r2, T::lit(2.0) * r2 * r, T::lit(-6.0) * r2 * r2]
}

fn pow_taylor<T: Scalar>(v: T, k: i32) -> [T; 4] {
    if k == 0 {
        return [T::one(), T::zero(), T::zero(), T::zero()];
    }
    let base = if k < 0 { guard_denominator(v) } else { v };
    let clamped = base != v;
    let term = |c: i32, e: i32| -> T {
        if c == 0 || clamped {
            T::zero()
        } else {
            T::lit(c as f64) * base.powi(e)
        }
    };
    [
        base.powi(k),
        term(k, k - 1),
        term(k * (k - 1), k - 2),
        term(k * (k - 1) * (k - 2), k - 3),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd3(op: Op, v: f64) -> [f64; 3] {
        let h = 1e-4;
        let f = |t: f64| unary_taylor(op, t)[0];
        let d1 = (f(v + h) - f(v - h)) / (2.0 * h);
        let d2 = (f(v + h) - 2.0 * f(v) + f(v - h)) / (h * h);
        let g = |t: f64| unary_taylor(op, t)[2];
        let d3 = (g(v + h) - g(v - h)) / (2.0 * h);
        [d1, d2, d3]
    }

    #[test]
    fn taylor_matches_finite_differences() {
        let ops = [
            Op::Sin,
            Op::Cos,
            Op::Exp,
            Op::SqrtAbs,
            Op::LogAbs,
            Op::PowInt(3),
            Op::PowInt(-2),
            Op::Neg,
        ];
        for op in ops {
            for &v in &[0.7, -1.3, 2.1] {
                let t = unary_taylor(op, v);
                let fd = fd3(op, v);
                for i in 0..3 {
                    let tol = 1e-4 * (1.0 + t[i + 1].abs());
                    assert!((t[i + 1] - fd[i]).abs() < tol, "{op:?} at {v}: {t:?} vs {fd:?}");
                }
            }
        }
    }

    #[test]
    fn guarded_division_clamps() {
        assert_eq!(Op::Div.apply_binary(1.0, 0.0), 1e6);
        assert_eq!(Op::Div.apply_binary(1.0, -1e-9), -1e6);
        assert_eq!(Op::Div.apply_binary(3.0, 2.0), 1.5);
        assert_eq!(recip_taylor(1e-8_f64)[1], 0.0);
    }

    #[test]
    fn sqrt_abs_at_zero_is_finite() {
        let t = unary_taylor(Op::SqrtAbs, 0.0_f64);
        assert!(t.iter().all(|v| v.is_finite()));
        assert_eq!(t[1], 0.0);
    }
}
