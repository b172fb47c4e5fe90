//! Symbolic expressions: the output language of the learner.
//!
//! An [`Expr`] is an immutable tree of constants, variables and operator
//! applications. Besides the free variable `x`, residual definitions may
//! reference the unknown function and its first two derivatives through the
//! tokens `y`, `y1` and `y2`.

mod diff;
mod doc;
mod op;
mod parse;
mod print;
mod simplify;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use doc::ExprDoc;
pub use op::{recip_taylor, unary_taylor, Op, MAX_POW};
pub use parse::parse;

use crate::scalar::Scalar;

/// Variables an expression may reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Var {
    X,
    /// The unknown function value.
    Y,
    /// First derivative of the unknown function.
    Y1,
    /// Second derivative of the unknown function.
    Y2,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::Y1 => "y1",
            Var::Y2 => "y2",
        }
    }
}

/// Values substituted for the variables during evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bindings<T> {
    pub x: T,
    pub y: T,
    pub y1: T,
    pub y2: T,
}

impl<T: Scalar> Bindings<T> {
    /// Only `x` bound; `y` tokens evaluate to NaN.
    pub fn x(x: T) -> Self {
        Self {
            x,
            y: T::nan(),
            y1: T::nan(),
            y2: T::nan(),
        }
    }

    pub fn get(&self, var: Var) -> T {
        match var {
            Var::X => self.x,
            Var::Y => self.y,
            Var::Y1 => self.y1,
            Var::Y2 => self.y2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr<T> {
    Const(T),
    Var(Var),
    Unary(Op, Box<Expr<T>>),
    Binary(Op, Box<Expr<T>>, Box<Expr<T>>),
}

impl<T: Scalar> Expr<T> {
    /// # Panics
    /// If `value` is not finite.
    pub fn constant(value: T) -> Self {
        assert!(value.is_finite(), "expression constants must be finite");
        Expr::Const(value)
    }

    pub fn lit(value: f64) -> Self {
        Self::constant(T::lit(value))
    }

    pub fn x() -> Self {
        Expr::Var(Var::X)
    }

    pub fn var(v: Var) -> Self {
        Expr::Var(v)
    }

    /// # Panics
    /// If `op` is binary or a `PowInt` exponent exceeds [`MAX_POW`].
    pub fn unary(op: Op, a: Expr<T>) -> Self {
        assert_eq!(op.arity(), 1, "{} takes one argument", op.name());
        if let Op::PowInt(k) = op {
            assert!(k.abs() <= MAX_POW, "exponent {k} out of range");
        }
        Expr::Unary(op, Box::new(a))
    }

    /// # Panics
    /// If `op` is unary.
    pub fn binary(op: Op, a: Expr<T>, b: Expr<T>) -> Self {
        assert_eq!(op.arity(), 2, "{} takes two arguments", op.name());
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn sin(self) -> Self {
        Self::unary(Op::Sin, self)
    }

    pub fn cos(self) -> Self {
        Self::unary(Op::Cos, self)
    }

    pub fn sqrt(self) -> Self {
        Self::unary(Op::SqrtAbs, self)
    }

    pub fn exp(self) -> Self {
        Self::unary(Op::Exp, self)
    }

    pub fn ln(self) -> Self {
        Self::unary(Op::LogAbs, self)
    }

    pub fn abs(self) -> Self {
        Self::unary(Op::Abs, self)
    }

    pub fn powi(self, k: i32) -> Self {
        Self::unary(Op::PowInt(k), self)
    }

    pub fn as_const(&self) -> Option<T> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn eval(&self, x: T) -> T {
        self.eval_with(&Bindings::x(x))
    }

    pub fn eval_with(&self, env: &Bindings<T>) -> T {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(v) => env.get(*v),
            Expr::Unary(op, a) => op.apply_unary(a.eval_with(env)),
            Expr::Binary(op, a, b) => op.apply_binary(a.eval_with(env), b.eval_with(env)),
        }
    }

    pub fn references(&self, var: Var) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Unary(_, a) => a.references(var),
            Expr::Binary(_, a, b) => a.references(var) || b.references(var),
        }
    }

    /// True when the expression mentions any of `y`, `y1`, `y2`.
    pub fn has_unknown(&self) -> bool {
        self.references(Var::Y) || self.references(Var::Y1) || self.references(Var::Y2)
    }

    /// Replace every occurrence of `var` with `with`.
    pub fn substitute(&self, var: Var, with: &Expr<T>) -> Expr<T> {
        match self {
            Expr::Var(v) if *v == var => with.clone(),
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Unary(op, a) => Expr::Unary(*op, Box::new(a.substitute(var, with))),
            Expr::Binary(op, a, b) => Expr::Binary(
                *op,
                Box::new(a.substitute(var, with)),
                Box::new(b.substitute(var, with)),
            ),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 0,
            Expr::Unary(_, a) => 1 + a.depth(),
            Expr::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Unary(_, a) => 1 + a.size(),
            Expr::Binary(_, a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn map_constants(&self, f: &impl Fn(T) -> T) -> Expr<T> {
        match self {
            Expr::Const(c) => Expr::Const(f(*c)),
            Expr::Var(v) => Expr::Var(*v),
            Expr::Unary(op, a) => Expr::Unary(*op, Box::new(a.map_constants(f))),
            Expr::Binary(op, a, b) => Expr::Binary(*op, Box::new(a.map_constants(f)), Box::new(b.map_constants(f))),
        }
    }

    /// Convert the constant type, e.g. `f64` to `f32`.
    pub fn cast<U: Scalar>(&self) -> Expr<U> {
        match self {
            Expr::Const(c) => Expr::Const(U::lit(c.as_f64())),
            Expr::Var(v) => Expr::Var(*v),
            Expr::Unary(op, a) => Expr::Unary(*op, Box::new(a.cast())),
            Expr::Binary(op, a, b) => Expr::Binary(*op, Box::new(a.cast()), Box::new(b.cast())),
        }
    }

    /// Canonical infix text with constants rounded to `precision` decimals.
    pub fn to_string_prec(&self, precision: usize) -> String {
        format!("{:.*}", precision.clamp(1, 12), self)
    }
}

/// `{}` prints constants in shortest round-trip form; `{:.N}` rounds them to
/// `N` decimals.
impl<T: Scalar> fmt::Display for Expr<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print::render(self, f.precision()))
    }
}

macro_rules! binary_operator {
    ($trait:ident, $method:ident, $op:expr) => {
        impl<T: Scalar> std::ops::$trait for Expr<T> {
            type Output = Expr<T>;
            fn $method(self, rhs: Expr<T>) -> Expr<T> {
                Expr::binary($op, self, rhs)
            }
        }
    };
}

binary_operator!(Add, add, Op::Add);
binary_operator!(Sub, sub, Op::Sub);
binary_operator!(Mul, mul, Op::Mul);
binary_operator!(Div, div, Op::Div);

impl<T: Scalar> std::ops::Neg for Expr<T> {
    type Output = Expr<T>;
    fn neg(self) -> Expr<T> {
        Expr::unary(Op::Neg, self)
    }
}
