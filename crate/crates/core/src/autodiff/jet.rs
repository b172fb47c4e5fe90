use std::ops::{Add, Mul, Neg, Sub};

use crate::expr::{recip_taylor, unary_taylor, Op};
use crate::scalar::Scalar;

/// Value with first and second derivative with respect to `x`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet<T> {
    pub v: T,
    pub d1: T,
    pub d2: T,
}

impl<T: Scalar> Jet<T> {
    pub fn new(v: T, d1: T, d2: T) -> Self {
        Self { v, d1, d2 }
    }

    pub fn constant(c: T) -> Self {
        Self::new(c, T::zero(), T::zero())
    }

    /// The independent variable at `x`: `(x, 1, 0)`.
    pub fn variable(x: T) -> Self {
        Self::new(x, T::one(), T::zero())
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.d1.is_finite() && self.d2.is_finite()
    }

    /// Component by derivative order (0, 1 or 2).
    pub fn order(&self, n: usize) -> T {
        match n {
            0 => self.v,
            1 => self.d1,
            2 => self.d2,
            _ => panic!("jets carry derivatives up to order 2, asked for {n}"),
        }
    }

    /// Chain rule through a scalar function given its value and first two
    /// derivatives at `self.v`.
    pub(crate) fn chain(self, t: &[T; 4]) -> Self {
        Self::new(t[0], t[1] * self.d1, t[2] * self.d1 * self.d1 + t[1] * self.d2)
    }

    pub fn apply_unary(self, op: Op) -> Self {
        self.chain(&unary_taylor(op, self.v))
    }

    /// Guarded reciprocal.
    pub fn recip(self) -> Self {
        self.chain(&recip_taylor(self.v))
    }

    pub fn scale(self, s: T) -> Self {
        Self::new(self.v * s, self.d1 * s, self.d2 * s)
    }
}

impl<T: Scalar> Add for Jet<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.v + o.v, self.d1 + o.d1, self.d2 + o.d2)
    }
}

impl<T: Scalar> Sub for Jet<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.v - o.v, self.d1 - o.d1, self.d2 - o.d2)
    }
}

impl<T: Scalar> Mul for Jet<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let two = T::lit(2.0);
        Self::new(
            self.v * o.v,
            self.v * o.d1 + self.d1 * o.v,
            self.v * o.d2 + two * self.d1 * o.d1 + self.d2 * o.v,
        )
    }
}

impl<T: Scalar> Neg for Jet<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.v, -self.d1, -self.d2)
    }
}

/// Apply any expression operator to jets. `b` must be present exactly when
/// `op` is binary.
pub fn jet_apply<T: Scalar>(op: Op, a: Jet<T>, b: Option<Jet<T>>) -> Jet<T> {
    match (op, b) {
        (Op::Add, Some(b)) => a + b,
        (Op::Sub, Some(b)) => a - b,
        (Op::Mul, Some(b)) => a * b,
        (Op::Div, Some(b)) => a * b.recip(),
        (op, None) if !op.is_binary() => a.apply_unary(op),
        (op, _) => panic!("arity mismatch for {}", op.name()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sin_at_origin() {
        let j = jet_apply(Op::Sin, Jet::variable(0.0_f64), None);
        assert_eq!(j, Jet::new(0.0, 1.0, 0.0));
    }

    #[test]
    fn square_has_constant_curvature() {
        let x = Jet::variable(3.0_f64);
        assert_eq!(jet_apply(Op::Mul, x, Some(x)), Jet::new(9.0, 6.0, 2.0));
    }

    #[test]
    fn sqrt_abs_at_four() {
        // symbolic derivatives of sqrt at 4: 1/(2*2), -1/(4*8)
        let j = jet_apply(Op::SqrtAbs, Jet::variable(4.0_f64), None);
        assert!((j.v - 2.0).abs() < 1e-9);
        assert!((j.d1 - 0.25).abs() < 1e-9);
        assert!((j.d2 + 0.03125).abs() < 1e-9);
    }

    #[test]
    fn division_matches_quotient_rule() {
        let x = Jet::variable(2.0_f64);
        let q = jet_apply(Op::Div, Jet::constant(1.0), Some(x));
        assert!((q.v - 0.5).abs() < 1e-15);
        assert!((q.d1 + 0.25).abs() < 1e-15);
        assert!((q.d2 - 0.25).abs() < 1e-15);
    }

    #[test]
    #[should_panic]
    fn arity_mismatch_panics() {
        let _ = jet_apply(Op::Mul, Jet::variable(1.0_f64), None);
    }
}
