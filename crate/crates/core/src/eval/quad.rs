use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_PANELS: usize = 2000;

/// Offset applied to a grid point whose integrand value is not finite.
pub const NUDGE: f64 = 1e-9;

/// Composite Simpson rule on `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec<T> {
    pub a: T,
    pub b: T,
    pub panels: usize,
}

impl<T: Scalar> QuadratureSpec<T> {
    pub fn new(a: T, b: T, panels: usize) -> Result<Self> {
        if panels < 2 || !panels.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "panel count must be even and >= 2, got {panels}"
            )));
        }
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidConfig(format!("interval [{a}, {b}] must satisfy a < b")));
        }
        Ok(Self { a, b, panels })
    }

    pub fn step(&self) -> T {
        (self.b - self.a) / T::lit(self.panels as f64)
    }

    /// The `panels + 1` grid nodes.
    pub fn nodes(&self) -> Vec<T> {
        let h = self.step();
        (0..=self.panels)
            .map(|i| {
                if i == self.panels {
                    self.b
                } else {
                    self.a + h * T::lit(i as f64)
                }
            })
            .collect()
    }

    pub fn integrate(&self, f: impl Fn(T) -> T) -> T {
        let w = simpson_weights(self);
        self.nodes().into_iter().zip(w).map(|(x, w)| w * f(x)).sum()
    }
}

/// Simpson weights `h/3 * [1, 4, 2, 4, ..., 4, 1]` for the nodes of `spec`.
pub fn simpson_weights<T: Scalar>(spec: &QuadratureSpec<T>) -> Vec<T> {
    let h3 = spec.step() / T::lit(3.0);
    (0..=spec.panels)
        .map(|i| {
            let c = if i == 0 || i == spec.panels {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            h3 * T::lit(c)
        })
        .collect()
}

pub fn quadrature<T: Scalar>(f: impl Fn(T) -> T, a: T, b: T, panels: usize) -> Result<T> {
    Ok(QuadratureSpec::new(a, b, panels)?.integrate(f))
}

/// A quadrature value together with the grid points that had to be moved.
#[derive(Debug, Clone, PartialEq)]
pub struct Quad<T> {
    pub value: T,
    pub nudged: Vec<T>,
}

impl<T: Scalar> Quad<T> {
    pub fn is_clean(&self) -> bool {
        self.nudged.is_empty()
    }
}

/// Simpson quadrature that replaces a non-finite sample `f(x)` by
/// `f(x ± 1e-9)` (inwards) and records `x`.
pub fn quadrature_nudged<T: Scalar>(f: impl Fn(T) -> T, a: T, b: T, panels: usize) -> Result<Quad<T>> {
    let spec = QuadratureSpec::new(a, b, panels)?;
    let w = simpson_weights(&spec);
    let nudge = T::lit(NUDGE);
    let mut nudged = Vec::new();
    let mut value = T::zero();
    for (x, w) in spec.nodes().into_iter().zip(w) {
        let mut v = f(x);
        if !v.is_finite() {
            nudged.push(x);
            v = f(if x >= b { x - nudge } else { x + nudge });
        }
        value += w * v;
    }
    Ok(Quad { value, nudged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn exact_on_cubics() {
        let v = quadrature(|x: f64| x * x, 0.0, 1.0, 2).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
        let v = quadrature(|x: f64| x * x * x - 2.0 * x, -1.0, 2.0, 6).unwrap();
        assert!((v - (15.0 / 4.0 - 3.0)).abs() < 1e-14);
    }

    #[test]
    fn sine_and_gaussian() {
        let v = quadrature(f64::sin, 0.0, PI, DEFAULT_PANELS).unwrap();
        assert!((v - 2.0).abs() < 1e-8);
        // sqrt(pi)/2 * erf(1)
        let oracle = 0.5 * PI.sqrt() * 0.8427007929497148693;
        let v = quadrature(|x: f64| (-x * x).exp(), 0.0, 1.0, DEFAULT_PANELS).unwrap();
        assert!((v - oracle).abs() < 1e-12);
        assert!((v - 0.7468241).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(quadrature(f64::sin, 0.0, 1.0, 3).is_err());
        assert!(quadrature(f64::sin, 0.0, 1.0, 0).is_err());
        assert!(quadrature(f64::sin, 1.0, 0.0, 4).is_err());
    }

    #[test]
    fn fourth_order_convergence() {
        let exact = 1.0 - 1.0_f64.cos();
        let mut prev = f64::NAN;
        for panels in [4, 8, 16, 32, 64] {
            let err = (quadrature(f64::sin, 0.0, 1.0, panels).unwrap() - exact).abs();
            if prev.is_finite() && prev > 1e-10 {
                assert!(prev / err >= 8.0, "{panels}: {prev} -> {err}");
            }
            prev = err;
        }
    }

    #[test]
    fn nudges_singular_nodes() {
        let q = quadrature_nudged(|x: f64| if x == 0.0 { f64::NAN } else { 1.0 }, 0.0, 1.0, 10).unwrap();
        assert_eq!(q.nudged, vec![0.0]);
        assert!((q.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn nodes_end_exactly() {
        let s = QuadratureSpec::new(-PI, PI, 2000).unwrap();
        let n = s.nodes();
        assert_eq!(n.len(), 2001);
        assert_eq!(n[0], -PI);
        assert_eq!(n[2000], PI);
    }
}
