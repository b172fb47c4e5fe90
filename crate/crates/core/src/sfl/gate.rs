use super::GateMode;
use crate::scalar::Scalar;

/// Gate weights of one node together with `d gate_i / d omega_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate<T> {
    pub weights: Vec<T>,
    /// Row-major `k x k`.
    pub jacobian: Vec<T>,
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax<T: Scalar>(omega: &[T]) -> usize {
    let mut best = 0;
    for (i, &w) in omega.iter().enumerate().skip(1) {
        if w > omega[best] {
            best = i;
        }
    }
    best
}

/// `exp(omega_i) / sum_j exp(omega_j)`, shifted by the maximum.
pub fn softmax<T: Scalar>(omega: &[T]) -> Vec<T> {
    let top = omega[argmax(omega)];
    let e: Vec<T> = omega.iter().map(|&w| (w - top).exp()).collect();
    let total: T = e.iter().copied().sum();
    e.into_iter().map(|v| v / total).collect()
}

/// `H(s / max s)` with `H(t) = exp(-(1 - t)^2 / sigma^2)`.
///
/// `s_i / max s = exp(omega_i - max omega)`, so the ratio is formed without
/// normalizing. The arg-max entry is exactly 1; tied maxima are all 1.
pub fn discrete_softmax<T: Scalar>(omega: &[T], sigma: T) -> Vec<T> {
    let top = omega[argmax(omega)];
    let inv = (sigma * sigma).recip();
    omega
        .iter()
        .map(|&w| {
            let gap = T::one() - (w - top).exp();
            (-gap * gap * inv).exp()
        })
        .collect()
}

/// Gate weights and their Jacobian with respect to `omega`.
pub fn gate_jacobian<T: Scalar>(omega: &[T], mode: GateMode, sigma: T) -> Gate<T> {
    let k = omega.len();
    let mut jacobian = vec![T::zero(); k * k];
    let weights = match mode {
        GateMode::Soft => {
            let s = softmax(omega);
            for i in 0..k {
                for j in 0..k {
                    let kron = if i == j { T::one() } else { T::zero() };
                    jacobian[i * k + j] = s[i] * (kron - s[j]);
                }
            }
            s
        }
        GateMode::Discrete => {
            let top_idx = argmax(omega);
            let top = omega[top_idx];
            let inv = (sigma * sigma).recip();
            let two = T::lit(2.0);
            let mut h = Vec::with_capacity(k);
            for i in 0..k {
                let t = (omega[i] - top).exp();
                let gap = T::one() - t;
                let hi = (-gap * gap * inv).exp();
                // dH/dt * dt/domega_j, with dt_i/domega_j = t_i (δ_ij - δ_{top,j})
                let dh_dt = hi * two * gap * inv;
                if i != top_idx {
                    jacobian[i * k + i] += dh_dt * t;
                    jacobian[i * k + top_idx] -= dh_dt * t;
                }
                h.push(hi);
            }
            h
        }
    };
    Gate { weights, jacobian }
}
