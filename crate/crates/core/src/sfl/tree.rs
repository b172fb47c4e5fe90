use super::gate::argmax;
use super::{gate_jacobian, Gate, GateMode, SflConfig, SflParams};
use crate::autodiff::{jet_apply, Gradient, Jet, NodeId, Tape};
use crate::expr::{Expr, Op};
use crate::scalar::Scalar;

/// All candidate operator outputs at a node: `u_j(a + delta*b)` for the
/// unary list, then `v_j(a, b)` for the binary list.
pub fn operate<T: Scalar>(a: Jet<T>, b: Jet<T>, cfg: &SflConfig) -> Vec<Jet<T>> {
    let arg = if cfg.delta { a + b } else { a };
    let unary = cfg.unary.iter().map(|&op| jet_apply(op, arg, None));
    let binary = cfg.binary.iter().map(|&op| jet_apply(op, a, Some(b)));
    unary.chain(binary).collect()
}

/// Gates of every interior node, in storage order.
pub fn gates_for<T: Scalar>(params: &SflParams<T>, cfg: &SflConfig, mode: GateMode) -> Vec<Gate<T>> {
    let sigma = T::lit(cfg.sigma);
    (1..=cfg.depth)
        .flat_map(|n| (0..cfg.nodes_in_layer(n)).map(move |i| (n, i)))
        .map(|(n, i)| gate_jacobian(params.omega(n, i), mode, sigma))
        .collect()
}

/// Root value `h_0^(m)` as a jet in `x`.
pub fn forward<T: Scalar>(params: &SflParams<T>, cfg: &SflConfig, x: T, mode: GateMode) -> Jet<T> {
    debug_assert!(params.fits(cfg));
    let gates = gates_for(params, cfg, mode);
    forward_with_gates(params, cfg, &gates, x)
}

pub(crate) fn forward_with_gates<T: Scalar>(params: &SflParams<T>, cfg: &SflConfig, gates: &[Gate<T>], x: T) -> Jet<T> {
    let mut layer: Vec<Jet<T>> = (0..cfg.num_leaves())
        .map(|i| {
            let (w, b) = params.leaf(i);
            Jet::new(w * x + b, w, T::zero())
        })
        .collect();
    let mut g = gates.iter();
    for n in 1..=cfg.depth {
        layer = (0..cfg.nodes_in_layer(n))
            .map(|i| {
                let gate = g.next().expect("one gate per node");
                let outs = operate(layer[2 * i], layer[2 * i + 1], cfg);
                let mixed = gate
                    .weights
                    .iter()
                    .zip(outs)
                    .filter(|(gw, _)| **gw != T::zero())
                    .fold(Jet::default(), |acc, (&gw, o)| acc + o.scale(gw));
                let (w, b) = params.affine(n, i);
                mixed.scale(w) + Jet::constant(b)
            })
            .collect();
    }
    layer[0]
}

/// Record the tree on `tape` and return the root node.
///
/// Parameter slots are registered in storage order, except that the
/// `omega` slots hold the gate *weights*; use [`pull_back_gates`] to turn
/// their gradients into `omega` gradients.
pub fn record_forward<T: Scalar>(
    tape: &mut Tape<T>,
    params: &SflParams<T>,
    cfg: &SflConfig,
    gates: &[Gate<T>],
    x: T,
) -> NodeId {
    let xs = tape.variable(x);
    let mut layer: Vec<NodeId> = (0..cfg.num_leaves())
        .map(|i| {
            let (w, b) = params.leaf(i);
            let w = tape.param(w);
            let b = tape.param(b);
            let wx = tape.mul(w, xs);
            tape.add(wx, b)
        })
        .collect();
    let mut g = gates.iter();
    let mut outs = Vec::with_capacity(cfg.k());
    for n in 1..=cfg.depth {
        let mut next = Vec::with_capacity(cfg.nodes_in_layer(n));
        for i in 0..cfg.nodes_in_layer(n) {
            let gate = g.next().expect("one gate per node");
            let slots: Vec<NodeId> = gate.weights.iter().map(|&gw| tape.param(gw)).collect();
            let (w, b) = params.affine(n, i);
            let w = tape.param(w);
            let b = tape.param(b);

            let (left, right) = (layer[2 * i], layer[2 * i + 1]);
            let arg = if cfg.delta { tape.add(left, right) } else { left };
            outs.clear();
            for j in 0..cfg.k() {
                if gate.weights[j] == T::zero() {
                    continue;
                }
                let op = cfg.op(j);
                let o = if op.is_binary() {
                    tape.binary(op, left, right)
                } else {
                    tape.unary(op, arg)
                };
                outs.push(tape.mul(slots[j], o));
            }
            let mut mixed = outs[0];
            for &o in &outs[1..] {
                mixed = tape.add(mixed, o);
            }
            let scaled = tape.mul(w, mixed);
            next.push(tape.add(scaled, b));
        }
        layer = next;
    }
    layer[0]
}

/// Replace the gate-weight gradients stored at the `omega` positions of
/// `grads` by `omega` gradients.
pub fn pull_back_gates<T: Scalar>(grads: &mut [T], params: &SflParams<T>, cfg: &SflConfig, gates: &[Gate<T>]) {
    let k = cfg.k();
    let mut g = gates.iter();
    let mut dg = vec![T::zero(); k];
    for n in 1..=cfg.depth {
        for i in 0..cfg.nodes_in_layer(n) {
            let gate = g.next().expect("one gate per node");
            let start = params.node_range(n, i).start;
            dg.copy_from_slice(&grads[start..start + k]);
            for j in 0..k {
                grads[start + j] = (0..k).map(|r| dg[r] * gate.jacobian[r * k + j]).sum();
            }
        }
    }
}

/// Taped forward pass; the tape's parameter slots follow [`record_forward`].
pub fn forward_taped<T: Scalar>(params: &SflParams<T>, cfg: &SflConfig, x: T, mode: GateMode) -> (Jet<T>, Tape<T>) {
    let gates = gates_for(params, cfg, mode);
    let mut tape = Tape::new();
    let root = record_forward(&mut tape, params, cfg, &gates, x);
    tape.set_output(root);
    (tape.value(root), tape)
}

/// Gradient of `seed . (f, f', f'')(x)` with respect to every stored
/// parameter (storage order).
pub fn param_gradient<T: Scalar>(
    params: &SflParams<T>,
    cfg: &SflConfig,
    x: T,
    mode: GateMode,
    seed: [T; 3],
) -> Gradient<T> {
    let gates = gates_for(params, cfg, mode);
    let mut tape = Tape::new();
    let root = record_forward(&mut tape, params, cfg, &gates, x);
    let mut g = tape.backward(root, seed);
    pull_back_gates(&mut g.grads, params, cfg, &gates);
    g
}

/// Read the discrete formula off the weights: each node takes the operator
/// with the largest `omega` entry (lowest index on ties) and its affine map.
pub fn extract<T: Scalar>(params: &SflParams<T>, cfg: &SflConfig, tol: T) -> Expr<T> {
    let affine = |w: T, inner: Expr<T>, b: T| Expr::Const(w) * inner + Expr::Const(b);
    let mut layer: Vec<Expr<T>> = (0..cfg.num_leaves())
        .map(|i| {
            let (w, b) = params.leaf(i);
            affine(w, Expr::x(), b)
        })
        .collect();
    for n in 1..=cfg.depth {
        let mut prev = layer.into_iter();
        layer = (0..cfg.nodes_in_layer(n))
            .map(|i| {
                let left = prev.next().unwrap();
                let right = prev.next().unwrap();
                let op = cfg.op(argmax(params.omega(n, i)));
                let inner = if op.is_binary() {
                    Expr::binary(op, left, right)
                } else if cfg.delta {
                    Expr::unary(op, Expr::binary(Op::Add, left, right))
                } else {
                    Expr::unary(op, left)
                };
                let (w, b) = params.affine(n, i);
                affine(w, inner, b)
            })
            .collect();
    }
    layer.pop().unwrap().simplify(tol)
}
