use super::Jet;
use crate::expr::{recip_taylor, unary_taylor, Expr, Op, Var};
use crate::scalar::Scalar;

/// Handle to a recorded node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Debug, Clone)]
enum Node<T> {
    Leaf,
    /// First three derivatives of the applied scalar function at the parent value.
    Unary {
        a: usize,
        du: [T; 3],
    },
    Add {
        a: usize,
        b: usize,
    },
    Sub {
        a: usize,
        b: usize,
    },
    Mul {
        a: usize,
        b: usize,
    },
    /// Lifts one jet component into a constant jet `(c, 0, 0)`.
    Component {
        a: usize,
        order: usize,
    },
}

/// Recorded jet computation.
///
/// Nodes are appended in evaluation order, so every parent index precedes
/// its consumers and the backward sweep is a single reverse pass.
#[derive(Debug, Clone, Default)]
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
    values: Vec<Jet<T>>,
    params: Vec<usize>,
    output: Option<usize>,
    adjoints: Vec<[T; 3]>,
}

/// Parameter gradient from one backward sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient<T> {
    pub grads: Vec<T>,
    /// False when a non-finite adjoint reached a parameter; `grads` is then
    /// all zero.
    pub finite: bool,
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            values: Vec::new(),
            params: Vec::new(),
            output: None,
            adjoints: Vec::new(),
        }
    }

    /// Forget all nodes and parameters, keeping allocations.
    pub fn clear(&mut self) {
        self.nodes.clear();
        self.values.clear();
        self.params.clear();
        self.output = None;
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    fn push(&mut self, node: Node<T>, value: Jet<T>) -> NodeId {
        self.nodes.push(node);
        self.values.push(value);
        NodeId(self.nodes.len() - 1)
    }

    pub fn value(&self, id: NodeId) -> Jet<T> {
        self.values[id.0]
    }

    /// Register the next parameter slot with value `theta`.
    pub fn param(&mut self, theta: T) -> NodeId {
        let id = self.push(Node::Leaf, Jet::constant(theta));
        self.params.push(id.0);
        id
    }

    pub fn constant(&mut self, c: T) -> NodeId {
        self.push(Node::Leaf, Jet::constant(c))
    }

    /// The independent variable `(x, 1, 0)`.
    pub fn variable(&mut self, x: T) -> NodeId {
        self.push(Node::Leaf, Jet::variable(x))
    }

    pub fn unary(&mut self, op: Op, a: NodeId) -> NodeId {
        let t = unary_taylor(op, self.values[a.0].v);
        self.chain(a, t)
    }

    pub fn recip(&mut self, a: NodeId) -> NodeId {
        let t = recip_taylor(self.values[a.0].v);
        self.chain(a, t)
    }

    fn chain(&mut self, a: NodeId, t: [T; 4]) -> NodeId {
        let value = self.values[a.0].chain(&t);
        self.push(
            Node::Unary {
                a: a.0,
                du: [t[1], t[2], t[3]],
            },
            value,
        )
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let value = self.values[a.0] + self.values[b.0];
        self.push(Node::Add { a: a.0, b: b.0 }, value)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let value = self.values[a.0] - self.values[b.0];
        self.push(Node::Sub { a: a.0, b: b.0 }, value)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let value = self.values[a.0] * self.values[b.0];
        self.push(Node::Mul { a: a.0, b: b.0 }, value)
    }

    /// Guarded division `a * recip(b)`.
    pub fn div(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let r = self.recip(b);
        self.mul(a, r)
    }

    pub fn binary(&mut self, op: Op, a: NodeId, b: NodeId) -> NodeId {
        match op {
            Op::Add => self.add(a, b),
            Op::Sub => self.sub(a, b),
            Op::Mul => self.mul(a, b),
            Op::Div => self.div(a, b),
            _ => panic!("{} is not binary", op.name()),
        }
    }

    /// Jet component `order` of `a` as a constant jet, so that scalar
    /// functions of `f`, `f'`, `f''` can be recorded.
    pub fn component(&mut self, a: NodeId, order: usize) -> NodeId {
        let c = self.values[a.0].order(order);
        self.push(Node::Component { a: a.0, order }, Jet::constant(c))
    }

    /// Record `e` with its variables bound to existing nodes.
    pub fn record_expr(&mut self, e: &Expr<T>, bind: &impl Fn(Var) -> NodeId) -> NodeId {
        match e {
            Expr::Const(c) => self.constant(*c),
            Expr::Var(v) => bind(*v),
            Expr::Unary(op, a) => {
                let a = self.record_expr(a, bind);
                self.unary(*op, a)
            }
            Expr::Binary(op, a, b) => {
                let a = self.record_expr(a, bind);
                let b = self.record_expr(b, bind);
                self.binary(*op, a, b)
            }
        }
    }

    /// Node used by [`tape_backward`]; defaults to the last recorded node.
    pub fn set_output(&mut self, id: NodeId) {
        self.output = Some(id.0);
    }

    pub fn output(&self) -> NodeId {
        NodeId(self.output.unwrap_or(self.nodes.len() - 1))
    }

    fn sweep(&mut self, output: NodeId, seed: [T; 3]) {
        let zero = [T::zero(); 3];
        self.adjoints.clear();
        self.adjoints.resize(self.nodes.len(), zero);
        self.adjoints[output.0] = seed;
        let two = T::lit(2.0);
        for i in (0..=output.0).rev() {
            let g = self.adjoints[i];
            if g == zero {
                continue;
            }
            match self.nodes[i] {
                Node::Leaf => {}
                Node::Unary { a, du: [u1, u2, u3] } => {
                    let p = self.values[a];
                    let adj = &mut self.adjoints[a];
                    adj[0] += g[0] * u1 + g[1] * u2 * p.d1 + g[2] * (u3 * p.d1 * p.d1 + u2 * p.d2);
                    adj[1] += g[1] * u1 + g[2] * two * u2 * p.d1;
                    adj[2] += g[2] * u1;
                }
                Node::Add { a, b } => {
                    for k in 0..3 {
                        self.adjoints[a][k] += g[k];
                        self.adjoints[b][k] += g[k];
                    }
                }
                Node::Sub { a, b } => {
                    for k in 0..3 {
                        self.adjoints[a][k] += g[k];
                        self.adjoints[b][k] -= g[k];
                    }
                }
                Node::Mul { a, b } => {
                    let (ja, jb) = (self.values[a], self.values[b]);
                    let pull = |other: Jet<T>| {
                        [
                            g[0] * other.v + g[1] * other.d1 + g[2] * other.d2,
                            g[1] * other.v + g[2] * two * other.d1,
                            g[2] * other.v,
                        ]
                    };
                    let (ga, gb) = (pull(jb), pull(ja));
                    for k in 0..3 {
                        self.adjoints[a][k] += ga[k];
                        self.adjoints[b][k] += gb[k];
                    }
                }
                Node::Component { a, order } => self.adjoints[a][order] += g[0],
            }
        }
    }

    /// Pull `seed = (dL/dv, dL/dd1, dL/dd2)` at `output` back to every
    /// registered parameter.
    pub fn backward(&mut self, output: NodeId, seed: [T; 3]) -> Gradient<T> {
        let mut grads = vec![T::zero(); self.params.len()];
        let finite = self.accumulate(output, seed, &mut grads);
        Gradient { grads, finite }
    }

    /// Add the parameter gradient into `into` (indexed by parameter slot).
    /// Returns false, leaving `into` untouched, when any entry is non-finite.
    pub fn accumulate(&mut self, output: NodeId, seed: [T; 3], into: &mut [T]) -> bool {
        assert!(into.len() >= self.params.len());
        self.sweep(output, seed);
        let finite = self.params.iter().all(|&node| self.adjoints[node][0].is_finite());
        if finite {
            for (slot, &node) in self.params.iter().enumerate() {
                into[slot] += self.adjoints[node][0];
            }
        }
        finite
    }
}

/// Run `program` on a fresh tape with one parameter node per entry of
/// `params` and the variable at `x`; returns the output jet and the tape.
pub fn tape_forward<T, F>(program: F, params: &[T], x: T) -> (Jet<T>, Tape<T>)
where
    T: Scalar,
    F: FnOnce(&mut Tape<T>, &[NodeId], NodeId) -> NodeId,
{
    let mut tape = Tape::new();
    let ids: Vec<NodeId> = params.iter().map(|&p| tape.param(p)).collect();
    let xs = tape.variable(x);
    let out = program(&mut tape, &ids, xs);
    tape.set_output(out);
    (tape.value(out), tape)
}

/// Gradient of any scalar `L` whose partials with respect to the output jet
/// are `seed`.
pub fn tape_backward<T: Scalar>(tape: &mut Tape<T>, seed: [T; 3]) -> Gradient<T> {
    let out = tape.output();
    tape.backward(out, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn affine(t: &mut Tape<f64>, p: &[NodeId], x: NodeId) -> NodeId {
        let wx = t.mul(p[0], x);
        t.add(wx, p[1])
    }

    #[test]
    fn leaf_rule_forward() {
        let (j, _) = tape_forward(affine, &[1.0, 0.0], 2.0);
        assert_eq!(j, Jet::new(2.0, 1.0, 0.0));
    }

    #[test]
    fn forward_matches_direct_jets() {
        let (j, _) = tape_forward(|t, _, x| t.unary(Op::Sin, x), &[], 0.0);
        assert_eq!(j, Jet::new(0.0, 1.0, 0.0));
        let (j, _) = tape_forward(|t, _, x| t.mul(x, x), &[], 3.0);
        assert_eq!(j, Jet::new(9.0, 6.0, 2.0));
    }

    #[test]
    fn gradient_of_each_component() {
        let wx = |t: &mut Tape<f64>, p: &[NodeId], x: NodeId| t.mul(p[0], x);
        let (_, mut tape) = tape_forward(wx, &[0.7], 5.0);
        assert_eq!(tape_backward(&mut tape, [1.0, 0.0, 0.0]).grads, vec![5.0]);
        assert_eq!(tape_backward(&mut tape, [0.0, 1.0, 0.0]).grads, vec![1.0]);
        assert_eq!(tape_backward(&mut tape, [0.0, 0.0, 1.0]).grads, vec![0.0]);
    }

    #[test]
    fn sin_of_scaled_variable() {
        let prog = |t: &mut Tape<f64>, p: &[NodeId], x: NodeId| {
            let wx = t.mul(p[0], x);
            t.unary(Op::Sin, wx)
        };
        let (_, mut tape) = tape_forward(prog, &[0.5], 2.0);
        let g = tape_backward(&mut tape, [1.0, 0.0, 0.0]);
        // central differences, h = 1e-6
        let f = |w: f64| (w * 2.0).sin();
        let fd = (f(0.5 + 1e-6) - f(0.5 - 1e-6)) / 2e-6;
        assert!((g.grads[0] - fd).abs() < 1e-8);
        assert!((g.grads[0] - 1.0806046117362795).abs() < 1e-9);
    }

    #[test]
    fn non_finite_gradient_is_zeroed() {
        let prog = |t: &mut Tape<f64>, p: &[NodeId], _x: NodeId| t.unary(Op::Exp, p[0]);
        let (_, mut tape) = tape_forward(prog, &[1000.0], 0.0);
        let g = tape_backward(&mut tape, [1.0, 0.0, 0.0]);
        assert!(!g.finite);
        assert_eq!(g.grads, vec![0.0]);
    }

    #[test]
    fn component_feeds_scalar_computations() {
        // L = (f')^2 with f = w x^2 at x = 3 => f' = 6w, dL/dw = 2 * 6w * 6
        let prog = |t: &mut Tape<f64>, p: &[NodeId], x: NodeId| {
            let xx = t.mul(x, x);
            let f = t.mul(p[0], xx);
            let d1 = t.component(f, 1);
            t.mul(d1, d1)
        };
        let (j, mut tape) = tape_forward(prog, &[0.5], 3.0);
        assert_eq!(j.v, 9.0);
        let g = tape_backward(&mut tape, [1.0, 0.0, 0.0]);
        assert!((g.grads[0] - 36.0).abs() < 1e-12);
    }
}
