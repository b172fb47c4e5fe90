//! Shared random generators and reference checks for the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sfl_core::sfl::{forward, param_gradient};
use sfl_core::{jet_apply, Expr, GateMode, Jet, NodeId, Op, SflConfig, SflParams, Tape, Var};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const UNARY: [Op; 8] = [
    Op::Neg,
    Op::Sin,
    Op::Cos,
    Op::SqrtAbs,
    Op::Exp,
    Op::LogAbs,
    Op::Abs,
    Op::Identity,
];
const BINARY: [Op; 4] = [Op::Add, Op::Sub, Op::Mul, Op::Div];

/// Random expression in `x` over the full operator set with depth `<= depth`.
pub fn random_expr(r: &mut impl Rng, depth: usize) -> Expr<f64> {
    if depth == 0 || r.random_bool(0.25) {
        return if r.random_bool(0.5) {
            Expr::x()
        } else {
            Expr::lit((r.random_range(-2.0..2.0) * 1000.0f64).round() / 1000.0)
        };
    }
    match r.random_range(0..10) {
        0..=4 => {
            let op = BINARY[r.random_range(0..BINARY.len())];
            Expr::binary(op, random_expr(r, depth - 1), random_expr(r, depth - 1))
        }
        5 => Expr::unary(Op::PowInt(r.random_range(-3..=4)), random_expr(r, depth - 1)),
        _ => {
            let op = UNARY[r.random_range(0..UNARY.len())];
            Expr::unary(op, random_expr(r, depth - 1))
        }
    }
}

/// Smallest distance to a kink or guard threshold over every guarded
/// argument in `e` at `x`, and the largest magnitude of any intermediate
/// value. Points with a small first or a large second are ill-conditioned
/// for finite differences and rounding comparisons.
pub fn conditioning(e: &Expr<f64>, x: f64) -> (f64, f64) {
    fn walk(e: &Expr<f64>, x: f64, margin: &mut f64, big: &mut f64) -> f64 {
        let v = match e {
            Expr::Const(c) => *c,
            Expr::Var(_) => x,
            Expr::Unary(op, a) => {
                let av = walk(a, x, margin, big);
                match op {
                    Op::SqrtAbs | Op::LogAbs | Op::Abs | Op::Sign => *margin = margin.min(av.abs()),
                    Op::PowInt(k) if *k < 0 => *margin = margin.min(av.abs()),
                    _ => {}
                }
                op.apply_unary(av)
            }
            Expr::Binary(op, a, b) => {
                let av = walk(a, x, margin, big);
                let bv = walk(b, x, margin, big);
                if *op == Op::Div {
                    *margin = margin.min(bv.abs());
                }
                op.apply_binary(av, bv)
            }
        };
        *big = big.max(v.abs());
        v
    }
    let mut margin = f64::INFINITY;
    let mut big = 0.0f64;
    let v = walk(e, x, &mut margin, &mut big);
    if !v.is_finite() {
        big = f64::INFINITY;
    }
    (margin, big)
}

pub fn well_conditioned(e: &Expr<f64>, x: f64, min_margin: f64, max_mag: f64) -> bool {
    let (m, b) = conditioning(e, x);
    m >= min_margin && b <= max_mag
}

/// Largest `|v|`, `|f'|` or `|f''|` over every node's jet at `x`.
pub fn jet_magnitude(e: &Expr<f64>, x: f64) -> f64 {
    fn walk(e: &Expr<f64>, x: f64, big: &mut f64) -> Jet<f64> {
        let j = match e {
            Expr::Const(c) => Jet::constant(*c),
            Expr::Var(_) => Jet::variable(x),
            Expr::Unary(op, a) => {
                let a = walk(a, x, big);
                jet_apply(*op, a, None)
            }
            Expr::Binary(op, a, b) => {
                let a = walk(a, x, big);
                let b = walk(b, x, big);
                jet_apply(*op, a, Some(b))
            }
        };
        *big = big.max(j.v.abs()).max(j.d1.abs()).max(j.d2.abs());
        j
    }
    let mut big = 0.0f64;
    let j = walk(e, x, &mut big);
    if j.is_finite() {
        big
    } else {
        f64::INFINITY
    }
}

/// Constants of `e` in traversal order.
pub fn constants(e: &Expr<f64>) -> Vec<f64> {
    fn walk(e: &Expr<f64>, out: &mut Vec<f64>) {
        match e {
            Expr::Const(c) => out.push(*c),
            Expr::Var(_) => {}
            Expr::Unary(_, a) => walk(a, out),
            Expr::Binary(_, a, b) => {
                walk(a, out);
                walk(b, out);
            }
        }
    }
    let mut out = Vec::new();
    walk(e, &mut out);
    out
}

/// Record `e` with its constants replaced, in traversal order, by the
/// parameter nodes `params`.
pub fn record_program(tape: &mut Tape<f64>, e: &Expr<f64>, params: &[NodeId], x: NodeId) -> NodeId {
    fn walk(t: &mut Tape<f64>, e: &Expr<f64>, p: &[NodeId], next: &mut usize, x: NodeId) -> NodeId {
        match e {
            Expr::Const(_) => {
                *next += 1;
                p[*next - 1]
            }
            Expr::Var(Var::X) => x,
            Expr::Var(v) => panic!("unexpected {v:?}"),
            Expr::Unary(op, a) => {
                let a = walk(t, a, p, next, x);
                t.unary(*op, a)
            }
            Expr::Binary(op, a, b) => {
                let a = walk(t, a, p, next, x);
                let b = walk(t, b, p, next, x);
                t.binary(*op, a, b)
            }
        }
    }
    let mut next = 0;
    walk(tape, e, params, &mut next, x)
}

pub fn rel_err(got: f64, want: f64, floor: f64) -> f64 {
    let d = (got - want).abs();
    if d <= floor {
        0.0
    } else {
        d / got.abs().max(want.abs())
    }
}

/// Fourth-order central difference of `f` at `t` with step `h`.
pub fn central_diff(f: impl Fn(f64) -> f64, t: f64, h: f64) -> f64 {
    (8.0 * (f(t + h) - f(t - h)) - (f(t + 2.0 * h) - f(t - 2.0 * h))) / (12.0 * h)
}

/// Central difference with the step picked from a decade ladder where two
/// successive estimates agree best, so steep spots (a guarded sqrt close to
/// zero) and flat ones both get a usable step.
pub fn stable_diff(f: impl Fn(f64) -> f64, t: f64) -> f64 {
    let scale = t.abs().max(1.0);
    let est: Vec<f64> = [1e-3, 1e-4, 1e-5, 1e-6, 1e-7]
        .iter()
        .map(|&h| central_diff(&f, t, h * scale))
        .collect();
    let k = (0..est.len() - 1)
        .min_by(|&a, &b| {
            let da = (est[a] - est[a + 1]).abs();
            let db = (est[b] - est[b + 1]).abs();
            da.total_cmp(&db)
        })
        .unwrap();
    est[k + 1]
}

/// Outcome of the taped-gradient check on one random program.
pub struct GradCase {
    pub max_rel: f64,
    pub checked: usize,
}

/// Compare `tape_backward` with finite differences of `seed . (f, f', f'')`
/// for every parameter of a random program. `None` when the draw is
/// ill-conditioned.
pub fn gradient_case(r: &mut impl Rng) -> Option<GradCase> {
    let e = random_expr(r, 4);
    let theta = constants(&e);
    if theta.is_empty() {
        return None;
    }
    let x = r.random_range(-2.0..2.0);
    if !well_conditioned(&e, x, 0.05, 1e3) {
        return None;
    }
    let seed = [
        r.random_range(-1.0..1.0),
        r.random_range(-1.0..1.0),
        r.random_range(-1.0..1.0),
    ];
    let loss = |th: &[f64]| {
        let (j, _) = sfl_core::tape_forward(|t, p, xs| record_program(t, &e, p, xs), th, x);
        seed[0] * j.v + seed[1] * j.d1 + seed[2] * j.d2
    };
    let (j, mut tape) = sfl_core::tape_forward(|t, p, xs| record_program(t, &e, p, xs), &theta, x);
    if !j.is_finite() || j.v.abs().max(j.d1.abs()).max(j.d2.abs()) > 1e4 {
        return None;
    }
    let g = sfl_core::tape_backward(&mut tape, seed);
    if !g.finite {
        return None;
    }
    let mut max_rel = 0.0f64;
    for i in 0..theta.len() {
        let fd = stable_diff(
            |t| {
                let mut th = theta.clone();
                th[i] = t;
                loss(&th)
            },
            theta[i],
        );
        max_rel = max_rel.max(rel_err(g.grads[i], fd, 1e-10));
    }
    Some(GradCase {
        max_rel,
        checked: theta.len(),
    })
}

/// Jet of `e` at `x` against direct evaluation of its symbolic derivatives.
pub fn jet_case(e: &Expr<f64>, x: f64) -> f64 {
    let mut tape = Tape::new();
    let xs = tape.variable(x);
    let out = tape.record_expr(e, &|_| xs);
    let j = tape.value(out);
    let d1 = e.differentiate();
    let d2 = d1.differentiate();
    let floor = 1e-12 * (1.0 + jet_magnitude(e, x));
    rel_err(j.v, e.eval(x), floor)
        .max(rel_err(j.d1, d1.eval(x), floor))
        .max(rel_err(j.d2, d2.eval(x), floor))
}

/// Random tree parameters whose every gate has a winner ahead by `margin`.
pub fn decisive_params(cfg: &SflConfig, r: &mut impl Rng, margin: f64) -> SflParams<f64> {
    let mut p = SflParams::init(cfg, r);
    for n in 1..=cfg.depth {
        for i in 0..cfg.nodes_in_layer(n) {
            let k = cfg.k();
            let win = r.random_range(0..k);
            let om = p.omega_mut(n, i);
            for (j, w) in om.iter_mut().enumerate() {
                *w = if j == win {
                    margin + r.random_range(0.0..1.0)
                } else {
                    r.random_range(-1.0..0.0)
                };
            }
        }
    }
    p
}

/// Largest relative gap between `param_gradient` and finite differences of
/// the forward pass over every stored parameter.
pub fn tree_gradient_gap(p: &SflParams<f64>, cfg: &SflConfig, x: f64, mode: GateMode, seed: [f64; 3]) -> f64 {
    let g = param_gradient(p, cfg, x, mode, seed);
    let f = |q: &SflParams<f64>| {
        let j = forward(q, cfg, x, mode);
        seed[0] * j.v + seed[1] * j.d1 + seed[2] * j.d2
    };
    let mut worst = 0.0f64;
    for i in 0..p.len() {
        let base = p.as_slice()[i];
        let fd = stable_diff(
            |t| {
                let mut q = p.clone();
                q.as_mut_slice()[i] = t;
                f(&q)
            },
            base,
        );
        worst = worst.max(rel_err(g.grads[i], fd, 1e-7));
    }
    worst
}

pub fn configs() -> Vec<SflConfig> {
    vec![
        SflConfig::new(1),
        SflConfig::new(2),
        SflConfig::new(2).with_division(),
        SflConfig::new(3),
        SflConfig::new(3).with_division().with_delta(true),
    ]
}

/// `cfg` one layer deeper with the original tree as the left subtree of an
/// identity-gated root, and an all-zero right subtree.
pub fn pad(p: &SflParams<f64>, cfg: &SflConfig) -> (SflParams<f64>, SflConfig) {
    let mut big = cfg.clone();
    big.depth += 1;
    let mut q = SflParams::zeros(&big);
    for i in 0..cfg.num_leaves() {
        let (w, b) = p.leaf(i);
        q.set_leaf(i, w, b);
    }
    for n in 1..=cfg.depth {
        for i in 0..cfg.nodes_in_layer(n) {
            q.omega_mut(n, i).copy_from_slice(p.omega(n, i));
            let (w, b) = p.affine(n, i);
            q.set_affine(n, i, w, b);
        }
    }
    let id = big.unary.iter().position(|&o| o == Op::Identity).expect("identity op");
    let top = q.omega_mut(big.depth, 0);
    top.fill(0.0);
    top[id] = 50.0;
    q.set_affine(big.depth, 0, 1.0, 0.0);
    (q, big)
}
