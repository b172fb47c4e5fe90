use super::{Expr, Op};
use crate::scalar::Scalar;

const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const PREFIX: u8 = 3;
const POWER: u8 = 4;
const ATOM: u8 = 5;

fn level<T: Scalar>(e: &Expr<T>) -> u8 {
    match e {
        Expr::Const(c) if c.is_sign_negative() => PREFIX,
        Expr::Const(_) | Expr::Var(_) => ATOM,
        Expr::Unary(Op::Neg, _) => PREFIX,
        Expr::Unary(Op::PowInt(_), _) => POWER,
        Expr::Unary(..) => ATOM,
        Expr::Binary(Op::Add | Op::Sub, ..) => SUM,
        Expr::Binary(..) => PRODUCT,
    }
}

pub(super) fn render<T: Scalar>(e: &Expr<T>, precision: Option<usize>) -> String {
    let mut out = String::new();
    write(e, precision, &mut out);
    out
}

fn write<T: Scalar>(e: &Expr<T>, precision: Option<usize>, out: &mut String) {
    let child = |c: &Expr<T>, parens: bool, out: &mut String| {
        if parens {
            out.push('(');
        }
        write(c, precision, out);
        if parens {
            out.push(')');
        }
    };
    match e {
        Expr::Const(c) => match precision {
            Some(p) => out.push_str(&format!("{:.*}", p, c)),
            None => out.push_str(&format!("{c}")),
        },
        Expr::Var(v) => out.push_str(v.name()),
        Expr::Unary(Op::Neg, a) => {
            out.push('-');
            child(a, level(a.as_ref()) < PREFIX, out);
        }
        Expr::Unary(Op::PowInt(k), a) => {
            child(a, level(a.as_ref()) < ATOM, out);
            out.push('^');
            out.push_str(&k.to_string());
        }
        Expr::Unary(op, a) => {
            out.push_str(op.name());
            child(a, true, out);
        }
        Expr::Binary(op, a, b) => {
            let own = level(e);
            child(a, level(a.as_ref()) < own, out);
            out.push_str(match op {
                Op::Add => " + ",
                Op::Sub => " - ",
                Op::Mul => "*",
                Op::Div => "/",
                _ => unreachable!(),
            });
            child(b, level(b.as_ref()) <= own, out);
        }
    }
}
