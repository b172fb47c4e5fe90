//! Recursive-descent parser for expression text.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' integer)?
//! atom  := number | 'x' | 'y' | 'y1' | 'y2' | 'pi' | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` binds tighter than unary minus, so `-x^2` is `-(x^2)`.

use super::{Expr, Op, Var, MAX_POW};
use crate::error::ParseError;
use crate::scalar::Scalar;

pub fn parse<T: Scalar>(text: &str) -> Result<Expr<T>, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    p.skip_ws();
    if p.at_end() {
        return Err(ParseError::Empty);
    }
    let e = p.expr()?;
    p.skip_ws();
    if !p.at_end() {
        return Err(p.syntax(format!("unexpected `{}`", p.peek().unwrap() as char)));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    /// Consume `c` (after whitespace) if it is next.
    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn syntax(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.syntax(format!("expected `{}`", c as char)))
        }
    }

    fn expr<T: Scalar>(&mut self) -> Result<Expr<T>, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::binary(Op::Add, lhs, self.term()?);
            } else if self.eat(b'-') {
                lhs = Expr::binary(Op::Sub, lhs, self.term()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term<T: Scalar>(&mut self) -> Result<Expr<T>, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::binary(Op::Mul, lhs, self.unary()?);
            } else if self.eat(b'/') {
                lhs = Expr::binary(Op::Div, lhs, self.unary()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary<T: Scalar>(&mut self) -> Result<Expr<T>, ParseError> {
        if self.eat(b'-') {
            Ok(Expr::unary(Op::Neg, self.unary()?))
        } else {
            self.power()
        }
    }

    fn power<T: Scalar>(&mut self) -> Result<Expr<T>, ParseError> {
        let base = self.atom()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        self.skip_ws();
        let start = self.pos;
        let k = self.exponent().ok_or(ParseError::BadExponent { offset: start })?;
        Ok(Expr::unary(Op::PowInt(k), base))
    }

    /// `-?digits` or `(-?digits)`; anything else (fractions, symbols) fails.
    fn exponent(&mut self) -> Option<i32> {
        let paren = self.eat(b'(');
        let neg = self.eat(b'-');
        self.skip_ws();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos || matches!(self.peek(), Some(b'.' | b'e' | b'E')) {
            return None;
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).ok()?;
        let mut k: i32 = digits.parse().ok()?;
        if neg {
            k = -k;
        }
        if paren && !self.eat(b')') {
            return None;
        }
        (k.abs() <= MAX_POW).then_some(k)
    }

    fn atom<T: Scalar>(&mut self) -> Result<Expr<T>, ParseError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            None => Err(self.syntax("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                match name {
                    "x" => Ok(Expr::Var(Var::X)),
                    "y" => Ok(Expr::Var(Var::Y)),
                    "y1" => Ok(Expr::Var(Var::Y1)),
                    "y2" => Ok(Expr::Var(Var::Y2)),
                    "pi" => Ok(Expr::Const(T::PI())),
                    _ => {
                        let op = function(name).ok_or_else(|| ParseError::UnknownIdentifier {
                            offset: start,
                            name: name.to_string(),
                        })?;
                        self.expect(b'(')?;
                        let arg = self.expr()?;
                        self.expect(b')')?;
                        Ok(Expr::unary(op, arg))
                    }
                }
            }
            Some(c) => Err(self.syntax(format!("unexpected `{}`", c as char))),
        }
    }

    fn number<T: Scalar>(&mut self) -> Result<Expr<T>, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while matches!(p.peek(), Some(c) if c.is_ascii_digit()) {
                p.pos += 1;
            }
        };
        digits(self);
        if self.peek() == Some(b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            let exp_start = self.pos;
            digits(self);
            if exp_start == self.pos {
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
            offset: start,
            message: format!("malformed number `{text}`"),
        })?;
        let value = T::lit(value);
        if !value.is_finite() {
            return Err(ParseError::Syntax {
                offset: start,
                message: format!("number `{text}` out of range"),
            });
        }
        Ok(Expr::Const(value))
    }
}

fn function(name: &str) -> Option<Op> {
    match name {
        "sin" => Some(Op::Sin),
        "cos" => Some(Op::Cos),
        "sqrt" => Some(Op::SqrtAbs),
        "exp" => Some(Op::Exp),
        "log" => Some(Op::LogAbs),
        "abs" => Some(Op::Abs),
        "sign" => Some(Op::Sign),
        "id" => Some(Op::Identity),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr<f64> {
        parse(s).unwrap()
    }

    #[test]
    fn single_function() {
        assert_eq!(p("sin(x)"), Expr::unary(Op::Sin, Expr::x()));
    }

    #[test]
    fn cubic_shape() {
        let want = Expr::x().powi(3) + Expr::x() + Expr::lit(1.0);
        assert_eq!(p("x^3 + x + 1"), want);
    }

    #[test]
    fn lane_emden_residual_tokens() {
        let e = p("y2 + (2/x)*y1 + y^0");
        for v in [Var::X, Var::Y, Var::Y1, Var::Y2] {
            assert!(e.references(v));
        }
        let env = crate::expr::Bindings {
            x: 2.0,
            y: 0.5,
            y1: -1.0,
            y2: 3.0,
        };
        assert_eq!(e.eval_with(&env), 3.0 - 1.0 + 1.0);
    }

    #[test]
    fn precedence() {
        assert_eq!(p("2+3*4").eval(0.0), 14.0);
        assert_eq!(p("-x^2").eval(2.0), -4.0);
        assert_eq!(p("2^-1").eval(0.0), 0.5);
        assert_eq!(p("8/2/2").eval(0.0), 2.0);
        assert_eq!(p("1-2-3").eval(0.0), -4.0);
        assert_eq!(p("x^(-2)").eval(2.0), 0.25);
    }

    #[test]
    fn numbers() {
        assert_eq!(p("1.5e-3").as_const(), Some(1.5e-3));
        assert_eq!(p(".25").as_const(), Some(0.25));
        assert!((p("pi").eval(0.0) - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn sqrt_and_log_take_absolute_value() {
        assert!((p("sqrt(x)").eval(-4.0) - 2.0).abs() < 1e-9);
        assert!((p("log(x)").eval(-1.0)).abs() < 1e-8);
    }

    #[test]
    fn errors_carry_offsets() {
        assert_eq!(
            parse::<f64>("x + foo(x)"),
            Err(ParseError::UnknownIdentifier {
                offset: 4,
                name: "foo".into()
            })
        );
        assert_eq!(parse::<f64>("x^0.5"), Err(ParseError::BadExponent { offset: 2 }));
        assert_eq!(parse::<f64>("x^y"), Err(ParseError::BadExponent { offset: 2 }));
        assert_eq!(parse::<f64>("x^17"), Err(ParseError::BadExponent { offset: 2 }));
        assert!(matches!(parse::<f64>("(x"), Err(ParseError::Syntax { offset: 2, .. })));
        assert!(matches!(parse::<f64>("x )"), Err(ParseError::Syntax { offset: 2, .. })));
        assert_eq!(parse::<f64>("   "), Err(ParseError::Empty));
        assert!(matches!(parse::<f64>("2 +"), Err(ParseError::Syntax { offset: 3, .. })));
    }
}
