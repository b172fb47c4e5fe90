use serde::{Deserialize, Serialize};

use super::{Expr, Op, Var, MAX_POW};
use crate::scalar::Scalar;

/// Nested document form of an expression tree, used inside result files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExprDoc {
    /// `constant`, `variable` or `apply`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub op: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<ExprDoc>,
}

impl ExprDoc {
    fn leaf(kind: &str) -> Self {
        Self {
            kind: kind.into(),
            op: None,
            value: None,
            exponent: None,
            name: None,
            children: Vec::new(),
        }
    }
}

impl<T: Scalar> From<&Expr<T>> for ExprDoc {
    fn from(e: &Expr<T>) -> Self {
        match e {
            Expr::Const(c) => ExprDoc {
                value: Some(c.as_f64()),
                ..ExprDoc::leaf("constant")
            },
            Expr::Var(v) => ExprDoc {
                name: Some(v.name().into()),
                ..ExprDoc::leaf("variable")
            },
            Expr::Unary(op, a) => ExprDoc {
                op: Some(op.name().into()),
                exponent: match op {
                    Op::PowInt(k) => Some(*k),
                    _ => None,
                },
                children: vec![ExprDoc::from(a.as_ref())],
                ..ExprDoc::leaf("apply")
            },
            Expr::Binary(op, a, b) => ExprDoc {
                op: Some(op.name().into()),
                children: vec![ExprDoc::from(a.as_ref()), ExprDoc::from(b.as_ref())],
                ..ExprDoc::leaf("apply")
            },
        }
    }
}

impl ExprDoc {
    pub fn to_expr<T: Scalar>(&self) -> Result<Expr<T>, String> {
        match self.kind.as_str() {
            "constant" => {
                let v = self.value.ok_or("constant without value")?;
                let v = T::lit(v);
                if !v.is_finite() {
                    return Err("non-finite constant".into());
                }
                Ok(Expr::Const(v))
            }
            "variable" => match self.name.as_deref() {
                Some("x") => Ok(Expr::Var(Var::X)),
                Some("y") => Ok(Expr::Var(Var::Y)),
                Some("y1") => Ok(Expr::Var(Var::Y1)),
                Some("y2") => Ok(Expr::Var(Var::Y2)),
                other => Err(format!("unknown variable {other:?}")),
            },
            "apply" => {
                let name = self.op.as_deref().ok_or("apply without op")?;
                let op = if name == "pow_int" {
                    let k = self.exponent.ok_or("pow_int without exponent")?;
                    if k.abs() > MAX_POW {
                        return Err(format!("exponent {k} out of range"));
                    }
                    Op::PowInt(k)
                } else {
                    Op::from_name(name).ok_or_else(|| format!("unknown op `{name}`"))?
                };
                if self.children.len() != op.arity() {
                    return Err(format!(
                        "`{name}` expects {} children, found {}",
                        op.arity(),
                        self.children.len()
                    ));
                }
                let mut kids = self.children.iter().map(|c| c.to_expr::<T>());
                let a = kids.next().unwrap()?;
                Ok(match kids.next() {
                    Some(b) => Expr::Binary(op, Box::new(a), Box::new(b?)),
                    None => Expr::Unary(op, Box::new(a)),
                })
            }
            other => Err(format!("unknown node kind `{other}`")),
        }
    }
}
