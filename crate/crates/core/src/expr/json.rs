//! JSON tree form of expressions.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::{AtomKind, Expr, Node};
use crate::error::{Error, Result};

/// Serializable mirror of [`Expr`]. Rationals are strings such as `"-3/4"`;
/// slot derivatives are 1-based like the text form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ExprJson {
    Num(String),
    Indep(String),
    Param(String),
    Jet {
        dep: String,
        #[serde(default)]
        index: Vec<String>,
    },
    Func {
        name: String,
        #[serde(default)]
        deriv: Vec<usize>,
        args: Vec<ExprJson>,
    },
    Int {
        integrand: Box<ExprJson>,
        var: String,
    },
    Log(Box<ExprJson>),
    Exp(Box<ExprJson>),
    Add(Vec<ExprJson>),
    Mul(Vec<ExprJson>),
    Pow {
        base: Box<ExprJson>,
        exp: i32,
    },
}

fn check_name(name: &str) -> Result<()> {
    let mut chars = name.chars();
    let ok = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
    if ok {
        Ok(())
    } else {
        Err(Error::Json(format!("invalid identifier `{name}`")))
    }
}

fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::Json(format!("invalid number `{s}`"));
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let n: BigInt = n.trim().parse().map_err(|_| bad())?;
    let d: BigInt = d.trim().parse().map_err(|_| bad())?;
    if d == BigInt::from(0) {
        return Err(Error::Json(format!("zero denominator in `{s}`")));
    }
    Ok(BigRational::new(n, d))
}

impl ExprJson {
    pub fn from_expr(e: &Expr) -> ExprJson {
        match e.node() {
            Node::Num(q) => ExprJson::Num(if q.is_integer() {
                q.numer().to_string()
            } else {
                format!("{}/{}", q.numer(), q.denom())
            }),
            Node::Atom(a) => match a.kind() {
                AtomKind::Indep(v) => ExprJson::Indep(v.clone()),
                AtomKind::Param(v) => ExprJson::Param(v.clone()),
                AtomKind::Jet { dep, index } => ExprJson::Jet {
                    dep: dep.clone(),
                    index: index.clone(),
                },
                AtomKind::Func { name, deriv, args } => ExprJson::Func {
                    name: name.clone(),
                    deriv: deriv.iter().map(|s| s + 1).collect(),
                    args: args.iter().map(ExprJson::from_expr).collect(),
                },
                AtomKind::Antiderivative { integrand, var } => ExprJson::Int {
                    integrand: Box::new(ExprJson::from_expr(integrand)),
                    var: var.clone(),
                },
                AtomKind::Log(arg) => ExprJson::Log(Box::new(ExprJson::from_expr(arg))),
            },
            Node::Add(xs) => ExprJson::Add(xs.iter().map(ExprJson::from_expr).collect()),
            Node::Mul(xs) => ExprJson::Mul(xs.iter().map(ExprJson::from_expr).collect()),
            Node::Pow(b, k) => ExprJson::Pow {
                base: Box::new(ExprJson::from_expr(b)),
                exp: *k,
            },
            Node::Exp(arg) => ExprJson::Exp(Box::new(ExprJson::from_expr(arg))),
        }
    }

    pub fn to_expr(&self) -> Result<Expr> {
        Ok(match self {
            ExprJson::Num(s) => Expr::rational(parse_rational(s)?),
            ExprJson::Indep(v) => {
                check_name(v)?;
                Expr::indep(v)
            }
            ExprJson::Param(v) => {
                check_name(v)?;
                Expr::param(v)
            }
            ExprJson::Jet { dep, index } => {
                check_name(dep)?;
                for v in index {
                    check_name(v)?;
                }
                Expr::jet(dep, index)
            }
            ExprJson::Func { name, deriv, args } => {
                check_name(name)?;
                let mut slots = Vec::with_capacity(deriv.len());
                for &s in deriv {
                    if s == 0 || s > args.len() {
                        return Err(Error::Json(format!(
                            "slot {s} out of range for {name} with {} arguments",
                            args.len()
                        )));
                    }
                    slots.push(s - 1);
                }
                let args = args.iter().map(ExprJson::to_expr).collect::<Result<Vec<_>>>()?;
                Expr::func_deriv(name, slots, args)
            }
            ExprJson::Int { integrand, var } => {
                check_name(var)?;
                Expr::antiderivative(integrand.to_expr()?, var)
            }
            ExprJson::Log(arg) => Expr::log(arg.to_expr()?),
            ExprJson::Exp(arg) => Expr::exp(arg.to_expr()?),
            ExprJson::Add(xs) => Expr::add(xs.iter().map(ExprJson::to_expr).collect::<Result<_>>()?),
            ExprJson::Mul(xs) => Expr::mul(xs.iter().map(ExprJson::to_expr).collect::<Result<_>>()?),
            ExprJson::Pow { base, exp } => {
                if exp.unsigned_abs() > MAX_EXPONENT {
                    return Err(Error::Json(format!("exponent {exp} out of range")));
                }
                Expr::pow(base.to_expr()?, *exp)
            }
        })
    }
}

/// Largest exponent magnitude accepted by the decoders.
pub const MAX_EXPONENT: u32 = 1000;

pub fn expr_to_json(e: &Expr) -> serde_json::Value {
    serde_json::to_value(ExprJson::from_expr(e)).expect("expression tree serializes")
}

/// Decodes the JSON tree form produced by [`expr_to_json`].
pub fn expr_from_json(text: &str) -> Result<Expr> {
    let tree: ExprJson = serde_json::from_str(text).map_err(|e| Error::Json(e.to_string()))?;
    tree.to_expr()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let t = Expr::indep("t");
        let e = Expr::frac(-3, 4) * Expr::func_deriv("a1", vec![0], vec![t.clone(), Expr::indep("x")])
            + Expr::exp(Expr::antiderivative(Expr::func("a2", vec![t.clone()]), "t"))
            + Expr::pow(Expr::jet("u", &["t"]), -2);
        let text = expr_to_json(&e).to_string();
        assert_eq!(expr_from_json(&text).unwrap(), e);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(expr_from_json(r#"{"num":"1/0"}"#).is_err());
        assert!(expr_from_json(r#"{"indep":"2x"}"#).is_err());
        assert!(expr_from_json(r#"{"func":{"name":"f","deriv":[2],"args":[{"indep":"x"}]}}"#).is_err());
        assert!(expr_from_json(r#"{"bogus":1}"#).is_err());
    }
}
