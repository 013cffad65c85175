use std::collections::BTreeMap;

use super::diff::raw_partial;
use super::{normalize, Atom, AtomKind, Expr, Node};
use crate::error::{Error, Result};

/// Simultaneous substitution of atoms, followed by normalization.
///
/// Arguments of arbitrary functions are rewritten recursively, so binding
/// `t -> R(y)` turns `a3(t, x)` into `a3(R(y), x)`.
pub fn substitute(e: &Expr, bindings: &BTreeMap<Atom, Expr>) -> Result<Expr> {
    if bindings.is_empty() {
        return normalize(e);
    }
    normalize(&raw_substitute(e, bindings)?)
}

pub(crate) fn raw_substitute(e: &Expr, bindings: &BTreeMap<Atom, Expr>) -> Result<Expr> {
    Ok(match e.node() {
        Node::Num(_) => e.clone(),
        Node::Atom(a) => {
            if let Some(v) = bindings.get(a) {
                return Ok(v.clone());
            }
            match a.kind() {
                AtomKind::Indep(_) | AtomKind::Jet { .. } | AtomKind::Param(_) => e.clone(),
                AtomKind::Func { name, deriv, args } => {
                    let args = args
                        .iter()
                        .map(|x| raw_substitute(x, bindings))
                        .collect::<Result<Vec<_>>>()?;
                    Expr::func_deriv(name, deriv.clone(), args)
                }
                AtomKind::Antiderivative { integrand, var } => {
                    let var_atom = Atom::indep(var);
                    match bindings.get(&var_atom) {
                        None => Expr::antiderivative(raw_substitute(integrand, bindings)?, var),
                        Some(v) => match v.as_atom().map(Atom::kind) {
                            Some(AtomKind::Indep(new_var)) => {
                                Expr::antiderivative(raw_substitute(integrand, bindings)?, new_var)
                            }
                            _ => {
                                return Err(Error::BoundVariable {
                                    var: var.clone(),
                                    value: v.to_string(),
                                })
                            }
                        },
                    }
                }
                AtomKind::Log(arg) => Expr::log(raw_substitute(arg, bindings)?),
            }
        }
        Node::Add(xs) => Expr::add(
            xs.iter()
                .map(|x| raw_substitute(x, bindings))
                .collect::<Result<Vec<_>>>()?,
        ),
        Node::Mul(xs) => Expr::mul(
            xs.iter()
                .map(|x| raw_substitute(x, bindings))
                .collect::<Result<Vec<_>>>()?,
        ),
        Node::Pow(b, k) => Expr::pow(raw_substitute(b, bindings)?, *k),
        Node::Exp(arg) => Expr::exp(raw_substitute(arg, bindings)?),
    })
}

/// Concrete body for an arbitrary function: `name(params) = body`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionBody {
    pub params: Vec<String>,
    pub body: Expr,
}

pub type FunctionBindings = BTreeMap<String, FunctionBody>;

/// Replaces arbitrary functions by concrete bodies. Slot derivatives become
/// derivatives of the body with respect to the matching formal parameter.
pub fn instantiate_functions(e: &Expr, funcs: &FunctionBindings) -> Result<Expr> {
    normalize(&raw_instantiate(e, funcs)?)
}

fn raw_instantiate(e: &Expr, funcs: &FunctionBindings) -> Result<Expr> {
    Ok(match e.node() {
        Node::Num(_) => e.clone(),
        Node::Atom(a) => match a.kind() {
            AtomKind::Indep(_) | AtomKind::Jet { .. } | AtomKind::Param(_) => e.clone(),
            AtomKind::Func { name, deriv, args } => {
                let args = args
                    .iter()
                    .map(|x| raw_instantiate(x, funcs))
                    .collect::<Result<Vec<_>>>()?;
                match funcs.get(name) {
                    None => Expr::func_deriv(name, deriv.clone(), args),
                    Some(fb) => {
                        if fb.params.len() != args.len() {
                            return Err(Error::VariableMismatch(format!(
                                "function {name} takes {} arguments, body has {} parameters",
                                args.len(),
                                fb.params.len()
                            )));
                        }
                        let mut body = fb.body.clone();
                        for slot in deriv {
                            body = normalize(&raw_partial(&body, &Atom::indep(&fb.params[*slot])))?;
                        }
                        let map: BTreeMap<Atom, Expr> = fb
                            .params
                            .iter()
                            .map(|p| Atom::indep(p))
                            .zip(args)
                            .collect();
                        raw_substitute(&body, &map)?
                    }
                }
            }
            AtomKind::Antiderivative { integrand, var } => {
                Expr::antiderivative(raw_instantiate(integrand, funcs)?, var)
            }
            AtomKind::Log(arg) => Expr::log(raw_instantiate(arg, funcs)?),
        },
        Node::Add(xs) => Expr::add(
            xs.iter()
                .map(|x| raw_instantiate(x, funcs))
                .collect::<Result<Vec<_>>>()?,
        ),
        Node::Mul(xs) => Expr::mul(
            xs.iter()
                .map(|x| raw_instantiate(x, funcs))
                .collect::<Result<Vec<_>>>()?,
        ),
        Node::Pow(b, k) => Expr::pow(raw_instantiate(b, funcs)?, *k),
        Node::Exp(arg) => Expr::exp(raw_instantiate(arg, funcs)?),
    })
}
