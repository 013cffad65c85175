use super::{normalize, Atom, AtomKind, Expr, Node};
use crate::error::{Error, Result};

/// Formal partial derivative of `e` with respect to `a`.
///
/// Every atom other than `a` is held constant, except that arbitrary functions
/// differentiate by the chain rule through their argument expressions and a
/// formal antiderivative differentiates to its integrand along its own
/// variable. Jet variables are independent symbols.
pub fn partial(e: &Expr, a: &Atom) -> Result<Expr> {
    match a.kind() {
        AtomKind::Indep(_) | AtomKind::Jet { .. } | AtomKind::Param(_) => {}
        _ => return Err(Error::UnsupportedAtom(a.to_string())),
    }
    normalize(&raw_partial(e, a))
}

/// Unnormalized derivative tree.
pub(crate) fn raw_partial(e: &Expr, a: &Atom) -> Expr {
    match e.node() {
        Node::Num(_) => Expr::zero(),
        Node::Atom(b) => atom_partial(b, a),
        Node::Add(xs) => Expr::add(
            xs.iter()
                .map(|x| raw_partial(x, a))
                .filter(|d| !d.is_literal_zero())
                .collect(),
        ),
        Node::Mul(xs) => {
            let mut terms = Vec::new();
            for (i, x) in xs.iter().enumerate() {
                let d = raw_partial(x, a);
                if d.is_literal_zero() {
                    continue;
                }
                let mut factors: Vec<Expr> = xs
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, y)| y.clone())
                    .collect();
                factors.push(d);
                terms.push(Expr::mul(factors));
            }
            Expr::add(terms)
        }
        Node::Pow(b, k) => {
            let d = raw_partial(b, a);
            if d.is_literal_zero() {
                return Expr::zero();
            }
            Expr::mul(vec![Expr::int(*k as i64), Expr::pow(b.clone(), k - 1), d])
        }
        Node::Exp(arg) => {
            let d = raw_partial(arg, a);
            if d.is_literal_zero() {
                return Expr::zero();
            }
            Expr::mul(vec![e.clone(), d])
        }
    }
}

fn atom_partial(b: &Atom, a: &Atom) -> Expr {
    if b == a {
        return Expr::one();
    }
    match b.kind() {
        AtomKind::Indep(_) | AtomKind::Jet { .. } | AtomKind::Param(_) => Expr::zero(),
        AtomKind::Func { name, deriv, args } => {
            let mut terms = Vec::new();
            for (slot, arg) in args.iter().enumerate() {
                let d = raw_partial(arg, a);
                if d.is_literal_zero() {
                    continue;
                }
                let mut nd = deriv.clone();
                nd.push(slot);
                terms.push(Expr::mul(vec![
                    Expr::func_deriv(name, nd, args.clone()),
                    d,
                ]));
            }
            Expr::add(terms)
        }
        AtomKind::Antiderivative { integrand, var } => {
            if matches!(a.kind(), AtomKind::Indep(v) if v == var) {
                return integrand.clone();
            }
            let d = raw_partial(integrand, a);
            if d.is_literal_zero() {
                Expr::zero()
            } else {
                Expr::antiderivative(d, var)
            }
        }
        AtomKind::Log(arg) => {
            let d = raw_partial(arg, a);
            if d.is_literal_zero() {
                Expr::zero()
            } else {
                d / arg
            }
        }
    }
}
