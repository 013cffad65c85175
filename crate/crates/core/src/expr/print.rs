//! Parenthesized text form, readable back by the session parser.

use std::fmt::{self, Write};

use num_rational::BigRational;
use num_traits::{One, Signed};

use super::{Atom, AtomKind, Expr, Node};

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_sum_term(f, self, true)
    }
}

fn write_rational(f: &mut impl Write, q: &BigRational) -> fmt::Result {
    if q.is_integer() {
        write!(f, "{}", q.numer())
    } else {
        write!(f, "{}/{}", q.numer(), q.denom())
    }
}

/// Writes `e` as a term of a sum. When `first` is false the caller has not
/// yet emitted a separator, so a leading sign is written as ` - ` or ` + `.
fn write_sum_term(f: &mut impl Write, e: &Expr, first: bool) -> fmt::Result {
    match e.node() {
        Node::Add(xs) => {
            for (i, x) in xs.iter().enumerate() {
                write_sum_term(f, x, first && i == 0)?;
            }
            Ok(())
        }
        _ => {
            let (negative, magnitude) = split_sign(e);
            match (first, negative) {
                (true, true) => f.write_str("-")?,
                (true, false) => {}
                (false, true) => f.write_str(" - ")?,
                (false, false) => f.write_str(" + ")?,
            }
            write_product(f, &magnitude)
        }
    }
}

/// Splits a leading negative constant off a term.
fn split_sign(e: &Expr) -> (bool, Expr) {
    match e.node() {
        Node::Num(q) if q.is_negative() => (true, Expr::rational(-q)),
        Node::Mul(xs) => match xs[0].node() {
            Node::Num(q) if q.is_negative() => {
                let mut rest = xs.clone();
                rest[0] = Expr::rational(-q);
                (true, Expr::mul(rest))
            }
            _ => (false, e.clone()),
        },
        _ => (false, e.clone()),
    }
}

fn write_product(f: &mut impl Write, e: &Expr) -> fmt::Result {
    match e.node() {
        Node::Num(q) => write_rational(f, q),
        Node::Mul(xs) => {
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    f.write_str("*")?;
                }
                match x.node() {
                    Node::Num(q) if q.is_one() => f.write_str("1")?,
                    Node::Num(q) if q.is_integer() && !q.is_negative() => write_rational(f, q)?,
                    _ => write_factor(f, x)?,
                }
            }
            Ok(())
        }
        _ => write_factor(f, e),
    }
}

/// Writes `e` so that it binds as a single factor.
fn write_factor(f: &mut impl Write, e: &Expr) -> fmt::Result {
    match e.node() {
        Node::Num(q) if q.is_integer() && !q.is_negative() => write_rational(f, q),
        Node::Atom(a) => write_atom(f, a),
        Node::Exp(arg) => write!(f, "exp({arg})"),
        Node::Pow(b, k) => {
            write_factor(f, b)?;
            write!(f, "^{k}")
        }
        _ => write!(f, "({e})"),
    }
}

fn write_args(f: &mut impl Write, args: &[Expr]) -> fmt::Result {
    f.write_str("(")?;
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{a}")?;
    }
    f.write_str(")")
}

fn write_atom(f: &mut impl Write, a: &Atom) -> fmt::Result {
    match a.kind() {
        AtomKind::Indep(v) | AtomKind::Param(v) => f.write_str(v),
        AtomKind::Jet { dep, index } => {
            if index.is_empty() {
                f.write_str(dep)
            } else {
                write!(f, "D[{dep},{}]", index.join(","))
            }
        }
        AtomKind::Func { name, deriv, args } => {
            f.write_str(name)?;
            if !deriv.is_empty() {
                let slots: Vec<String> = deriv.iter().map(|s| (s + 1).to_string()).collect();
                write!(f, "[{}]", slots.join(","))?;
            }
            write_args(f, args)
        }
        AtomKind::Antiderivative { integrand, var } => write!(f, "int({integrand},{var})"),
        AtomKind::Log(arg) => write!(f, "log({arg})"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signs_and_rationals() {
        let x = Expr::indep("x");
        let u = Expr::dep("u");
        let e = Expr::add(vec![
            Expr::frac(3, 4) * &x,
            Expr::int(-2) * &u,
            Expr::frac(-1, 2),
            Expr::pow(&x + &u, -2),
        ]);
        assert_eq!(e.to_string(), "(3/4)*x - 2*u - 1/2 + (x + u)^-2");
        assert_eq!((-&x).to_string(), "-x");
    }

    #[test]
    fn atoms() {
        let t = Expr::indep("t");
        let x = Expr::indep("x");
        assert_eq!(Expr::jet("u", &["x", "t"]).to_string(), "D[u,t,x]");
        assert_eq!(
            Expr::func_deriv("a1", vec![0], vec![t.clone(), x.clone()]).to_string(),
            "a1[1](t,x)"
        );
        assert_eq!(
            Expr::antiderivative(Expr::func("a2", vec![t.clone()]), "t").to_string(),
            "int(a2(t),t)"
        );
        assert_eq!(Expr::exp(-&t).to_string(), "exp(-t)");
        assert_eq!(Expr::pow(Expr::log(t), 2).to_string(), "log(t)^2");
    }
}
