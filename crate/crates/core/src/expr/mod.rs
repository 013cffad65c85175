//! Immutable symbolic expressions.
//!
//! An [`Expr`] is a shared tree of sums, products, integer powers, rational
//! constants, exponentials and [`Atom`] leaves. Trees are cheap to clone and
//! never mutated. Arithmetic through the constructors only flattens and folds
//! numeric constants; the heavy lifting happens in [`normalize`], which maps an
//! expression to its canonical rational normal form.

mod collect;
mod deps;
mod diff;
mod json;
mod poly;
mod print;
mod subst;

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub use collect::{collect, jet_monomial_expr, Collected, JetMonomial};
pub use deps::{dependency_closure, DependencySet};
pub use diff::partial;
pub use json::{expr_from_json, expr_to_json, ExprJson, MAX_EXPONENT};
pub use subst::{instantiate_functions, substitute, FunctionBody, FunctionBindings};

pub(crate) use collect::{group_by_jets, poly_has_jets};
pub(crate) use diff::raw_partial;
pub(crate) use poly::Rat;

use crate::error::Result;

/// Leaf symbols of the expression language.
///
/// The derived ordering is the canonical atom order: variant rank first, then
/// name, multi-index and arguments.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AtomKind {
    /// An independent variable such as `t` or `z`.
    Indep(String),
    /// `D_J y`: a derivative of the dependent variable `dep`. The multi-index
    /// lists independent-variable names, sorted; empty means `dep` itself.
    Jet { dep: String, index: Vec<String> },
    /// An arbitrary function `name(args)` differentiated `deriv` times, where
    /// `deriv` holds sorted zero-based formal slot positions.
    Func {
        name: String,
        deriv: Vec<usize>,
        args: Vec<Expr>,
    },
    /// A symbolic constant such as `k1`.
    Param(String),
    /// A formal antiderivative of `integrand` with respect to `var`.
    Antiderivative { integrand: Expr, var: String },
    /// A logarithm, kept opaque.
    Log(Expr),
}

/// Shared handle to an [`AtomKind`].
#[derive(Clone)]
pub struct Atom(Arc<AtomKind>);

impl Atom {
    pub fn new(kind: AtomKind) -> Self {
        let kind = match kind {
            AtomKind::Jet { dep, mut index } => {
                index.sort();
                AtomKind::Jet { dep, index }
            }
            AtomKind::Func {
                name,
                mut deriv,
                args,
            } => {
                deriv.sort_unstable();
                AtomKind::Func { name, deriv, args }
            }
            other => other,
        };
        Atom(Arc::new(kind))
    }

    pub fn indep(name: &str) -> Self {
        Atom::new(AtomKind::Indep(name.to_string()))
    }

    pub fn param(name: &str) -> Self {
        Atom::new(AtomKind::Param(name.to_string()))
    }

    pub fn jet<S: AsRef<str>>(dep: &str, index: &[S]) -> Self {
        Atom::new(AtomKind::Jet {
            dep: dep.to_string(),
            index: index.iter().map(|s| s.as_ref().to_string()).collect(),
        })
    }

    pub fn kind(&self) -> &AtomKind {
        &self.0
    }

    pub fn is_jet_of(&self, dep_name: &str) -> bool {
        matches!(self.kind(), AtomKind::Jet { dep, .. } if dep == dep_name)
    }

    /// Order of a jet variable, `None` for other atoms.
    pub fn jet_order(&self) -> Option<usize> {
        match self.kind() {
            AtomKind::Jet { index, .. } => Some(index.len()),
            _ => None,
        }
    }
}

impl PartialEq for Atom {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl Eq for Atom {}

impl PartialOrd for Atom {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Atom {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        self.0.cmp(&other.0)
    }
}

impl Hash for Atom {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash(state)
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", Expr::atom(self.clone()))
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", Expr::atom(self.clone()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Num(BigRational),
    Atom(Atom),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, i32),
    Exp(Expr),
}

#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl Eq for Expr {}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        self.0.cmp(&other.0)
    }
}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash(state)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Expr {
    fn from_node(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn zero() -> Self {
        Expr::rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Expr::rational(BigRational::one())
    }

    pub fn int(n: i64) -> Self {
        Expr::rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn frac(n: i64, d: i64) -> Self {
        Expr::rational(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn rational(q: BigRational) -> Self {
        Expr::from_node(Node::Num(q))
    }

    pub fn atom(a: Atom) -> Self {
        Expr::from_node(Node::Atom(a))
    }

    pub fn indep(name: &str) -> Self {
        Expr::atom(Atom::indep(name))
    }

    pub fn param(name: &str) -> Self {
        Expr::atom(Atom::param(name))
    }

    pub fn jet<S: AsRef<str>>(dep: &str, index: &[S]) -> Self {
        Expr::atom(Atom::jet(dep, index))
    }

    /// The undifferentiated dependent variable `dep`.
    pub fn dep(dep: &str) -> Self {
        Expr::jet::<&str>(dep, &[])
    }

    pub fn func(name: &str, args: Vec<Expr>) -> Self {
        Expr::func_deriv(name, Vec::new(), args)
    }

    /// `name` differentiated with respect to the zero-based formal slots in
    /// `deriv`, evaluated at `args`.
    pub fn func_deriv(name: &str, deriv: Vec<usize>, args: Vec<Expr>) -> Self {
        Expr::atom(Atom::new(AtomKind::Func {
            name: name.to_string(),
            deriv,
            args,
        }))
    }

    pub fn antiderivative(integrand: Expr, var: &str) -> Self {
        Expr::atom(Atom::new(AtomKind::Antiderivative {
            integrand,
            var: var.to_string(),
        }))
    }

    pub fn exp(arg: Expr) -> Self {
        Expr::from_node(Node::Exp(arg))
    }

    pub fn log(arg: Expr) -> Self {
        Expr::atom(Atom::new(AtomKind::Log(arg)))
    }

    /// Flattened sum. Empty sums are 0, singletons collapse.
    pub fn add(terms: Vec<Expr>) -> Self {
        let mut flat = Vec::with_capacity(terms.len());
        for t in terms {
            match t.node() {
                Node::Add(inner) => flat.extend(inner.iter().cloned()),
                _ => flat.push(t),
            }
        }
        match flat.len() {
            0 => Expr::zero(),
            1 => flat.pop().unwrap(),
            _ => Expr::from_node(Node::Add(flat)),
        }
    }

    /// Flattened product with every numeric factor folded into one leading
    /// constant.
    pub fn mul(factors: Vec<Expr>) -> Self {
        let mut coeff = BigRational::one();
        let mut flat = Vec::with_capacity(factors.len());
        let push = |e: &Expr, flat: &mut Vec<Expr>, coeff: &mut BigRational| match e.node() {
            Node::Num(q) => *coeff *= q,
            _ => flat.push(e.clone()),
        };
        for f in &factors {
            match f.node() {
                Node::Mul(inner) => {
                    for g in inner {
                        push(g, &mut flat, &mut coeff);
                    }
                }
                _ => push(f, &mut flat, &mut coeff),
            }
        }
        if coeff.is_zero() {
            return Expr::zero();
        }
        if flat.is_empty() {
            return Expr::rational(coeff);
        }
        if !coeff.is_one() {
            flat.insert(0, Expr::rational(coeff));
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            Expr::from_node(Node::Mul(flat))
        }
    }

    /// Integer power. Folds numeric bases, nested powers and distributes over
    /// products.
    pub fn pow(base: Expr, k: i32) -> Self {
        if k == 1 {
            return base;
        }
        if k == 0 {
            return Expr::one();
        }
        match base.node() {
            Node::Num(q) => {
                if q.is_zero() {
                    // 0^-k stays symbolic so normalize reports the division
                    if k < 0 {
                        return Expr::from_node(Node::Pow(base, k));
                    }
                    return Expr::zero();
                }
                let mut r = q.pow(k.unsigned_abs() as i32);
                if k < 0 {
                    r = r.recip();
                }
                Expr::rational(r)
            }
            Node::Pow(b, j) => match j.checked_mul(k) {
                Some(jk) => Expr::pow(b.clone(), jk),
                None => Expr::from_node(Node::Pow(base, k)),
            },
            Node::Mul(fs) => Expr::mul(fs.iter().map(|f| Expr::pow(f.clone(), k)).collect()),
            _ => Expr::from_node(Node::Pow(base, k)),
        }
    }

    pub fn neg(&self) -> Self {
        Expr::mul(vec![Expr::int(-1), self.clone()])
    }

    pub fn recip(&self) -> Self {
        Expr::pow(self.clone(), -1)
    }

    pub fn as_atom(&self) -> Option<&Atom> {
        match self.node() {
            Node::Atom(a) => Some(a),
            _ => None,
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self.node() {
            Node::Num(q) => Some(q),
            _ => None,
        }
    }

    /// Structural zero test. Use [`Expr::is_zero`] for the semantic one.
    pub fn is_literal_zero(&self) -> bool {
        matches!(self.node(), Node::Num(q) if q.is_zero())
    }

    /// True when the expression is identically zero as a rational function.
    pub fn is_zero(&self) -> Result<bool> {
        Ok(Rat::from_expr(self)?.is_zero())
    }

    /// True when `self - other` normalizes to zero.
    pub fn equivalent(&self, other: &Expr) -> Result<bool> {
        (self - other).is_zero()
    }

    pub fn normalize(&self) -> Result<Expr> {
        normalize(self)
    }

    /// Visits every atom, descending into function arguments, integrands and
    /// logarithm arguments.
    pub fn visit_atoms<F: FnMut(&Atom)>(&self, f: &mut F) {
        match self.node() {
            Node::Num(_) => {}
            Node::Atom(a) => {
                f(a);
                match a.kind() {
                    AtomKind::Func { args, .. } => {
                        for arg in args {
                            arg.visit_atoms(f);
                        }
                    }
                    AtomKind::Antiderivative { integrand, .. } => integrand.visit_atoms(f),
                    AtomKind::Log(arg) => arg.visit_atoms(f),
                    _ => {}
                }
            }
            Node::Add(xs) | Node::Mul(xs) => {
                for x in xs {
                    x.visit_atoms(f);
                }
            }
            Node::Pow(b, _) => b.visit_atoms(f),
            Node::Exp(a) => a.visit_atoms(f),
        }
    }

    /// Every jet variable of `dep` occurring anywhere in the expression.
    pub fn jets_of(&self, dep: &str) -> std::collections::BTreeSet<Atom> {
        let mut out = std::collections::BTreeSet::new();
        self.visit_atoms(&mut |a| {
            if a.is_jet_of(dep) {
                out.insert(a.clone());
            }
        });
        out
    }

    /// Highest jet order of `dep`, if any jet of `dep` occurs.
    pub fn max_jet_order(&self, dep: &str) -> Option<usize> {
        self.jets_of(dep).iter().filter_map(Atom::jet_order).max()
    }

    /// Sign of a rational constant, if this is one.
    pub fn constant_sign(&self) -> Option<i8> {
        self.as_rational().map(|q| {
            if q.is_positive() {
                1
            } else if q.is_negative() {
                -1
            } else {
                0
            }
        })
    }
}

/// Canonical rational normal form of `e`.
///
/// The result is an expanded numerator over a product of normalized
/// denominator factors, with atom monomial content moved into the numerator
/// as negative exponents. Zero-equivalence is decided exactly: `e` is zero as
/// a rational function in its atoms iff `normalize(e)` is the literal 0.
pub fn normalize(e: &Expr) -> Result<Expr> {
    Ok(Rat::from_expr(e)?.to_expr())
}

macro_rules! bin_op {
    ($trait:ident, $method:ident, $body:expr) => {
        impl ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(&self, &rhs)
            }
        }
        impl ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(&self, rhs)
            }
        }
        impl ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(self, &rhs)
            }
        }
        impl ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
    };
}

bin_op!(Add, add, |a, b| Expr::add(vec![a.clone(), b.clone()]));
bin_op!(Sub, sub, |a, b| Expr::add(vec![a.clone(), b.neg()]));
bin_op!(Mul, mul, |a, b| Expr::mul(vec![a.clone(), b.clone()]));
bin_op!(Div, div, |a, b| Expr::mul(vec![a.clone(), b.recip()]));

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

impl From<Atom> for Expr {
    fn from(a: Atom) -> Self {
        Expr::atom(a)
    }
}
