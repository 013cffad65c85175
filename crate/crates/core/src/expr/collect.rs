use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::BigRational;
use num_traits::One;

use super::poly::{Mono, Poly, Rat};
use super::{Atom, AtomKind, Expr};
use crate::error::Result;

/// A product of jet variables with positive exponents. The empty monomial is 1.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JetMonomial(pub Vec<(Atom, u32)>);

impl JetMonomial {
    pub fn one() -> Self {
        JetMonomial(Vec::new())
    }

    pub fn jet(a: Atom) -> Self {
        JetMonomial(vec![(a, 1)])
    }

    pub fn from_factors(factors: impl IntoIterator<Item = Atom>) -> Self {
        let mut map: BTreeMap<Atom, u32> = BTreeMap::new();
        for a in factors {
            *map.entry(a).or_insert(0) += 1;
        }
        JetMonomial(map.into_iter().collect())
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.0.iter().map(|(a, _)| a)
    }

    /// Highest jet order among the factors.
    pub fn order(&self) -> usize {
        self.atoms().filter_map(Atom::jet_order).max().unwrap_or(0)
    }

    pub fn to_expr(&self) -> Expr {
        jet_monomial_expr(self)
    }

    fn as_pows(&self) -> Vec<(Atom, i32)> {
        self.0.iter().map(|(a, k)| (a.clone(), *k as i32)).collect()
    }
}

impl fmt::Display for JetMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

pub fn jet_monomial_expr(m: &JetMonomial) -> Expr {
    Expr::mul(
        m.0.iter()
            .map(|(a, k)| Expr::pow(Expr::atom(a.clone()), *k as i32))
            .collect(),
    )
}

/// Result of [`collect`]: `e = sum(coefficient * monomial) + residual`.
#[derive(Debug, Clone, PartialEq)]
pub struct Collected {
    pub coefficients: Vec<(JetMonomial, Expr)>,
    pub residual: Expr,
}

impl Collected {
    pub fn coefficient(&self, m: &JetMonomial) -> Option<&Expr> {
        self.coefficients.iter().find(|(k, _)| k == m).map(|(_, c)| c)
    }
}

/// Numerator terms of a normal form grouped by their jet part.
pub(crate) struct JetGrouping {
    /// Jet part (possibly with negative exponents) to coefficient.
    pub groups: BTreeMap<Vec<(Atom, i32)>, Rat>,
    /// Denominator factors that involve jets of the dependent variables.
    pub jet_denominators: Vec<Poly>,
}

fn is_collected_jet(a: &Atom, deps: &BTreeSet<String>) -> bool {
    matches!(a.kind(), AtomKind::Jet { dep, .. } if deps.contains(dep))
}

pub(crate) fn poly_has_jets(p: &Poly, deps: &BTreeSet<String>) -> bool {
    p.terms
        .keys()
        .any(|m| m.pows.iter().any(|(a, _)| is_collected_jet(a, deps)))
}

pub(crate) fn group_by_jets(r: &Rat, deps: &BTreeSet<String>) -> JetGrouping {
    let jet_denominators: Vec<Poly> = r
        .den
        .keys()
        .filter(|f| poly_has_jets(f, deps))
        .cloned()
        .collect();
    let mut nums: BTreeMap<Vec<(Atom, i32)>, Poly> = BTreeMap::new();
    for (m, c) in &r.num.terms {
        let (jet, rest): (Vec<_>, Vec<_>) = m
            .pows
            .iter()
            .cloned()
            .partition(|(a, _)| is_collected_jet(a, deps));
        let rest = Mono {
            pows: rest,
            exp: m.exp.clone(),
        };
        nums.entry(jet).or_default().add_term(rest, c.clone());
    }
    let groups = nums
        .into_iter()
        .map(|(k, num)| {
            let mut g = Rat { num, den: r.den.clone() };
            // a common denominator may cancel against one group only
            g = Rat::sum(vec![g]);
            (k, g)
        })
        .collect();
    JetGrouping {
        groups,
        jet_denominators,
    }
}

/// Splits `e` into coefficients of the given jet monomials and a residual.
///
/// The expression is read as a polynomial in the jet variables of the
/// dependent variables named by `monomials`; each coefficient is free of those
/// jets. Terms on any other jet monomial, and everything when a denominator
/// involves those jets, go to the residual.
pub fn collect(e: &Expr, monomials: &[JetMonomial]) -> Result<Collected> {
    let deps: BTreeSet<String> = monomials
        .iter()
        .flat_map(|m| m.atoms())
        .filter_map(|a| match a.kind() {
            AtomKind::Jet { dep, .. } => Some(dep.clone()),
            _ => None,
        })
        .collect();
    let r = Rat::from_expr(e)?;
    let mut order: Vec<&JetMonomial> = monomials.iter().collect();
    // highest order first
    order.sort_by(|a, b| b.order().cmp(&a.order()).then_with(|| b.cmp(a)));
    let mut coefficients: Vec<(JetMonomial, Expr)> = Vec::with_capacity(monomials.len());
    let grouping = group_by_jets(&r, &deps);
    if !grouping.jet_denominators.is_empty() || deps.is_empty() {
        for m in order {
            coefficients.push((m.clone(), Expr::zero()));
        }
        return Ok(Collected {
            coefficients,
            residual: r.to_expr(),
        });
    }
    let mut groups = grouping.groups;
    for m in order {
        let c = groups.remove(&m.as_pows()).unwrap_or_else(Rat::zero);
        coefficients.push((m.clone(), c.to_expr()));
    }
    let residual = Rat::sum(
        groups
            .into_iter()
            .map(|(k, g)| {
                g.mul(&Rat::from_poly(Poly::monomial(
                    Mono { pows: k, exp: None },
                    BigRational::one(),
                )))
            })
            .collect(),
    );
    Ok(Collected {
        coefficients,
        residual: residual.to_expr(),
    })
}
