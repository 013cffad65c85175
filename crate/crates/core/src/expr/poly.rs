//! Rational normal form.
//!
//! A [`Rat`] is a Laurent polynomial numerator over a product of denominator
//! factors. Monomials carry integer powers of atoms plus at most one
//! exponential, so `exp(a)*exp(b)` is stored as `exp(a+b)`. Denominator factors
//! are polynomials with at least two terms, free of atom monomial content,
//! with an exp-free leading term of coefficient 1. Factors are kept pairwise
//! non-dividing by splitting on exact division, and the numerator is reduced by
//! trial division against every factor.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{Atom, AtomKind, Expr, Node};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub(crate) struct Mono {
    /// Sorted by atom, no zero exponents.
    pub pows: Vec<(Atom, i32)>,
    /// Canonical exponential argument; `None` is `exp(0)`.
    pub exp: Option<Expr>,
}

impl Mono {
    pub fn one() -> Self {
        Mono::default()
    }

    pub fn atom(a: Atom) -> Self {
        Mono {
            pows: vec![(a, 1)],
            exp: None,
        }
    }

    pub fn is_one(&self) -> bool {
        self.pows.is_empty() && self.exp.is_none()
    }

    fn degree(&self) -> i64 {
        self.pows.iter().map(|(_, k)| *k as i64).sum()
    }

    fn merge_pows(a: &[(Atom, i32)], b: &[(Atom, i32)], sign: i32) -> Vec<(Atom, i32)> {
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let ord = match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) => x.0.cmp(&y.0),
                (Some(_), None) => Ordering::Less,
                (None, Some(_)) => Ordering::Greater,
                (None, None) => unreachable!(),
            };
            match ord {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push((b[j].0.clone(), sign * b[j].1));
                    j += 1;
                }
                Ordering::Equal => {
                    let k = a[i].1 + sign * b[j].1;
                    if k != 0 {
                        out.push((a[i].0.clone(), k));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out
    }

    pub fn mul(&self, other: &Mono) -> Mono {
        Mono {
            pows: Mono::merge_pows(&self.pows, &other.pows, 1),
            exp: exp_sum(&self.exp, &other.exp),
        }
    }

    pub fn inv(&self) -> Mono {
        Mono {
            pows: self.pows.iter().map(|(a, k)| (a.clone(), -k)).collect(),
            exp: exp_neg(&self.exp),
        }
    }

    /// `self / other` on the atom part only; the exp part is divided too.
    fn div(&self, other: &Mono) -> Mono {
        Mono {
            pows: Mono::merge_pows(&self.pows, &other.pows, -1),
            exp: exp_sum(&self.exp, &exp_neg(&other.exp)),
        }
    }

    fn from_pows(pows: Vec<(Atom, i32)>) -> Mono {
        Mono { pows, exp: None }
    }

    pub fn power_of(&self, a: &Atom) -> i32 {
        self.pows
            .binary_search_by(|(x, _)| x.cmp(a))
            .map(|i| self.pows[i].1)
            .unwrap_or(0)
    }
}

/// Graded lexicographic on the atom part, then structural on the exponential.
impl Ord for Mono {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| lex_cmp(&self.pows, &other.pows))
            .then_with(|| self.exp.cmp(&other.exp))
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn lex_cmp(a: &[(Atom, i32)], b: &[(Atom, i32)]) -> Ordering {
    let (mut i, mut j) = (0, 0);
    loop {
        match (a.get(i), b.get(j)) {
            (None, None) => return Ordering::Equal,
            (Some((_, ea)), None) => return ea.cmp(&0),
            (None, Some((_, eb))) => return 0.cmp(eb),
            (Some((x, ea)), Some((y, eb))) => match x.cmp(y) {
                Ordering::Equal => {
                    if ea != eb {
                        return ea.cmp(eb);
                    }
                    i += 1;
                    j += 1;
                }
                Ordering::Less => return ea.cmp(&0),
                Ordering::Greater => return 0.cmp(eb),
            },
        }
    }
}

fn canonical_rat(e: &Expr) -> Rat {
    Rat::from_expr(e).expect("canonical expressions have nonzero denominators")
}

fn exp_sum(a: &Option<Expr>, b: &Option<Expr>) -> Option<Expr> {
    match (a, b) {
        (None, x) | (x, None) => x.clone(),
        (Some(x), Some(y)) => {
            let r = Rat::sum(vec![canonical_rat(x), canonical_rat(y)]);
            if r.is_zero() {
                None
            } else {
                Some(r.to_expr())
            }
        }
    }
}

fn exp_neg(a: &Option<Expr>) -> Option<Expr> {
    a.as_ref().map(|x| canonical_rat(x).neg().to_expr())
}

/// Shift-invariant order on exponential arguments: `a > b` iff the leading
/// coefficient of `a - b` is positive.
fn exp_cmp(a: &Option<Expr>, b: &Option<Expr>) -> Ordering {
    if a == b {
        return Ordering::Equal;
    }
    let ra = a.as_ref().map(canonical_rat).unwrap_or_else(Rat::zero);
    let rb = b.as_ref().map(canonical_rat).unwrap_or_else(Rat::zero);
    let d = Rat::sum(vec![ra, rb.neg()]);
    if d.is_zero() {
        return Ordering::Equal;
    }
    if d.num.lead().1.is_positive() {
        Ordering::Greater
    } else {
        Ordering::Less
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub(crate) struct Poly {
    pub terms: BTreeMap<Mono, BigRational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(q: BigRational) -> Self {
        Poly::monomial(Mono::one(), q)
    }

    pub fn one() -> Self {
        Poly::constant(BigRational::one())
    }

    pub fn monomial(m: Mono, c: BigRational) -> Self {
        let mut p = Poly::zero();
        p.add_term(m, c);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn single_term(&self) -> Option<(&Mono, &BigRational)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    pub fn is_one(&self) -> bool {
        matches!(self.single_term(), Some((m, c)) if m.is_one() && c.is_one())
    }

    pub fn add_term(&mut self, m: Mono, c: BigRational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add_assign(&mut self, other: &Poly) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn mul_mono(&self, m: &Mono, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        if m.is_one() {
            return Poly {
                terms: self.terms.iter().map(|(t, d)| (t.clone(), d * c)).collect(),
            };
        }
        let mut out = Poly::zero();
        for (t, d) in &self.terms {
            out.add_term(t.mul(m), d * c);
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.len() < other.len() {
            return other.mul(self);
        }
        let mut out = Poly::zero();
        for (m, c) in &other.terms {
            for (t, d) in &self.terms {
                out.add_term(t.mul(m), d * c);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut out = Poly::one();
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Leading term: greatest atom part, ties broken by the exp order.
    pub fn lead(&self) -> (&Mono, &BigRational) {
        let mut it = self.terms.iter().rev();
        let first = it.next().expect("lead of zero polynomial");
        let mut best = first;
        for cand in it {
            if cand.0.pows != first.0.pows {
                break;
            }
            if exp_cmp(&cand.0.exp, &best.0.exp) == Ordering::Greater {
                best = cand;
            }
        }
        best
    }

    /// Componentwise minimum exponent over all terms (absent atoms count as 0).
    pub fn min_pows(&self) -> Vec<(Atom, i32)> {
        let mut atoms: BTreeMap<&Atom, i32> = BTreeMap::new();
        for m in self.terms.keys() {
            for (a, _) in &m.pows {
                atoms.entry(a).or_insert(0);
            }
        }
        for (a, k) in atoms.iter_mut() {
            *k = self.terms.keys().map(|m| m.power_of(a)).min().unwrap_or(0);
        }
        atoms
            .into_iter()
            .filter(|(_, k)| *k != 0)
            .map(|(a, k)| (a.clone(), k))
            .collect()
    }

    fn max_pows(&self) -> BTreeMap<Atom, i32> {
        let mut out: BTreeMap<Atom, i32> = BTreeMap::new();
        for m in self.terms.keys() {
            for (a, k) in &m.pows {
                let e = out.entry(a.clone()).or_insert(*k);
                if *k > *e {
                    *e = *k;
                }
            }
        }
        out
    }

    /// Least and greatest exponential part under [`exp_cmp`].
    fn exp_range(&self) -> (Option<Expr>, Option<Expr>) {
        let mut exps = self.terms.keys().map(|m| &m.exp);
        let first = exps.next().cloned().flatten();
        let (mut lo, mut hi) = (first.clone(), first);
        for e in exps {
            if e == &lo || e == &hi {
                continue;
            }
            if exp_cmp(e, &lo) == Ordering::Less {
                lo = e.clone();
            } else if exp_cmp(e, &hi) == Ordering::Greater {
                hi = e.clone();
            }
        }
        (lo, hi)
    }

    fn max_degree(&self) -> i64 {
        self.terms.keys().map(Mono::degree).max().unwrap_or(0)
    }

    /// `self = c * m * f` with `f` a normalized factor (or 1).
    pub fn split_content(&self) -> (BigRational, Mono, Poly) {
        if let Some((m, c)) = self.single_term() {
            return (c.clone(), m.clone(), Poly::one());
        }
        let mins = Mono::from_pows(self.min_pows());
        let shifted = if mins.is_one() {
            self.clone()
        } else {
            self.mul_mono(&mins.inv(), &BigRational::one())
        };
        let (lm, lc) = shifted.lead();
        let lc = lc.clone();
        let lexp = lm.exp.clone();
        let unit = Mono {
            pows: Vec::new(),
            exp: exp_neg(&lexp),
        };
        let f = shifted.mul_mono(&unit, &lc.recip());
        (
            lc,
            Mono {
                pows: mins.pows,
                exp: lexp,
            },
            f,
        )
    }
}

const DIV_STEP_BASE: usize = 20_000;

/// Exact division in the Laurent ring, `None` when `d` does not divide `n`.
pub(crate) fn div_exact(n: &Poly, d: &Poly) -> Option<Poly> {
    if n.is_zero() {
        return Some(Poly::zero());
    }
    if let Some((m, c)) = d.single_term() {
        return Some(n.mul_mono(&m.inv(), &c.recip()));
    }
    let dmins = Mono::from_pows(d.min_pows());
    let nmins = Mono::from_pows(n.min_pows());
    let d1 = if dmins.is_one() {
        d.clone()
    } else {
        d.mul_mono(&dmins.inv(), &BigRational::one())
    };
    let n1 = if nmins.is_one() {
        n.clone()
    } else {
        n.mul_mono(&nmins.inv(), &BigRational::one())
    };
    if d1.max_degree() > n1.max_degree() {
        return None;
    }
    let nmax = n1.max_pows();
    for (a, k) in d1.max_pows() {
        if nmax.get(&a).copied().unwrap_or(0) < k {
            return None;
        }
    }
    let (dm, dc) = d1.lead();
    let (dm, dc) = (dm.clone(), dc.clone());
    // exponential parts of an exact quotient lie in [lo(n) - lo(d), hi(n) - hi(d)]
    let (nlo, nhi) = n1.exp_range();
    let (dlo, dhi) = d1.exp_range();
    let (lo, hi) = (exp_sum(&nlo, &exp_neg(&dlo)), exp_sum(&nhi, &exp_neg(&dhi)));
    if exp_cmp(&lo, &hi) == Ordering::Greater {
        return None;
    }
    let mut common = Denominator::new();
    n1.exp_denominator(&mut common);
    d1.exp_denominator(&mut common);
    let bounds = match (n1.exp_box(&common), d1.exp_box(&common)) {
        (Some(nb), Some(db)) => Some(quotient_box(&nb, &db)?),
        _ => None,
    };
    let mut r = n1;
    let mut q = Poly::zero();
    let limit = DIV_STEP_BASE + 50 * r.len();
    let mut steps = 0;
    while !r.is_zero() {
        steps += 1;
        if steps > limit {
            return None;
        }
        let (rm, rc) = r.lead();
        let t = rm.div(&dm);
        if t.pows.iter().any(|(_, k)| *k < 0) {
            return None;
        }
        if t.exp != lo && t.exp != hi && (exp_cmp(&t.exp, &lo) == Ordering::Less || exp_cmp(&t.exp, &hi) == Ordering::Greater) {
            return None;
        }
        if let Some(b) = &bounds {
            if !in_box(&t.exp, b, &common) {
                return None;
            }
        }
        let coeff = rc / &dc;
        let sub = d1.mul_mono(&t, &-coeff.clone());
        r.add_assign(&sub);
        q.add_term(t, coeff);
    }
    let shift = nmins.div(&dmins);
    Some(q.mul_mono(&shift, &BigRational::one()))
}

type ExpBox = BTreeMap<Mono, (BigRational, BigRational)>;
type Denominator = BTreeMap<Poly, u32>;

/// Coordinates of an exponential argument: the coefficients of `arg * den`.
/// `None` when `den` is not a multiple of the argument's denominator.
fn exp_coords(e: &Option<Expr>, den: &Denominator) -> Option<BTreeMap<Mono, BigRational>> {
    let Some(arg) = e else {
        return Some(BTreeMap::new());
    };
    let r = canonical_rat(arg);
    let mut cofactor = Poly::one();
    for (f, k) in den {
        let own = r.den.get(f).copied().unwrap_or(0);
        if own > *k {
            return None;
        }
        cofactor = cofactor.mul(&f.pow(k - own));
    }
    if r.den.keys().any(|f| !den.contains_key(f)) {
        return None;
    }
    Some(r.num.mul(&cofactor).terms)
}

impl Poly {
    /// Common multiple of the denominators of the exponential arguments.
    fn exp_denominator(&self, out: &mut Denominator) {
        for m in self.terms.keys() {
            if let Some(arg) = &m.exp {
                for (f, k) in canonical_rat(arg).den {
                    let slot = out.entry(f).or_insert(0);
                    *slot = (*slot).max(k);
                }
            }
        }
    }

    /// Per-coordinate range of the exponential arguments.
    fn exp_box(&self, den: &Denominator) -> Option<ExpBox> {
        let coords = self
            .terms
            .keys()
            .map(|m| exp_coords(&m.exp, den))
            .collect::<Option<Vec<_>>>()?;
        let mut keys: Vec<&Mono> = coords.iter().flat_map(|c| c.keys()).collect();
        keys.sort();
        keys.dedup();
        let zero = BigRational::zero();
        let mut out = ExpBox::new();
        for k in keys {
            let vals = coords.iter().map(|c| c.get(k).unwrap_or(&zero));
            let lo = vals.clone().min().expect("nonempty").clone();
            let hi = vals.max().expect("nonempty").clone();
            out.insert(k.clone(), (lo, hi));
        }
        Some(out)
    }
}

/// Box containing the exponential arguments of an exact quotient, `None` when
/// it is empty.
fn quotient_box(n: &ExpBox, d: &ExpBox) -> Option<ExpBox> {
    let zero = (BigRational::zero(), BigRational::zero());
    let mut out = ExpBox::new();
    for k in n.keys().chain(d.keys()) {
        let (nlo, nhi) = n.get(k).unwrap_or(&zero);
        let (dlo, dhi) = d.get(k).unwrap_or(&zero);
        let (lo, hi) = (nlo - dlo, nhi - dhi);
        if lo > hi {
            return None;
        }
        out.insert(k.clone(), (lo, hi));
    }
    Some(out)
}

fn in_box(e: &Option<Expr>, b: &ExpBox, den: &Denominator) -> bool {
    let Some(c) = exp_coords(e, den) else {
        return true;
    };
    let zero = BigRational::zero();
    c.keys().all(|k| b.contains_key(k))
        && b.iter().all(|(k, (lo, hi))| {
            let v = c.get(k).unwrap_or(&zero);
            lo <= v && v <= hi
        })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Merge {
    /// Product of factor lists.
    Add,
    /// Least common multiple.
    Max,
}

fn combine(a: u32, b: u32, mode: Merge) -> u32 {
    match mode {
        Merge::Add => a + b,
        Merge::Max => a.max(b),
    }
}

/// Inserts `f^e` into a factor list, splitting factors related by exact
/// division. Returns true when any splitting happened.
fn merge_factor(den: &mut BTreeMap<Poly, u32>, f: Poly, e: u32, mode: Merge) -> bool {
    if e == 0 || f.is_one() {
        return false;
    }
    if let Some(x) = den.get_mut(&f) {
        *x = combine(*x, e, mode);
        return false;
    }
    let keys: Vec<Poly> = den.keys().cloned().collect();
    for g in keys {
        if let Some(q) = div_exact(&f, &g) {
            if is_unit_constant(&q) {
                continue;
            }
            let (_, _, qf) = q.split_content();
            merge_factor(den, g, e, mode);
            merge_factor(den, qf, e, mode);
            return true;
        }
        if let Some(q) = div_exact(&g, &f) {
            if is_unit_constant(&q) {
                continue;
            }
            let eg = den.remove(&g).expect("key present");
            let (_, _, qf) = q.split_content();
            merge_factor(den, f.clone(), eg, Merge::Add);
            merge_factor(den, qf, eg, Merge::Add);
            merge_factor(den, f, e, mode);
            return true;
        }
    }
    den.insert(f, e);
    false
}

fn is_unit_constant(p: &Poly) -> bool {
    p.single_term().is_some_and(|(m, _)| m.pows.is_empty())
}

/// Expresses `f` as a product of the factors in `basis`.
fn decompose(f: &Poly, basis: &BTreeMap<Poly, u32>) -> Option<BTreeMap<Poly, u32>> {
    let mut out = BTreeMap::new();
    if basis.contains_key(f) {
        out.insert(f.clone(), 1);
        return Some(out);
    }
    let mut rem = f.clone();
    for g in basis.keys() {
        while rem.len() > 1 {
            match div_exact(&rem, g) {
                Some(q) => {
                    *out.entry(g.clone()).or_insert(0) += 1;
                    rem = q;
                }
                None => break,
            }
        }
    }
    if is_unit_constant(&rem) && !out.is_empty() {
        Some(out)
    } else {
        None
    }
}

/// A rational function: `num / prod(den[f]^e)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub(crate) struct Rat {
    pub num: Poly,
    pub den: BTreeMap<Poly, u32>,
}

impl Rat {
    pub fn zero() -> Self {
        Rat::default()
    }

    pub fn one() -> Self {
        Rat::from_poly(Poly::one())
    }

    pub fn from_poly(num: Poly) -> Self {
        Rat {
            num,
            den: BTreeMap::new(),
        }
    }

    pub fn constant(q: BigRational) -> Self {
        Rat::from_poly(Poly::constant(q))
    }

    pub fn atom(a: Atom) -> Self {
        Rat::from_poly(Poly::monomial(Mono::atom(a), BigRational::one()))
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn neg(&self) -> Rat {
        Rat {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    fn expand_den(den: &BTreeMap<Poly, u32>) -> Poly {
        let mut out = Poly::one();
        for (f, e) in den {
            out = out.mul(&f.pow(*e));
        }
        out
    }

    fn reduce(&mut self) {
        if self.num.is_zero() {
            self.den.clear();
            return;
        }
        let keys: Vec<Poly> = self.den.keys().cloned().collect();
        for f in keys {
            let mut e = self.den[&f];
            while e > 0 {
                match div_exact(&self.num, &f) {
                    Some(q) => {
                        self.num = q;
                        e -= 1;
                    }
                    None => break,
                }
            }
            if e == 0 {
                self.den.remove(&f);
            } else {
                self.den.insert(f, e);
            }
        }
    }

    fn cancel(num: &mut Poly, den: &mut BTreeMap<Poly, u32>) {
        if num.is_zero() {
            return;
        }
        let keys: Vec<Poly> = den.keys().cloned().collect();
        for f in keys {
            let mut e = den[&f];
            while e > 0 {
                match div_exact(num, &f) {
                    Some(q) => {
                        *num = q;
                        e -= 1;
                    }
                    None => break,
                }
            }
            if e == 0 {
                den.remove(&f);
            } else {
                den.insert(f, e);
            }
        }
    }

    pub fn sum(items: Vec<Rat>) -> Rat {
        // group by denominator first
        let mut groups: BTreeMap<BTreeMap<Poly, u32>, Poly> = BTreeMap::new();
        for r in items {
            if r.is_zero() {
                continue;
            }
            groups.entry(r.den).or_default().add_assign(&r.num);
        }
        groups.retain(|_, n| !n.is_zero());
        if groups.is_empty() {
            return Rat::zero();
        }
        if groups.len() == 1 {
            let (den, num) = groups.into_iter().next().unwrap();
            let mut r = Rat { num, den };
            r.reduce();
            return r;
        }
        let mut lcm: BTreeMap<Poly, u32> = BTreeMap::new();
        for den in groups.keys() {
            for (f, e) in den {
                merge_factor(&mut lcm, f.clone(), *e, Merge::Max);
            }
        }
        // express every group denominator in the lcm basis
        let mut expressed: Vec<(BTreeMap<Poly, u32>, Poly)> = Vec::with_capacity(groups.len());
        for (den, num) in groups {
            let mut need: BTreeMap<Poly, u32> = BTreeMap::new();
            for (f, e) in den {
                match decompose(&f, &lcm) {
                    Some(parts) => {
                        for (g, k) in parts {
                            *need.entry(g).or_insert(0) += k * e;
                        }
                    }
                    None => {
                        let slot = lcm.entry(f.clone()).or_insert(0);
                        *slot = (*slot).max(e);
                        *need.entry(f).or_insert(0) += e;
                    }
                }
            }
            expressed.push((need, num));
        }
        for (need, _) in &expressed {
            for (g, k) in need {
                let slot = lcm.get_mut(g).expect("factor in lcm");
                if *slot < *k {
                    *slot = *k;
                }
            }
        }
        let mut num = Poly::zero();
        for (need, n) in expressed {
            let mut cof = n;
            for (g, e) in &lcm {
                let k = e - need.get(g).copied().unwrap_or(0);
                if k > 0 {
                    cof = cof.mul(&g.pow(k));
                }
            }
            num.add_assign(&cof);
        }
        let mut r = Rat { num, den: lcm };
        r.reduce();
        r
    }

    pub fn mul(&self, other: &Rat) -> Rat {
        if self.is_zero() || other.is_zero() {
            return Rat::zero();
        }
        let mut an = self.num.clone();
        let mut bn = other.num.clone();
        let mut ad = self.den.clone();
        let mut bd = other.den.clone();
        Rat::cancel(&mut an, &mut bd);
        Rat::cancel(&mut bn, &mut ad);
        let num = an.mul(&bn);
        let mut split = false;
        for (f, e) in bd {
            split |= merge_factor(&mut ad, f, e, Merge::Add);
        }
        let mut r = Rat { num, den: ad };
        if split {
            r.reduce();
        }
        r
    }

    pub fn inv(&self) -> Result<Rat> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let (c, m, f) = self.num.split_content();
        let num = Rat::expand_den(&self.den).mul_mono(&m.inv(), &c.recip());
        let mut den = BTreeMap::new();
        if !f.is_one() {
            den.insert(f, 1);
        }
        Ok(Rat { num, den })
    }

    pub fn powi(&self, k: i32) -> Result<Rat> {
        if k < 0 {
            return self.inv()?.powi(-k);
        }
        if k == 0 {
            return Ok(Rat::one());
        }
        if k == 1 {
            return Ok(self.clone());
        }
        let num = self.num.pow(k as u32);
        let den = self.den.iter().map(|(f, e)| (f.clone(), e * k as u32)).collect();
        let mut r = Rat { num, den };
        r.reduce();
        Ok(r)
    }

    pub fn from_expr(e: &Expr) -> Result<Rat> {
        Ok(match e.node() {
            Node::Num(q) => Rat::constant(q.clone()),
            Node::Atom(a) => match canonical_atom(a)? {
                Some(a) => Rat::atom(a),
                None => Rat::zero(),
            },
            Node::Add(xs) => {
                let items = xs.iter().map(Rat::from_expr).collect::<Result<Vec<_>>>()?;
                Rat::sum(items)
            }
            Node::Mul(xs) => {
                let mut acc = Rat::one();
                for x in xs {
                    let r = Rat::from_expr(x)?;
                    if r.is_zero() {
                        // still validate remaining factors for hidden divisions by zero
                        for y in xs {
                            Rat::from_expr(y)?;
                        }
                        return Ok(Rat::zero());
                    }
                    acc = acc.mul(&r);
                }
                acc
            }
            Node::Pow(b, k) => Rat::from_expr(b)?.powi(*k)?,
            Node::Exp(arg) => {
                let r = Rat::from_expr(arg)?;
                if r.is_zero() {
                    Rat::one()
                } else {
                    Rat::from_poly(Poly::monomial(
                        Mono {
                            pows: Vec::new(),
                            exp: Some(r.to_expr()),
                        },
                        BigRational::one(),
                    ))
                }
            }
        })
    }

    pub fn to_expr(&self) -> Expr {
        let num = poly_to_expr(&self.num);
        if self.den.is_empty() {
            return num;
        }
        let mut factors = vec![num];
        for (f, e) in &self.den {
            factors.push(Expr::pow(poly_to_expr(f), -(*e as i32)));
        }
        Expr::mul(factors)
    }
}

/// Canonicalizes the interior of an atom. `None` means the atom is zero.
fn canonical_atom(a: &Atom) -> Result<Option<Atom>> {
    Ok(Some(match a.kind() {
        AtomKind::Indep(_) | AtomKind::Jet { .. } | AtomKind::Param(_) => a.clone(),
        AtomKind::Func { name, deriv, args } => {
            let args = args.iter().map(|x| Ok(Rat::from_expr(x)?.to_expr())).collect::<Result<Vec<_>>>()?;
            Atom::new(AtomKind::Func {
                name: name.clone(),
                deriv: deriv.clone(),
                args,
            })
        }
        AtomKind::Antiderivative { integrand, var } => {
            let r = Rat::from_expr(integrand)?;
            if r.is_zero() {
                return Ok(None);
            }
            Atom::new(AtomKind::Antiderivative {
                integrand: r.to_expr(),
                var: var.clone(),
            })
        }
        AtomKind::Log(arg) => {
            let r = Rat::from_expr(arg)?;
            if r.num.is_one() && r.den.is_empty() {
                return Ok(None);
            }
            Atom::new(AtomKind::Log(r.to_expr()))
        }
    }))
}

pub(crate) fn mono_to_expr(m: &Mono, c: &BigRational) -> Expr {
    let mut factors = Vec::with_capacity(m.pows.len() + 2);
    factors.push(Expr::rational(c.clone()));
    for (a, k) in &m.pows {
        factors.push(Expr::pow(Expr::atom(a.clone()), *k));
    }
    if let Some(arg) = &m.exp {
        factors.push(Expr::exp(arg.clone()));
    }
    Expr::mul(factors)
}

pub(crate) fn poly_to_expr(p: &Poly) -> Expr {
    Expr::add(p.terms.iter().rev().map(|(m, c)| mono_to_expr(m, c)).collect())
}
