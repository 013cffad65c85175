//! Point transformations prolonged to jets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::expr::{normalize, partial, raw_partial, substitute, Atom, AtomKind, Expr};

/// Old variables written in terms of new ones: `x^i = phi^i(z, w)`,
/// `y = psi(z, w)`. `old_indep[i]` is paired with `new_indep[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointTransformation {
    old_indep: Vec<String>,
    old_dep: String,
    new_indep: Vec<String>,
    new_dep: String,
    phi: Vec<Expr>,
    psi: Expr,
}

fn distinct(names: &[String]) -> bool {
    names.iter().collect::<BTreeSet<_>>().len() == names.len()
}

impl PointTransformation {
    pub fn new(
        old_indep: Vec<String>,
        old_dep: impl Into<String>,
        new_indep: Vec<String>,
        new_dep: impl Into<String>,
        phi: Vec<Expr>,
        psi: Expr,
    ) -> Result<Self> {
        let tr = PointTransformation {
            old_indep,
            old_dep: old_dep.into(),
            new_indep,
            new_dep: new_dep.into(),
            phi,
            psi,
        };
        tr.validate()?;
        Ok(tr)
    }

    /// `x^i = z^i`, `y = w`.
    pub fn identity(old_indep: &[&str], old_dep: &str, new_indep: &[&str], new_dep: &str) -> Result<Self> {
        PointTransformation::new(
            old_indep.iter().map(|s| s.to_string()).collect(),
            old_dep,
            new_indep.iter().map(|s| s.to_string()).collect(),
            new_dep,
            new_indep.iter().map(|z| Expr::indep(z)).collect(),
            Expr::dep(new_dep),
        )
    }

    fn validate(&self) -> Result<()> {
        let p = self.old_indep.len();
        if p == 0 {
            return Err(Error::InvalidTransformation("no independent variables".into()));
        }
        if self.new_indep.len() != p || self.phi.len() != p {
            return Err(Error::InvalidTransformation(format!(
                "{p} old independent variables but {} new ones and {} expressions",
                self.new_indep.len(),
                self.phi.len()
            )));
        }
        if !distinct(&self.old_indep) || !distinct(&self.new_indep) {
            return Err(Error::InvalidTransformation("repeated variable name".into()));
        }
        if self.new_indep.contains(&self.new_dep) || self.old_indep.contains(&self.old_dep) {
            return Err(Error::InvalidTransformation(
                "dependent variable also listed as independent".into(),
            ));
        }
        let mut bad: Option<String> = None;
        for e in self.phi.iter().chain(std::iter::once(&self.psi)) {
            e.visit_atoms(&mut |a| {
                let ok = match a.kind() {
                    AtomKind::Indep(v) => self.new_indep.contains(v),
                    AtomKind::Antiderivative { var, .. } => self.new_indep.contains(var),
                    AtomKind::Jet { dep, index } => dep == &self.new_dep && index.is_empty(),
                    AtomKind::Func { .. } | AtomKind::Param(_) | AtomKind::Log(_) => true,
                };
                if !ok && bad.is_none() {
                    bad = Some(a.to_string());
                }
            });
        }
        match bad {
            Some(a) => Err(Error::InvalidTransformation(format!(
                "`{a}` is not a new variable, function or parameter"
            ))),
            None => Ok(()),
        }
    }

    pub fn old_indep(&self) -> &[String] {
        &self.old_indep
    }

    pub fn old_dep(&self) -> &str {
        &self.old_dep
    }

    pub fn new_indep(&self) -> &[String] {
        &self.new_indep
    }

    pub fn new_dep(&self) -> &str {
        &self.new_dep
    }

    pub fn phi(&self) -> &[Expr] {
        &self.phi
    }

    pub fn psi(&self) -> &Expr {
        &self.psi
    }

    /// Bindings for old independent variables and the old dependent variable.
    pub fn point_bindings(&self) -> BTreeMap<Atom, Expr> {
        let mut m: BTreeMap<Atom, Expr> = self
            .old_indep
            .iter()
            .zip(&self.phi)
            .map(|(x, e)| (Atom::indep(x), e.clone()))
            .collect();
        m.insert(Atom::jet::<&str>(&self.old_dep, &[]), self.psi.clone());
        m
    }

    /// `self` followed by `next`: old variables of `self` written in the new
    /// variables of `next`.
    pub fn compose(&self, next: &PointTransformation) -> Result<PointTransformation> {
        if self.new_indep != next.old_indep || self.new_dep != next.old_dep {
            return Err(Error::VariableMismatch(format!(
                "cannot compose: ({}; {}) are not ({}; {})",
                self.new_indep.join(","),
                self.new_dep,
                next.old_indep.join(","),
                next.old_dep
            )));
        }
        let m = next.point_bindings();
        let phi = self.phi.iter().map(|e| substitute(e, &m)).collect::<Result<Vec<_>>>()?;
        let psi = substitute(&self.psi, &m)?;
        PointTransformation::new(
            self.old_indep.clone(),
            self.old_dep.clone(),
            next.new_indep.clone(),
            next.new_dep.clone(),
            phi,
            psi,
        )
    }

    /// Solves `y = L w + J` for `w` when `psi` is affine in `w`, returning
    /// `(y - J)/L` with `y` the old dependent variable.
    pub fn solve_dependent(&self) -> Result<Expr> {
        let w = Atom::jet::<&str>(&self.new_dep, &[]);
        let l = partial(&self.psi, &w)?;
        if !partial(&l, &w)?.is_zero()? {
            return Err(Error::InvalidTransformation(format!(
                "{} is not affine in {}",
                self.psi, self.new_dep
            )));
        }
        if l.is_zero()? {
            return Err(Error::SingularTransformation(format!("d{}/d{}", self.old_dep, self.new_dep)));
        }
        let j = normalize(&(&self.psi - &l * Expr::atom(w)))?;
        normalize(&((Expr::dep(&self.old_dep) - j) / l))
    }

    pub fn to_json(&self) -> Value {
        let mut maps = serde_json::Map::new();
        for (x, e) in self.old_indep.iter().zip(&self.phi) {
            maps.insert(x.clone(), json!(e.to_string()));
        }
        maps.insert(self.old_dep.clone(), json!(self.psi.to_string()));
        json!({
            "old": {"indep": self.old_indep, "dep": self.old_dep},
            "new": {"indep": self.new_indep, "dep": self.new_dep},
            "maps": maps,
        })
    }
}

impl fmt::Display for PointTransformation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (x, e) in self.old_indep.iter().zip(&self.phi) {
            write!(f, "{x} = {e}; ")?;
        }
        write!(f, "{} = {}", self.old_dep, self.psi)
    }
}

/// Total derivative with respect to the independent variable `var`, for
/// expressions in the jets of `dep`.
pub fn total_derivative(e: &Expr, var: &str, dep: &str) -> Result<Expr> {
    let mut terms = vec![raw_partial(e, &Atom::indep(var))];
    for jet in e.jets_of(dep) {
        let AtomKind::Jet { index, .. } = jet.kind() else {
            unreachable!()
        };
        let mut next = index.clone();
        next.push(var.to_string());
        terms.push(Expr::jet(dep, &next) * raw_partial(e, &jet));
    }
    normalize(&Expr::add(terms))
}

/// Images of the old jets under a prolonged point transformation.
#[derive(Debug, Clone, PartialEq)]
pub struct ProlongedMap {
    pub order: usize,
    /// Old jet to its expression in the new variables and jets.
    pub entries: BTreeMap<Atom, Expr>,
    /// Denominators assumed not to vanish.
    pub assumptions: Vec<Expr>,
}

impl ProlongedMap {
    pub fn get(&self, jet: &Atom) -> Option<&Expr> {
        self.entries.get(jet)
    }
}

/// Lazily computed prolongation.
struct Prolongation<'a> {
    tr: &'a PointTransformation,
    /// `inv[i][k]`: entry of the inverse Jacobian, old index `i`, new index `k`.
    inv: Vec<Vec<Expr>>,
    det: Expr,
    cache: BTreeMap<Vec<String>, Expr>,
}

fn determinant(m: &[Vec<Expr>]) -> Expr {
    match m.len() {
        0 => Expr::one(),
        1 => m[0][0].clone(),
        2 => &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0],
        n => Expr::add(
            (0..n)
                .map(|j| {
                    let sign = if j % 2 == 0 { Expr::one() } else { Expr::int(-1) };
                    sign * &m[0][j] * determinant(&minor(m, 0, j))
                })
                .collect(),
        ),
    }
}

fn minor(m: &[Vec<Expr>], row: usize, col: usize) -> Vec<Vec<Expr>> {
    m.iter()
        .enumerate()
        .filter(|(r, _)| *r != row)
        .map(|(_, cells)| {
            cells
                .iter()
                .enumerate()
                .filter(|(c, _)| *c != col)
                .map(|(_, e)| e.clone())
                .collect()
        })
        .collect()
}

impl<'a> Prolongation<'a> {
    fn new(tr: &'a PointTransformation) -> Result<Self> {
        let p = tr.old_indep.len();
        // m[k][i] = D_k phi^i
        let mut m = vec![Vec::with_capacity(p); p];
        for (k, z) in tr.new_indep.iter().enumerate() {
            for phi in &tr.phi {
                m[k].push(total_derivative(phi, z, &tr.new_dep)?);
            }
        }
        let det = normalize(&determinant(&m))?;
        if det.is_literal_zero() {
            return Err(Error::SingularTransformation(format!(
                "det(D_k {}) for {}",
                tr.old_indep.join(", "),
                tr
            )));
        }
        let mut inv = vec![Vec::with_capacity(p); p];
        for (i, row) in inv.iter_mut().enumerate() {
            for k in 0..p {
                let cof = if p == 1 {
                    Expr::one()
                } else {
                    let sign = if (i + k) % 2 == 0 { Expr::one() } else { Expr::int(-1) };
                    sign * determinant(&minor(&m, k, i))
                };
                row.push(normalize(&(cof / &det))?);
            }
        }
        let mut cache = BTreeMap::new();
        cache.insert(Vec::new(), normalize(&tr.psi)?);
        Ok(Prolongation { tr, inv, det, cache })
    }

    fn entry(&mut self, index: &[String]) -> Result<Expr> {
        if let Some(e) = self.cache.get(index) {
            return Ok(e.clone());
        }
        let (last, parent) = index.split_last().expect("order-0 entry is cached");
        let i = self
            .tr
            .old_indep
            .iter()
            .position(|x| x == last)
            .ok_or_else(|| Error::VariableMismatch(format!("{last} is not an old independent variable")))?;
        let base = self.entry(parent)?;
        let mut terms = Vec::with_capacity(self.tr.new_indep.len());
        for (k, z) in self.tr.new_indep.iter().enumerate() {
            terms.push(&self.inv[i][k] * total_derivative(&base, z, &self.tr.new_dep)?);
        }
        let e = normalize(&Expr::add(terms))?;
        self.cache.insert(index.to_vec(), e.clone());
        Ok(e)
    }
}

/// Sorted multi-indices of length `r` over `vars`.
fn multi_indices(vars: &[String], r: usize) -> Vec<Vec<String>> {
    let mut sorted = vars.to_vec();
    sorted.sort();
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(r);
    fn rec(vars: &[String], start: usize, r: usize, cur: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..vars.len() {
            cur.push(vars[i].clone());
            rec(vars, i, r, cur, out);
            cur.pop();
        }
    }
    rec(&sorted, 0, r, &mut cur, &mut out);
    out
}

/// Every old jet up to order `n` written in the new variables.
pub fn transform_derivatives(tr: &PointTransformation, n: usize) -> Result<ProlongedMap> {
    let mut pr = Prolongation::new(tr)?;
    let mut entries = BTreeMap::new();
    for r in 0..=n {
        for index in multi_indices(&tr.old_indep, r) {
            let e = pr.entry(&index)?;
            entries.insert(Atom::jet(&tr.old_dep, &index), e);
        }
    }
    Ok(ProlongedMap {
        order: n,
        entries,
        assumptions: vec![pr.det],
    })
}

/// Transformed equation together with the denominators assumed nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedEquation {
    pub expr: Expr,
    pub assumptions: Vec<Expr>,
}

/// Rewrites `eq`, given in the old variables, in the new ones: old jets go
/// through the prolongation, everything else through the point map.
pub fn transform_equation_with_assumptions(
    eq: &Expr,
    tr: &PointTransformation,
    n: usize,
) -> Result<TransformedEquation> {
    let jets = eq.jets_of(&tr.old_dep);
    for j in &jets {
        let order = j.jet_order().unwrap_or(0);
        if order > n {
            return Err(Error::OrderExceeded {
                jet: j.to_string(),
                found: order,
                max: n,
            });
        }
    }
    let mut pr = Prolongation::new(tr)?;
    let mut bindings = tr.point_bindings();
    for j in &jets {
        let AtomKind::Jet { index, .. } = j.kind() else {
            unreachable!()
        };
        if !index.is_empty() {
            bindings.insert(j.clone(), pr.entry(index)?);
        }
    }
    Ok(TransformedEquation {
        expr: substitute(eq, &bindings)?,
        assumptions: vec![pr.det],
    })
}

pub fn transform_equation(eq: &Expr, tr: &PointTransformation, n: usize) -> Result<Expr> {
    Ok(transform_equation_with_assumptions(eq, tr, n)?.expr)
}
