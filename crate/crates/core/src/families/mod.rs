//! Quasilinear equation families, form-preservation checks and induced
//! actions on the arbitrary coefficients.

mod catalog;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::expr::{dependency_closure, group_by_jets, poly_has_jets, Atom, AtomKind, Expr, JetMonomial, Rat};
use crate::jets::{transform_equation_with_assumptions, PointTransformation};

pub use catalog::{catalog, transformation, CATALOG_FAMILIES, CATALOG_TRANSFORMATIONS};

/// An arbitrary coefficient `name(args)` multiplying `monomial`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefficientSlot {
    pub name: String,
    /// Independent variables and jets of the dependent variable.
    pub args: Vec<Atom>,
    pub monomial: JetMonomial,
}

impl CoefficientSlot {
    pub fn function(&self) -> Expr {
        Expr::func(&self.name, self.args.iter().cloned().map(Expr::atom).collect())
    }
}

/// `lead + sum(slot_j * monomial_j) = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquationFamily {
    pub name: String,
    pub indep: Vec<String>,
    pub dep: String,
    pub order: usize,
    pub lead: JetMonomial,
    pub slots: Vec<CoefficientSlot>,
}

impl EquationFamily {
    pub fn new(
        name: impl Into<String>,
        indep: Vec<String>,
        dep: impl Into<String>,
        lead: JetMonomial,
        slots: Vec<CoefficientSlot>,
    ) -> Result<Self> {
        let fam = EquationFamily {
            name: name.into(),
            indep,
            dep: dep.into(),
            order: lead.order(),
            lead,
            slots,
        };
        fam.validate()?;
        Ok(fam)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidFamily(format!("{}: {m}", self.name)));
        let jet_ok = |a: &Atom| match a.kind() {
            AtomKind::Jet { dep, index } => dep == &self.dep && index.iter().all(|v| self.indep.contains(v)),
            _ => false,
        };
        if self.indep.is_empty() {
            return bad("no independent variables".into());
        }
        if self.lead.is_one() || !self.lead.atoms().all(jet_ok) {
            return bad(format!("lead monomial {} is not a jet monomial of {}", self.lead, self.dep));
        }
        let mut names = BTreeSet::new();
        let mut monos = BTreeSet::from([self.lead.clone()]);
        for s in &self.slots {
            if !names.insert(&s.name) {
                return bad(format!("slot {} declared twice", s.name));
            }
            if !monos.insert(s.monomial.clone()) {
                return bad(format!("monomial {} used twice", s.monomial));
            }
            if s.monomial.is_one() || !s.monomial.atoms().all(jet_ok) || s.monomial.order() >= self.order {
                return bad(format!("slot {} has invalid monomial {}", s.name, s.monomial));
            }
            for a in &s.args {
                let ok = match a.kind() {
                    AtomKind::Indep(v) => self.indep.contains(v),
                    _ => jet_ok(a) && a.jet_order().unwrap_or(0) < self.order,
                };
                if !ok {
                    return bad(format!("slot {} has invalid argument {a}", s.name));
                }
            }
        }
        Ok(())
    }

    pub fn slot(&self, name: &str) -> Option<&CoefficientSlot> {
        self.slots.iter().find(|s| s.name == name)
    }

    /// Generic member with the slots as unevaluated functions.
    pub fn template(&self) -> Expr {
        Expr::add(
            std::iter::once(self.lead.to_expr())
                .chain(self.slots.iter().map(|s| s.function() * s.monomial.to_expr()))
                .collect(),
        )
    }

    /// Reads a family off a template expression: one jet monomial with
    /// coefficient 1, every other term a function of plain variables times a
    /// distinct jet monomial.
    pub fn from_template(name: &str, e: &Expr, indep: Vec<String>, dep: &str) -> Result<Self> {
        let bad = |m: String| Error::InvalidFamily(format!("{name}: {m}"));
        let r = Rat::from_expr(e)?;
        let deps = BTreeSet::from([dep.to_string()]);
        let grouping = group_by_jets(&r, &deps);
        if !grouping.jet_denominators.is_empty() {
            return Err(bad("jets in a denominator".into()));
        }
        let mut lead = None;
        let mut slots = Vec::new();
        for (pows, coef) in grouping.groups {
            if pows.iter().any(|(_, k)| *k < 0) {
                return Err(bad("negative power of a jet".into()));
            }
            let mono = JetMonomial(pows.into_iter().map(|(a, k)| (a, k as u32)).collect());
            let c = coef.to_expr();
            if c == Expr::one() {
                if lead.replace(mono).is_some() {
                    return Err(bad("more than one term with coefficient 1".into()));
                }
                continue;
            }
            let slot = c.as_atom().and_then(|a| match a.kind() {
                AtomKind::Func { name, deriv, args } if deriv.is_empty() => {
                    let args: Option<Vec<Atom>> = args.iter().map(|x| x.as_atom().cloned()).collect();
                    args.map(|args| CoefficientSlot {
                        name: name.clone(),
                        args,
                        monomial: mono.clone(),
                    })
                }
                _ => None,
            });
            match slot {
                Some(s) => slots.push(s),
                None => return Err(bad(format!("coefficient {c} of {mono} is not an arbitrary function"))),
            }
        }
        let lead = lead.ok_or_else(|| bad("no lead term with coefficient 1".into()))?;
        slots.sort_by(|a, b| {
            b.monomial
                .order()
                .cmp(&a.monomial.order())
                .then_with(|| a.monomial.cmp(&b.monomial))
        });
        EquationFamily::new(name, indep, dep, lead, slots)
    }

    /// Same family with every slot taking all independent variables and the
    /// jets up to order `s`.
    pub fn enlarged(&self, name: &str, s: usize) -> Result<Self> {
        let mut args: Vec<Atom> = self.indep.iter().map(|v| Atom::indep(v)).collect();
        for r in 0..=s {
            for idx in multisets(&self.indep, r) {
                args.push(Atom::jet(&self.dep, &idx));
            }
        }
        let slots = self
            .slots
            .iter()
            .map(|sl| CoefficientSlot {
                args: args.clone(),
                ..sl.clone()
            })
            .collect();
        EquationFamily::new(name, self.indep.clone(), self.dep.clone(), self.lead.clone(), slots)
    }

    fn renamer<'a>(&'a self, new_indep: &'a [String], new_dep: &'a str) -> Result<Renamer<'a>> {
        if new_indep.len() != self.indep.len() {
            return Err(Error::VariableMismatch(format!(
                "family {} has {} independent variables, got {}",
                self.name,
                self.indep.len(),
                new_indep.len()
            )));
        }
        Ok(Renamer {
            old: &self.indep,
            new: new_indep,
            dep: new_dep,
        })
    }

    /// The family member with coefficients `coeffs`, written in the new
    /// variables. Missing slots are 0.
    pub fn member(&self, coeffs: &BTreeMap<String, Expr>, new_indep: &[String], new_dep: &str) -> Result<Expr> {
        let rn = self.renamer(new_indep, new_dep)?;
        let mut terms = vec![rn.monomial(&self.lead).to_expr()];
        for s in &self.slots {
            if let Some(b) = coeffs.get(&s.name) {
                terms.push(b * rn.monomial(&s.monomial).to_expr());
            }
        }
        Ok(Expr::add(terms))
    }
}

impl fmt::Display for EquationFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = 0", self.template())
    }
}

fn multisets(vars: &[String], r: usize) -> Vec<Vec<String>> {
    if r == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, v) in vars.iter().enumerate() {
        for mut rest in multisets(&vars[i..], r - 1) {
            rest.insert(0, v.clone());
            out.push(rest);
        }
    }
    out
}

/// Positional correspondence between family variables and new variables.
struct Renamer<'a> {
    old: &'a [String],
    new: &'a [String],
    dep: &'a str,
}

impl Renamer<'_> {
    fn var(&self, v: &str) -> String {
        let i = self.old.iter().position(|o| o == v).expect("validated family variable");
        self.new[i].clone()
    }

    fn atom(&self, a: &Atom) -> Atom {
        match a.kind() {
            AtomKind::Indep(v) => Atom::indep(&self.var(v)),
            AtomKind::Jet { index, .. } => {
                let idx: Vec<String> = index.iter().map(|v| self.var(v)).collect();
                Atom::jet(self.dep, &idx)
            }
            _ => a.clone(),
        }
    }

    fn monomial(&self, m: &JetMonomial) -> JetMonomial {
        let mut pows: Vec<(Atom, u32)> = m.0.iter().map(|(a, k)| (self.atom(a), *k)).collect();
        pows.sort();
        JetMonomial(pows)
    }
}

/// The map `B = T(A)` on the coefficients induced by a form-preserving
/// transformation.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedAction {
    /// Slot name to transformed coefficient, in slot order.
    pub coefficients: Vec<(String, Expr)>,
    pub assumptions: Vec<Expr>,
}

impl InducedAction {
    pub fn get(&self, slot: &str) -> Option<&Expr> {
        self.coefficients.iter().find(|(s, _)| s == slot).map(|(_, e)| e)
    }

    pub fn as_map(&self) -> BTreeMap<String, Expr> {
        self.coefficients.iter().cloned().collect()
    }

    pub fn to_json(&self) -> Value {
        let mut m = serde_json::Map::new();
        for (s, e) in &self.coefficients {
            m.insert(s.clone(), json!(e.to_string()));
        }
        Value::Object(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Equivalence,
    NotEquivalence,
}

impl Verdict {
    pub fn holds(self) -> bool {
        self == Verdict::Equivalence
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureKind {
    /// A denominator involves jets; the coefficients must vanish.
    JetDenominator,
    /// A monomial outside the family template survives.
    Residual,
    /// A transformed coefficient depends on a variable its slot may not.
    ForbiddenDependency,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub kind: FailureKind,
    pub monomial: Expr,
    pub coefficient: Expr,
    pub slot: Option<String>,
    pub forbidden: Vec<String>,
}

impl Failure {
    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "kind": self.kind,
            "monomial": self.monomial.to_string(),
            "coefficient": self.coefficient.to_string(),
        });
        if let Some(s) = &self.slot {
            v["slot"] = json!(s);
            v["forbidden"] = json!(self.forbidden);
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchReport {
    pub verdict: Verdict,
    pub induced_action: Option<InducedAction>,
    pub assumptions: Vec<Expr>,
    pub failures: Vec<Failure>,
    /// Coefficient of the lead monomial the equation was divided by.
    pub lead_coefficient: Option<Expr>,
}

impl MatchReport {
    pub fn holds(&self) -> bool {
        self.verdict.holds()
    }

    fn negative(assumptions: Vec<Expr>, failures: Vec<Failure>, lead_coefficient: Option<Expr>) -> Self {
        MatchReport {
            verdict: Verdict::NotEquivalence,
            induced_action: None,
            assumptions,
            failures,
            lead_coefficient,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "verdict": self.verdict,
            "induced_action": self.induced_action.as_ref().map_or(json!({}), InducedAction::to_json),
            "assumptions": self.assumptions.iter().map(|e| e.to_string()).collect::<Vec<_>>(),
            "failures": self.failures.iter().map(Failure::to_json).collect::<Vec<_>>(),
        })
    }
}

fn push_unique(v: &mut Vec<Expr>, e: Expr) {
    if !v.contains(&e) {
        v.push(e);
    }
}

/// Matches `e`, written in `new_indep` and the jets of `new_dep`, against the
/// family template. `assumptions` are carried into the report.
pub fn match_expression(
    e: &Expr,
    fam: &EquationFamily,
    new_indep: &[String],
    new_dep: &str,
    assumptions: &[Expr],
) -> Result<MatchReport> {
    let rn = fam.renamer(new_indep, new_dep)?;
    let mut assumptions = assumptions.to_vec();
    let deps = BTreeSet::from([new_dep.to_string()]);
    let r = Rat::from_expr(e)?;
    let grouping = group_by_jets(&r, &deps);

    if !grouping.jet_denominators.is_empty() {
        let mut failures = Vec::new();
        for f in &grouping.jet_denominators {
            let inner = group_by_jets(&Rat::from_poly(f.clone()), &deps);
            for (pows, c) in inner.groups {
                if pows.is_empty() {
                    continue;
                }
                failures.push(Failure {
                    kind: FailureKind::JetDenominator,
                    monomial: pows_expr(&pows),
                    coefficient: c.to_expr(),
                    slot: None,
                    forbidden: Vec::new(),
                });
            }
            debug_assert!(poly_has_jets(f, &deps));
        }
        return Ok(MatchReport::negative(assumptions, failures, None));
    }

    let lead = rn.monomial(&fam.lead);
    let lead_key: Vec<(Atom, i32)> = lead.0.iter().map(|(a, k)| (a.clone(), *k as i32)).collect();
    let mut groups = grouping.groups;
    let lead_coef = match groups.remove(&lead_key) {
        Some(c) if !c.is_zero() => c,
        _ => return Err(Error::DegenerateTransformation(lead.to_string())),
    };
    let inv = lead_coef.inv()?;
    let lead_expr = lead_coef.to_expr();
    push_unique(&mut assumptions, lead_expr.clone());

    let slot_monos: Vec<(usize, Vec<(Atom, i32)>)> = fam
        .slots
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let m = rn.monomial(&s.monomial);
            (i, m.0.into_iter().map(|(a, k)| (a, k as i32)).collect())
        })
        .collect();
    let mut coeffs: Vec<Rat> = vec![Rat::zero(); fam.slots.len()];
    let mut residual: Vec<(Vec<(Atom, i32)>, Rat)> = Vec::new();
    for (pows, c) in groups {
        let b = c.mul(&inv);
        if b.is_zero() {
            continue;
        }
        match slot_monos.iter().find(|(_, m)| *m == pows) {
            Some((i, _)) => coeffs[*i] = b,
            None => residual.push((pows, b)),
        }
    }

    // a jet-free remainder r may be read as (r/w) * w
    let w = Atom::jet::<&str>(new_dep, &[]);
    let w_key = vec![(w.clone(), 1)];
    if let [(pows, r)] = residual.as_slice() {
        if pows.is_empty() {
            let hosts: Vec<usize> = fam
                .slots
                .iter()
                .enumerate()
                .filter(|(i, s)| slot_monos[*i].1 == w_key && s.args.iter().any(|a| rn.atom(a) == w))
                .map(|(i, _)| i)
                .collect();
            if let [i] = hosts.as_slice() {
                let absorbed = r.mul(&Rat::atom(w.clone()).inv()?);
                coeffs[*i] = Rat::sum(vec![coeffs[*i].clone(), absorbed]);
                residual.clear();
            }
        }
    }

    if !residual.is_empty() {
        let failures = residual
            .into_iter()
            .map(|(pows, c)| Failure {
                kind: FailureKind::Residual,
                monomial: pows_expr(&pows),
                coefficient: c.to_expr(),
                slot: None,
                forbidden: Vec::new(),
            })
            .collect();
        return Ok(MatchReport::negative(assumptions, failures, Some(lead_expr.clone())));
    }

    let mut failures = Vec::new();
    let mut action = Vec::with_capacity(fam.slots.len());
    for (s, b) in fam.slots.iter().zip(coeffs) {
        let b = b.to_expr();
        let allowed: BTreeSet<Atom> = s.args.iter().map(|a| rn.atom(a)).collect();
        let deps = dependency_closure(&b)?;
        let forbidden: Vec<String> = deps
            .variables()
            .into_iter()
            .filter(|a| !allowed.contains(a))
            .map(|a| a.to_string())
            .collect();
        if !forbidden.is_empty() {
            failures.push(Failure {
                kind: FailureKind::ForbiddenDependency,
                monomial: rn.monomial(&s.monomial).to_expr(),
                coefficient: b.clone(),
                slot: Some(s.name.clone()),
                forbidden,
            });
        }
        action.push((s.name.clone(), b));
    }
    if !failures.is_empty() {
        return Ok(MatchReport::negative(assumptions, failures, Some(lead_expr.clone())));
    }
    Ok(MatchReport {
        verdict: Verdict::Equivalence,
        induced_action: Some(InducedAction {
            coefficients: action,
            assumptions: assumptions.clone(),
        }),
        assumptions,
        failures,
        lead_coefficient: Some(lead_expr),
    })
}

fn pows_expr(pows: &[(Atom, i32)]) -> Expr {
    Expr::mul(
        pows.iter()
            .map(|(a, k)| Expr::pow(Expr::atom(a.clone()), *k))
            .collect(),
    )
}

fn check_variables(fam: &EquationFamily, tr: &PointTransformation) -> Result<()> {
    if tr.old_indep() != fam.indep.as_slice() || tr.old_dep() != fam.dep {
        return Err(Error::VariableMismatch(format!(
            "transformation acts on ({}; {}) but family {} is in ({}; {})",
            tr.old_indep().join(","),
            tr.old_dep(),
            fam.name,
            fam.indep.join(","),
            fam.dep
        )));
    }
    Ok(())
}

/// Transforms the generic member of `fam` and matches the result against
/// `fam` in the new variables.
pub fn check_equivalence(fam: &EquationFamily, tr: &PointTransformation) -> Result<MatchReport> {
    check_variables(fam, tr)?;
    let t = transform_equation_with_assumptions(&fam.template(), tr, fam.order)?;
    match_expression(&t.expr, fam, tr.new_indep(), tr.new_dep(), &t.assumptions)
}

/// Verifies an equivalence verdict: the lead coefficient times the family
/// member built from the induced action, minus the transformed equation, is 0.
pub fn certificate_residual(fam: &EquationFamily, tr: &PointTransformation, report: &MatchReport) -> Result<Expr> {
    let action = report
        .induced_action
        .as_ref()
        .ok_or_else(|| Error::Precondition("no induced action to certify".into()))?;
    let t = transform_equation_with_assumptions(&fam.template(), tr, fam.order)?;
    let member = fam.member(&action.as_map(), tr.new_indep(), tr.new_dep())?;
    let lead = report
        .lead_coefficient
        .as_ref()
        .ok_or_else(|| Error::Precondition("no lead coefficient recorded".into()))?;
    (lead * member - t.expr).normalize()
}

pub fn compose(tr1: &PointTransformation, tr2: &PointTransformation) -> Result<PointTransformation> {
    tr1.compose(tr2)
}

#[derive(Debug, Clone, PartialEq)]
pub enum TheoremOutcome {
    /// Both families are preserved; the induced actions on A and on B.
    Holds { a: InducedAction, b: InducedAction },
    /// The larger family is not preserved. Never expected.
    Contradiction { evidence: MatchReport },
}

impl TheoremOutcome {
    pub fn holds(&self) -> bool {
        matches!(self, TheoremOutcome::Holds { .. })
    }

    pub fn to_json(&self) -> Value {
        match self {
            TheoremOutcome::Holds { a, b } => json!({
                "verdict": "holds",
                "induced_action_a": a.to_json(),
                "induced_action_b": b.to_json(),
            }),
            TheoremOutcome::Contradiction { evidence } => json!({
                "verdict": "contradiction",
                "evidence": evidence.to_json(),
            }),
        }
    }
}

/// Executable instance of the subgroup theorems: if `tr` preserves `fam_a`,
/// it preserves `fam_b`, whose slots take at least the same arguments.
pub fn theorem_instance_check(
    fam_a: &EquationFamily,
    fam_b: &EquationFamily,
    tr: &PointTransformation,
) -> Result<TheoremOutcome> {
    if fam_a.indep != fam_b.indep || fam_a.dep != fam_b.dep || fam_a.lead != fam_b.lead {
        return Err(Error::Precondition(format!(
            "{} and {} differ beyond slot arguments",
            fam_a.name, fam_b.name
        )));
    }
    if fam_a.slots.len() != fam_b.slots.len() {
        return Err(Error::Precondition(format!(
            "{} and {} have different slots",
            fam_a.name, fam_b.name
        )));
    }
    for (sa, sb) in fam_a.slots.iter().zip(&fam_b.slots) {
        let wider = sa.args.iter().all(|a| sb.args.contains(a));
        if sa.name != sb.name || sa.monomial != sb.monomial || !wider {
            return Err(Error::Precondition(format!(
                "slot {} of {} is not enlarged in {}",
                sa.name, fam_a.name, fam_b.name
            )));
        }
    }
    let ra = check_equivalence(fam_a, tr)?;
    let Some(a) = ra.induced_action else {
        return Err(Error::Precondition(format!(
            "transformation does not preserve {}",
            fam_a.name
        )));
    };
    let rb = check_equivalence(fam_b, tr)?;
    Ok(match rb.induced_action.clone() {
        Some(b) => TheoremOutcome::Holds { a, b },
        None => TheoremOutcome::Contradiction { evidence: rb },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_gives_original_coefficients() {
        let fam = catalog("hyper", None).unwrap();
        let tr = PointTransformation::identity(&["t", "x"], "u", &["y", "z"], "w").unwrap();
        let rep = check_equivalence(&fam, &tr).unwrap();
        assert!(rep.holds());
        let act = rep.induced_action.unwrap();
        let yz = vec![Expr::indep("y"), Expr::indep("z")];
        for s in ["a1", "a2", "a3"] {
            assert_eq!(act.get(s).unwrap(), &Expr::func(s, yz.clone()));
        }
    }

    #[test]
    fn template_round_trip() {
        for (name, n) in [("hyperxp", None), ("gliny", Some(4)), ("hyperu", None)] {
            let fam = catalog(name, n).unwrap();
            let back = EquationFamily::from_template(name, &fam.template(), fam.indep.clone(), &fam.dep).unwrap();
            assert_eq!(back, fam);
        }
    }

    #[test]
    fn enlarged_hyper_is_hyperu() {
        let mut e = catalog("hyper", None).unwrap().enlarged("hyperu", 0).unwrap();
        e.name = "hyperu".into();
        assert_eq!(e, catalog("hyperu", None).unwrap());
    }

    #[test]
    fn json_shape() {
        let fam = catalog("glin", Some(3)).unwrap();
        let rep = check_equivalence(&fam, &transformation("T8").unwrap()).unwrap();
        let v = rep.to_json();
        assert_eq!(v["verdict"], "equivalence");
        assert!(v["induced_action"]["a3"].is_string());
        assert!(v["failures"].as_array().unwrap().is_empty());
    }
}
