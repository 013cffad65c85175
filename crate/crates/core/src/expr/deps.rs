use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::{normalize, Atom, AtomKind, Expr};
use crate::error::Result;

/// Variables and function symbols an expression depends on.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DependencySet {
    pub indep: BTreeSet<String>,
    /// Jet variables of any dependent variable, including order 0.
    #[serde(serialize_with = "serialize_atoms")]
    pub jets: BTreeSet<Atom>,
    pub funcs: BTreeSet<String>,
}

fn serialize_atoms<S: serde::Serializer>(atoms: &BTreeSet<Atom>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(atoms.iter().map(|a| a.to_string()))
}

impl DependencySet {
    pub fn is_empty(&self) -> bool {
        self.indep.is_empty() && self.jets.is_empty() && self.funcs.is_empty()
    }

    /// Independent variables and jets as atoms.
    pub fn variables(&self) -> BTreeSet<Atom> {
        self.indep
            .iter()
            .map(|v| Atom::indep(v))
            .chain(self.jets.iter().cloned())
            .collect()
    }

    fn record(&mut self, a: &Atom) {
        match a.kind() {
            AtomKind::Indep(v) => {
                self.indep.insert(v.clone());
            }
            AtomKind::Jet { .. } => {
                self.jets.insert(a.clone());
            }
            AtomKind::Func { name, .. } => {
                self.funcs.insert(name.clone());
            }
            AtomKind::Antiderivative { var, .. } => {
                self.indep.insert(var.clone());
            }
            AtomKind::Param(_) | AtomKind::Log(_) => {}
        }
    }
}

impl fmt::Display for DependencySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self
            .indep
            .iter()
            .cloned()
            .chain(self.jets.iter().map(|a| a.to_string()))
            .chain(self.funcs.iter().cloned())
            .collect();
        write!(f, "{{{}}}", items.join(", "))
    }
}

/// Exact dependency set of `normalize(e)`, so dependencies that cancel are
/// not reported.
pub fn dependency_closure(e: &Expr) -> Result<DependencySet> {
    let n = normalize(e)?;
    let mut out = DependencySet::default();
    n.visit_atoms(&mut |a| out.record(a));
    Ok(out)
}
