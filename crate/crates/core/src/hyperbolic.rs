//! Laplace and contact invariants of `u_tx + a1 u_t + a2 u_x + a3 u = 0`,
//! and reduction of the `a1(x)`, `a2(t)` variant to `w_yz + b w = 0`.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::expr::{collect, dependency_closure, normalize, partial, substitute, Atom, Expr, JetMonomial};
use crate::families::{catalog, check_equivalence};
use crate::jets::{transform_equation, PointTransformation};

#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicEquation {
    /// Independent variables, `(t, x)` by default.
    pub vars: [String; 2],
    pub dep: String,
    pub a1: Expr,
    pub a2: Expr,
    pub a3: Expr,
}

impl HyperbolicEquation {
    pub fn new(a1: Expr, a2: Expr, a3: Expr) -> Self {
        HyperbolicEquation {
            vars: ["t".into(), "x".into()],
            dep: "u".into(),
            a1,
            a2,
            a3,
        }
    }

    /// `a_i(t, x)` as unevaluated functions.
    pub fn generic() -> Self {
        let tx = || vec![Expr::indep("t"), Expr::indep("x")];
        HyperbolicEquation::new(Expr::func("a1", tx()), Expr::func("a2", tx()), Expr::func("a3", tx()))
    }

    fn validate(&self) -> Result<()> {
        for c in [&self.a1, &self.a2, &self.a3] {
            if c.max_jet_order(&self.dep).is_some() {
                return Err(Error::Precondition(format!("coefficient {c} involves {}", self.dep)));
            }
        }
        Ok(())
    }

    pub fn equation(&self) -> Expr {
        let [t, x] = &self.vars;
        let d = &self.dep;
        Expr::jet(d, &[t, x]) + &self.a1 * Expr::jet(d, &[t]) + &self.a2 * Expr::jet(d, &[x]) + &self.a3 * Expr::dep(d)
    }

    fn d(&self, e: &Expr, i: usize) -> Result<Expr> {
        partial(e, &Atom::indep(&self.vars[i]))
    }

    pub fn h(&self) -> Result<Expr> {
        normalize(&(self.d(&self.a1, 0)? + &self.a1 * &self.a2 - &self.a3))
    }

    pub fn k(&self) -> Result<Expr> {
        normalize(&(self.d(&self.a2, 1)? + &self.a1 * &self.a2 - &self.a3))
    }

    /// `P = H/K`.
    pub fn p(&self) -> Result<Expr> {
        let k = self.k()?;
        if k.is_literal_zero() {
            return Err(Error::UndefinedInvariant {
                name: "P".into(),
                certificate: format!("K = {}", k_formula(self)),
            });
        }
        normalize(&(self.h()? / k))
    }

    /// `Q = (ln H)_tx / H = (H H_tx - H_t H_x) / H^3`.
    pub fn q(&self) -> Result<Expr> {
        let h = self.h()?;
        if h.is_literal_zero() {
            return Err(Error::UndefinedInvariant {
                name: "Q".into(),
                certificate: format!("H = {}", h_formula(self)),
            });
        }
        let ht = self.d(&h, 0)?;
        let hx = self.d(&h, 1)?;
        let htx = self.d(&ht, 1)?;
        normalize(&((&h * htx - ht * hx) / Expr::pow(h.clone(), 2) / h))
    }
}

fn h_formula(eq: &HyperbolicEquation) -> Expr {
    let d = crate::expr::raw_partial(&eq.a1, &Atom::indep(&eq.vars[0]));
    d + &eq.a1 * &eq.a2 - &eq.a3
}

fn k_formula(eq: &HyperbolicEquation) -> Expr {
    let d = crate::expr::raw_partial(&eq.a2, &Atom::indep(&eq.vars[1]));
    d + &eq.a1 * &eq.a2 - &eq.a3
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantReport {
    pub h: Expr,
    pub k: Expr,
    /// `None` when `K` vanishes identically.
    pub p: Option<Expr>,
    /// `None` when `H` vanishes identically.
    pub q: Option<Expr>,
    pub h_zero: bool,
    pub k_zero: bool,
    pub wave_reducible: bool,
}

impl InvariantReport {
    pub fn to_json(&self) -> Value {
        let text = |e: &Option<Expr>| e.as_ref().map(|e| e.to_string());
        json!({
            "H": self.h.to_string(),
            "K": self.k.to_string(),
            "P": text(&self.p),
            "Q": text(&self.q),
            "H_zero": self.h_zero,
            "K_zero": self.k_zero,
            "wave_reducible": self.wave_reducible,
        })
    }
}

pub fn invariants(eq: &HyperbolicEquation) -> Result<InvariantReport> {
    eq.validate()?;
    let h = eq.h()?;
    let k = eq.k()?;
    let h_zero = h.is_literal_zero();
    let k_zero = k.is_literal_zero();
    Ok(InvariantReport {
        p: if k_zero { None } else { Some(eq.p()?) },
        q: if h_zero { None } else { Some(eq.q()?) },
        wave_reducible: (&eq.a3 - &eq.a1 * &eq.a2).is_zero()?,
        h,
        k,
        h_zero,
        k_zero,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub transformation: PointTransformation,
    /// Transformed equation divided by its `w_yz` coefficient.
    pub reduced: Expr,
    pub b: Expr,
    /// `reduced - (w_yz + b w)` normalized; 0 on success.
    pub defect: Expr,
    pub wave: bool,
}

impl Reduction {
    pub fn to_json(&self) -> Value {
        json!({
            "transformation": self.transformation.to_json(),
            "reduced": self.reduced.to_string(),
            "b": self.b.to_string(),
            "canonical": self.defect.is_literal_zero(),
            "wave": self.wave,
        })
    }
}

/// Maps `a1(x)`, `a2(t)` equations to `w_yz + b(y,z) w = 0` with
/// `t = y`, `x = z`, `u = exp(f(y) + g(z)) w`, `f = -int a2`, `g = -int a1`.
pub fn reduce_to_canonical(eq: &HyperbolicEquation) -> Result<Reduction> {
    eq.validate()?;
    let [t, x] = &eq.vars;
    let only = |c: &Expr, var: &str, name: &str| -> Result<()> {
        let d = dependency_closure(c)?;
        if d.indep.iter().any(|v| v != var) || !d.jets.is_empty() {
            return Err(Error::Precondition(format!("{name} = {c} must depend on {var} alone")));
        }
        Ok(())
    };
    only(&eq.a1, x, "a1")?;
    only(&eq.a2, t, "a2")?;
    let (y, z) = ("y", "z");
    let rename: BTreeMap<Atom, Expr> =
        BTreeMap::from([(Atom::indep(t), Expr::indep(y)), (Atom::indep(x), Expr::indep(z))]);
    let a1z = substitute(&eq.a1, &rename)?;
    let a2y = substitute(&eq.a2, &rename)?;
    let f = -Expr::antiderivative(a2y.clone(), y);
    let g = -Expr::antiderivative(a1z.clone(), z);
    let w = "w";
    let tr = PointTransformation::new(
        vec![t.clone(), x.clone()],
        eq.dep.clone(),
        vec![y.into(), z.into()],
        w,
        vec![Expr::indep(y), Expr::indep(z)],
        Expr::exp(f + g) * Expr::dep(w),
    )?;
    let e = transform_equation(&eq.equation(), &tr, 2)?;
    let lead = JetMonomial::jet(Atom::jet(w, &[y, z]));
    let c = collect(&e, std::slice::from_ref(&lead))?;
    let lc = c.coefficient(&lead).cloned().unwrap_or_else(Expr::zero);
    if lc.is_zero()? {
        return Err(Error::DegenerateTransformation(lead.to_string()));
    }
    let reduced = normalize(&(e / lc))?;
    let b = normalize(&(substitute(&eq.a3, &rename)? - &a1z * &a2y))?;
    let defect = normalize(&(&reduced - (Expr::jet(w, &[y, z]) + &b * Expr::dep(w))))?;
    Ok(Reduction {
        transformation: tr,
        wave: b.is_literal_zero(),
        reduced,
        b,
        defect,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactCheck {
    /// `P~ - P o (R, S)`, normalized.
    pub p_difference: Expr,
    /// `Q~ - Q o (R, S)`, normalized.
    pub q_difference: Expr,
    /// Invariants of the transformed equation.
    pub transformed: HyperbolicEquation,
}

impl ContactCheck {
    pub fn holds(&self) -> bool {
        self.p_difference.is_literal_zero() && self.q_difference.is_literal_zero()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "holds": self.holds(),
            "p_difference": self.p_difference.to_string(),
            "q_difference": self.q_difference.to_string(),
            "transformed": {
                "a1": self.transformed.a1.to_string(),
                "a2": self.transformed.a2.to_string(),
                "a3": self.transformed.a3.to_string(),
            },
        })
    }
}

/// Checks that `P` and `Q` of the generic equation are carried to the
/// transformed equation's `P`, `Q` by composition with the variable change.
pub fn contact_invariance_check(tr: &PointTransformation) -> Result<ContactCheck> {
    contact_invariance_check_for(&HyperbolicEquation::generic(), tr)
}

/// As [`contact_invariance_check`] for given coefficients in `(t, x)`.
pub fn contact_invariance_check_for(eq: &HyperbolicEquation, tr: &PointTransformation) -> Result<ContactCheck> {
    let fam = catalog("hyper", None)?;
    let report = check_equivalence(&fam, tr)?;
    let action = report.induced_action.ok_or_else(|| {
        Error::Precondition(format!("{tr} does not preserve the linear hyperbolic family"))
    })?;
    // the induced action is computed for generic a_i(t,x); specialize it
    let generic = HyperbolicEquation::generic();
    let mut bodies = crate::expr::FunctionBindings::new();
    for (name, body) in [("a1", &eq.a1), ("a2", &eq.a2), ("a3", &eq.a3)] {
        bodies.insert(
            name.to_string(),
            crate::expr::FunctionBody {
                params: eq.vars.to_vec(),
                body: body.clone(),
            },
        );
    }
    let specialize = |e: &Expr| -> Result<Expr> {
        if eq == &generic {
            Ok(e.clone())
        } else {
            crate::expr::instantiate_functions(e, &bodies)
        }
    };
    let new_vars = [tr.new_indep()[0].clone(), tr.new_indep()[1].clone()];
    let transformed = HyperbolicEquation {
        vars: new_vars,
        dep: tr.new_dep().to_string(),
        a1: specialize(action.get("a1").expect("slot a1"))?,
        a2: specialize(action.get("a2").expect("slot a2"))?,
        a3: specialize(action.get("a3").expect("slot a3"))?,
    };
    let m = tr.point_bindings();
    let p_diff = normalize(&(transformed.p()? - substitute(&eq.p()?, &m)?))?;
    let q_diff = normalize(&(transformed.q()? - substitute(&eq.q()?, &m)?))?;
    Ok(ContactCheck {
        p_difference: p_diff,
        q_difference: q_diff,
        transformed,
    })
}
