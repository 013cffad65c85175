//! End-to-end acceptance suite. Each test prints one PASS/FAIL line and
//! fails when any of its checks fails.

mod common;

use std::collections::BTreeMap;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};

use common::*;
use eqv_core::dsl::{parse_expr, Scope};
use eqv_core::expr::{collect, jet_monomial_expr, normalize, partial, substitute, Atom, Expr, JetMonomial};
use eqv_core::families::{
    catalog, check_equivalence, theorem_instance_check, transformation, FailureKind, MatchReport, Verdict,
};
use eqv_core::hyperbolic::{contact_invariance_check, reduce_to_canonical, HyperbolicEquation};
use eqv_core::jets::{transform_equation, transform_equation_with_assumptions};
use eqv_core::oracle::{check_identity, random_instance, rng, validate_transformation};
use proptest::prelude::*;
use proptest::test_runner::TestRunner;

/// Relative error allowed by the numeric oracle; negative controls must exceed it.
const TOL: f64 = 1e-6;
const POINTS: usize = 10;

fn e(text: &str) -> Expr {
    let scope = Scope::permissive().dep("w").params(&["k1", "k2", "k3"]);
    parse_expr(text, &scope).unwrap()
}

fn same(a: &Expr, b: &Expr) -> bool {
    normalize(&(a - b)).map(|d| d.is_literal_zero()).unwrap_or(false)
}

fn numeric(a: &Expr, b: &Expr, seed: u64) -> f64 {
    check_identity(a, b, &[], seed, POINTS).unwrap_or(f64::INFINITY)
}

fn jet(index: &[&str]) -> JetMonomial {
    JetMonomial::jet(Atom::jet("w", index))
}

#[derive(Default)]
struct Checks(Vec<(String, bool)>);

impl Checks {
    fn check(&mut self, label: impl Into<String>, ok: bool) {
        self.0.push((label.into(), ok));
    }

    /// Symbolic equality plus a seeded numeric comparison.
    fn identity(&mut self, label: &str, got: &Expr, want: &Expr, seed: u64) {
        self.check(label, same(got, want));
        let err = numeric(got, want, seed);
        self.check(format!("{label} (numeric {err:.1e})"), err <= TOL);
    }
}

/// Writes to the stderr handle directly so the line shows without `--nocapture`.
fn report(line: &str) {
    let _ = writeln!(std::io::stderr(), "{line}");
}

fn criterion(n: u8, title: &str, body: impl FnOnce(&mut Checks)) {
    let mut checks = Checks::default();
    let outcome = catch_unwind(AssertUnwindSafe(|| body(&mut checks)));
    let failed: Vec<&str> = checks.0.iter().filter(|(_, ok)| !ok).map(|(l, _)| l.as_str()).collect();
    let passed = outcome.is_ok() && failed.is_empty();
    let mut line = format!(
        "criterion {n} [{title}]: {} ({} checks)",
        if passed { "PASS" } else { "FAIL" },
        checks.0.len()
    );
    if outcome.is_err() {
        line += "; panicked";
    }
    if !failed.is_empty() {
        line += &format!("; failed: {}", failed.join(", "));
    }
    report(&line);
    assert!(passed, "{line}");
}

fn lead_normalized(fam: &str, tr: &str, monomials: &[JetMonomial]) -> Vec<Expr> {
    let fam = catalog(fam, None).unwrap();
    let out = transform_equation(&fam.template(), &transformation(tr).unwrap(), 2).unwrap();
    let lead = jet(&["y", "z"]);
    let mut all = vec![lead.clone()];
    all.extend(monomials.iter().cloned());
    let c = collect(&out, &all).unwrap();
    let lc = c.coefficient(&lead).unwrap().clone();
    monomials
        .iter()
        .map(|m| normalize(&(c.coefficient(m).cloned().unwrap_or_else(Expr::zero) / &lc)).unwrap())
        .collect()
}

#[test]
fn criterion_1_hyperbolic_pipeline() {
    criterion(1, "hyperu under the affine gauge", |c| {
        let got = lead_normalized("hyperu", "T24", &[jet(&["y"]), jet(&["z"]), jet(&[]), JetMonomial::one()]);
        let args = "(R(y),S(z),L(y,z)*w + J(y,z))";
        let a = |i: u8| format!("a{i}{args}");
        let (l, ly, lz, lyz, ry, sz) = ("L(y,z)", "L[1](y,z)", "L[2](y,z)", "L[1,2](y,z)", "R[1](y)", "S[1](z)");
        let want = [
            e(&format!("{}*{sz} + {lz}/{l}", a(1))),
            e(&format!("{}*{ry} + {ly}/{l}", a(2))),
            e(&format!(
                "({}*{lz}*{ry} + {}*{ly}*{sz} + {l}*{}*{ry}*{sz} + {lyz})/{l}",
                a(2),
                a(1),
                a(3)
            )),
            e(&format!("J(y,z)*{}*{ry}*{sz}/{l}", a(3))),
        ];
        for ((label, g), w) in ["w_y", "w_z", "w", "1"].iter().zip(&got).zip(&want) {
            c.identity(&format!("coefficient of {label}"), g, w, 11);
        }
        if !same(&got[3], &want[3]) {
            report(&format!("  engine constant term: {}", got[3]));
        }
    });
}

#[test]
fn criterion_2_intermediate_derivations() {
    criterion(2, "nonlinear and general changes", |c| {
        let mixed = JetMonomial::from_factors([Atom::jet("w", &["y"]), Atom::jet("w", &["z"])]);
        let got = lead_normalized("hyperu", "T22", &[mixed]);
        c.identity("w_y w_z over the lead", &got[0], &e("T[3,3](y,z,w)/T[3](y,z,w)"), 21);

        let fam = catalog("hyperu", None).unwrap();
        let out = transform_equation(&fam.template(), &transformation("T21").unwrap(), 2).unwrap();
        let (wyy, wzz) = (jet(&["y", "y"]), jet(&["z", "z"]));
        let col = collect(&out, &[wyy.clone(), wzz.clone()]).unwrap();
        let det = e("R[1](y,z)*S[2](y,z) - R[2](y,z)*S[1](y,z)");
        let scale = -Expr::pow(det, 3);
        let shown_yy = e("R[2](y,z)*S[2](y,z)*(-R[2](y,z)*S[1](y,z) + R[1](y,z)*S[2](y,z))*T[3](y,z,w)");
        let shown_zz = e("R[1](y,z)*S[1](y,z)*(-R[2](y,z)*S[1](y,z) + R[1](y,z)*S[2](y,z))*T[3](y,z,w)");
        c.identity("w_yy product", &(col.coefficient(&wyy).unwrap() * &scale), &shown_yy, 22);
        c.identity("w_zz product", &(col.coefficient(&wzz).unwrap() * &scale), &shown_zz, 23);

        let report = check_equivalence(&fam, &transformation("T17").unwrap()).unwrap();
        c.check("general change rejected", report.verdict == Verdict::NotEquivalence);
        let conditions: Vec<&Expr> = report
            .failures
            .iter()
            .filter(|f| f.kind == FailureKind::JetDenominator)
            .map(|f| &f.coefficient)
            .collect();
        let expected = [
            e("R[2](y,z,w)*S[3](y,z,w) - R[3](y,z,w)*S[2](y,z,w)"),
            e("-R[1](y,z,w)*S[3](y,z,w) + R[3](y,z,w)*S[1](y,z,w)"),
        ];
        c.check("exactly two denominator conditions", conditions.len() == expected.len());
        for (i, want) in expected.iter().enumerate() {
            let hit = conditions.iter().find(|g| same(g, want));
            c.check(format!("denominator condition {}", i + 1), hit.is_some());
            if let Some(g) = hit {
                c.identity(&format!("denominator condition {} numeric", i + 1), g, want, 24 + i as u64);
            }
        }
    });
}

fn action(fam: &str, tr: &str) -> MatchReport {
    check_equivalence(&catalog(fam, None).unwrap(), &transformation(tr).unwrap()).unwrap()
}

#[test]
fn criterion_3_variants() {
    criterion(3, "hyperxp and hypertt", |c| {
        let report = action("hyperxp", "T28");
        c.check("hyperxp equivalence", report.holds());
        if let Some(a) = &report.induced_action {
            let want = [
                e("g[1](z) + a1(S(z))*S[1](z)"),
                e("f[1](y) + a2(R(y))*R[1](y)"),
                e("f[1](y)*(g[1](z) + a1(S(z))*S[1](z)) + R[1](y)*(a2(R(y))*g[1](z) + a3(R(y),S(z))*S[1](z))"),
            ];
            for (slot, w) in ["a1", "a2", "a3"].iter().zip(&want) {
                c.identity(&format!("hyperxp {slot}"), a.get(slot).unwrap(), w, 31);
            }
        }

        let report = action("hypertt", "T32");
        c.check("hypertt equivalence", report.holds());
        if let Some(a) = &report.induced_action {
            let (l, ly, lz, lyz) = ("g(y)*exp(k3*z)", "g[1](y)*exp(k3*z)", "k3*g(y)*exp(k3*z)", "k3*g[1](y)*exp(k3*z)");
            let want = [
                e(&format!("a1(R(y))*k1 + ({lz})/({l})")),
                e(&format!("a2(R(y))*R[1](y) + ({ly})/({l})")),
                e(&format!(
                    "(a1(R(y))*k1*{ly} + k1*{l}*a3(R(y),k1*z + k2)*R[1](y) + a2(R(y))*{lz}*R[1](y) + {lyz})/({l})"
                )),
            ];
            for (slot, w) in ["a1", "a2", "a3"].iter().zip(&want) {
                c.identity(&format!("hypertt {slot}"), a.get(slot).unwrap(), w, 32);
            }
        }
    });
}

#[test]
fn criterion_4_ode_families() {
    criterion(4, "linear ODE families", |c| {
        for n in 3..=5 {
            for (fam, tr) in [("glin", "T8"), ("gliny", "T10"), ("glin0y", "T12")] {
                let report = check_equivalence(&catalog(fam, Some(n)).unwrap(), &transformation(tr).unwrap()).unwrap();
                c.check(format!("{fam}({n}) under {tr}"), report.holds());
            }
        }
        let report = check_equivalence(&catalog("glin0y", Some(3)).unwrap(), &transformation("T10").unwrap()).unwrap();
        c.check("glin0y(3) under the variable gauge", report.verdict == Verdict::NotEquivalence);
        let forbidden = report
            .failures
            .iter()
            .any(|f| f.kind == FailureKind::ForbiddenDependency && f.forbidden.iter().any(|v| v == "z"));
        c.check("L and J forced constant", forbidden);
    });
}

#[test]
fn criterion_5_theorem_suites() {
    criterion(5, "subgroup theorem instances", |c| {
        let mut r = rng(0xacce5);
        for (a, b, tr) in [
            ("glin", "gliny", "T8"),
            ("hyper", "hyperu", "T14"),
            ("hyperxp", "hyperu", "T28"),
            ("hypertt", "hyperu", "T32"),
        ] {
            let (fa, fb) = (catalog(a, None).unwrap(), catalog(b, None).unwrap());
            let tr = transformation(tr).unwrap();
            let mut held = 0;
            for _ in 0..50 {
                let (concrete, _) = random_instance(&mut r, &tr).unwrap();
                if theorem_instance_check(&fa, &fb, &concrete).map(|o| o.holds()).unwrap_or(false) {
                    held += 1;
                }
            }
            c.check(format!("{a} -> {b}: {held}/50"), held == 50);
        }
        let report = check_equivalence(&catalog("glin", Some(3)).unwrap(), &transformation("T10").unwrap()).unwrap();
        c.check("non-converse witness", report.verdict == Verdict::NotEquivalence);
    });
}

#[test]
fn criterion_6_invariants() {
    criterion(6, "Laplace and contact invariants", |c| {
        let check = contact_invariance_check(&transformation("T14").unwrap()).unwrap();
        c.check("P difference vanishes", check.p_difference.is_literal_zero());
        c.check("Q difference vanishes", check.q_difference.is_literal_zero());

        let g = HyperbolicEquation::generic();
        let m: BTreeMap<Atom, Expr> = [(Atom::indep("t"), e("R(y)")), (Atom::indep("x"), e("S(z)"))].into();
        for (name, before, after) in [
            ("P", g.p().unwrap(), check.transformed.p().unwrap()),
            ("Q", g.q().unwrap(), check.transformed.q().unwrap()),
        ] {
            let composed = substitute(&before, &m).unwrap();
            let err = numeric(&after, &composed, 61);
            c.check(format!("{name} invariant numeric ({err:.1e})"), err <= TOL);
        }

        let eq = HyperbolicEquation::new(e("a1(x)"), e("a2(t)"), e("a3(t,x)"));
        let red = reduce_to_canonical(&eq).unwrap();
        c.identity("b = a3 - a1 a2", &red.b, &e("a3(y,z) - a1(z)*a2(y)"), 62);
        c.check("canonical form reached", red.defect.is_literal_zero());
        c.check("generic b is not the wave equation", !red.wave);
        let canonical = e("D[w,y,z] + (a3(y,z) - a1(z)*a2(y))*w");
        c.identity("reduced equation", &red.reduced, &canonical, 63);

        let wave = reduce_to_canonical(&HyperbolicEquation::new(e("a1(x)"), e("a2(t)"), e("a1(x)*a2(t)"))).unwrap();
        c.check("a3 = a1 a2 gives the wave equation", wave.wave && same(&wave.reduced, &e("D[w,y,z]")));
        let near = reduce_to_canonical(&HyperbolicEquation::new(e("a1(x)"), e("a2(t)"), e("a1(x)*a2(t) + 1"))).unwrap();
        c.check("a3 = a1 a2 + 1 does not", !near.wave);
    });
}

#[test]
fn criterion_7_oracle_cross_validation() {
    criterion(7, "numeric oracle", |c| {
        let cases = [
            ("hyperu", None, "T24"),
            ("hyperu", None, "T22"),
            ("hyperu", None, "T21"),
            ("hyperu", None, "T17"),
            ("hyperxp", None, "T28"),
            ("hypertt", None, "T32"),
            ("hyper", None, "T14"),
            ("glin", Some(5), "T8"),
            ("gliny", Some(5), "T10"),
            ("glin0y", Some(5), "T12"),
        ];
        for (i, (fam, n, tr)) in cases.into_iter().enumerate() {
            let f = catalog(fam, n).unwrap();
            let t = transformation(tr).unwrap();
            let seed = 700 + i as u64;
            let out = transform_equation_with_assumptions(&f.template(), &t, f.order).unwrap();
            let good = validate_transformation(&f.template(), &t, &out.expr, &out.assumptions, seed, POINTS);
            let good = good.unwrap_or(f64::INFINITY);
            c.check(format!("{fam} under {tr} ({good:.1e})"), good <= TOL);
            let mutated = &out.expr + Expr::dep("w");
            let bad = validate_transformation(&f.template(), &t, &mutated, &out.assumptions, seed, POINTS);
            c.check(format!("{fam} under {tr} control"), bad.map(|b| b > TOL).unwrap_or(true));
        }

        let eq = HyperbolicEquation::new(e("a1(x)"), e("a2(t)"), e("a3(t,x)"));
        let red = reduce_to_canonical(&eq).unwrap();
        let out = transform_equation_with_assumptions(&eq.equation(), &red.transformation, 2).unwrap();
        let good = validate_transformation(&eq.equation(), &red.transformation, &out.expr, &out.assumptions, 720, POINTS);
        c.check("canonical reduction", good.map(|g| g <= TOL).unwrap_or(false));

        let wrong = e("a3(y,z) + a1(z)*a2(y)");
        c.check("identity control", numeric(&red.b, &wrong, 721) > TOL);
    });
}

fn property<S: Strategy>(c: &mut Checks, label: &str, seed: u64, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) {
    let mut runner = TestRunner::new(config(seed));
    let outcome = runner.run(&strategy, test);
    if let Err(err) = &outcome {
        report(&format!("  {label}: {err}"));
    }
    c.check(label, outcome.is_ok());
}

#[test]
fn criterion_8_kernel_properties() {
    criterion(8, "kernel properties, 200 cases each", |c| {
        property(c, "normalize idempotent", 0x5eed_0801, expr(), |e| {
            let n = normalize(&e).unwrap();
            prop_assert_eq!(normalize(&n).unwrap(), n);
            Ok(())
        });
        property(c, "mixed partials commute", 0x5eed_0802, (expr(), coordinate(), coordinate()), |(e, a, b)| {
            let ab = partial(&partial(&e, &a).unwrap(), &b).unwrap();
            let ba = partial(&partial(&e, &b).unwrap(), &a).unwrap();
            prop_assert_eq!(ab, ba);
            Ok(())
        });
        property(c, "substitution homomorphism", 0x5eed_0803, (expr(), expr(), expr(), expr()), |(e1, e2, my, mw)| {
            let m: BTreeMap<Atom, Expr> = [(Atom::indep("y"), my), (Atom::jet::<&str>("w", &[]), mw)].into();
            let Ok(whole) = substitute(&mul(e1.clone(), e2.clone()), &m) else {
                return Err(TestCaseError::reject("bound variable"));
            };
            let sum = normalize(&substitute(&add(e1.clone(), e2.clone()), &m).unwrap()).unwrap();
            let parts = normalize(&add(substitute(&e1, &m).unwrap(), substitute(&e2, &m).unwrap())).unwrap();
            prop_assert_eq!(sum, parts);
            let whole = normalize(&whole).unwrap();
            let parts = normalize(&mul(substitute(&e1, &m).unwrap(), substitute(&e2, &m).unwrap())).unwrap();
            prop_assert_eq!(whole, parts);
            Ok(())
        });
        property(c, "collect round trip", 0x5eed_0804, expr(), |e| {
            let wa = Atom::jet::<&str>("w", &[]);
            let wya = Atom::jet("w", &["y"]);
            let monomials = vec![
                JetMonomial::jet(wya.clone()),
                JetMonomial::jet(wa.clone()),
                JetMonomial::from_factors([wa, wya]),
                JetMonomial::one(),
            ];
            let col = collect(&e, &monomials).unwrap();
            let mut terms: Vec<Expr> =
                col.coefficients.iter().map(|(m, k)| mul(k.clone(), jet_monomial_expr(m))).collect();
            terms.push(col.residual.clone());
            prop_assert_eq!(normalize(&Expr::add(terms)).unwrap(), normalize(&e).unwrap());
            Ok(())
        });
    });
}
