use eqv_core::expr::{partial, Atom, Expr};
use eqv_core::families::{catalog, transformation};
use eqv_core::jets::transform_equation_with_assumptions;
use eqv_core::oracle::{check_identity, fd_check, validate_transformation, Instantiation, draw_points, rng, DEFAULT_STEP};

const TOL: f64 = 1e-6;

fn replay(fam: &str, n: Option<usize>, tr: &str, seed: u64) -> (f64, f64) {
    let fam = catalog(fam, n).unwrap();
    let tr = transformation(tr).unwrap();
    let eq = fam.template();
    let t = transform_equation_with_assumptions(&eq, &tr, fam.order).unwrap();
    let good = validate_transformation(&eq, &tr, &t.expr, &t.assumptions, seed, 10).unwrap();
    let mutated = &t.expr + Expr::dep("w");
    let bad = validate_transformation(&eq, &tr, &mutated, &t.assumptions, seed, 10).unwrap();
    (good, bad)
}

#[test]
fn transformed_equations_match_series_prolongation() {
    let cases = [
        ("hyperu", None, "T24"),
        ("hyperu", None, "T17"),
        ("hyperu", None, "T21"),
        ("hyper", None, "T22"),
        ("hyper", None, "T14"),
        ("hyperxp", None, "T28"),
        ("hypertt", None, "T32"),
        ("glin", Some(5), "T8"),
        ("gliny", Some(4), "T10"),
        ("glin0y", Some(3), "T12"),
    ];
    for (i, (fam, n, tr)) in cases.into_iter().enumerate() {
        let (good, bad) = replay(fam, n, tr, 100 + i as u64);
        assert!(good <= TOL, "{fam} under {tr}: {good}");
        assert!(bad > 1e-3, "{fam} under {tr}: mutation not caught ({bad})");
    }
}

#[test]
fn exp_derivative_by_finite_differences() {
    let (y, z) = (Expr::indep("y"), Expr::indep("z"));
    let base = Expr::exp(&z * Expr::func("f", vec![y.clone()]));
    let ya = Atom::indep("y");
    let sym = partial(&base, &ya).unwrap();
    let mut r = rng(3);
    let inst = Instantiation::random(&mut r, &[&base]);
    let pts = draw_points(&mut r, &[ya.clone(), Atom::indep("z")], 10, &inst, &[]).unwrap();
    assert!(fd_check(&sym, &base, &ya, &inst, &pts, DEFAULT_STEP).unwrap() < 1e-6);
    let wrong = &sym * Expr::int(2);
    assert!(fd_check(&wrong, &base, &ya, &inst, &pts, DEFAULT_STEP).unwrap() > 0.1);
}

#[test]
fn identity_check_with_negative_control() {
    let x = Expr::indep("x");
    let a = Expr::pow(&x + Expr::one(), 2);
    let b = Expr::pow(x.clone(), 2) + Expr::int(2) * &x + Expr::one();
    assert!(check_identity(&a, &b, &[], 9, 12).unwrap() < 1e-12);
    assert!(check_identity(&a, &(b + &x), &[], 9, 12).unwrap() > 1e-3);
}

#[test]
fn high_order_mutation_is_caught() {
    let fam = catalog("glin", Some(5)).unwrap();
    let tr = transformation("T8").unwrap();
    let eq = fam.template();
    let t = transform_equation_with_assumptions(&eq, &tr, fam.order).unwrap();
    let d4 = Expr::jet("w", &["z", "z", "z", "z"]);
    let mutated = &t.expr + &d4 * Expr::func("S", vec![Expr::indep("z")]);
    let bad = validate_transformation(&eq, &tr, &mutated, &t.assumptions, 5, 10).unwrap();
    assert!(bad > 1e-3, "{bad}");
}
