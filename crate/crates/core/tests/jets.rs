use eqv_core::dsl::{parse_expr, Scope};
use eqv_core::expr::{collect, normalize, Atom, Expr, JetMonomial};
use eqv_core::families::{catalog, transformation};
use eqv_core::jets::{
    total_derivative, transform_derivatives, transform_equation, transform_equation_with_assumptions,
    PointTransformation,
};
use eqv_core::oracle::validate_transformation;

fn e(text: &str) -> Expr {
    parse_expr(text, &Scope::permissive().dep("w").dep("v")).unwrap()
}

fn same(a: &Expr, b: &Expr) -> bool {
    normalize(&(a - b)).unwrap().is_literal_zero()
}

fn jet(dep: &str, index: &[&str]) -> Atom {
    Atom::jet(dep, index)
}

#[test]
fn total_derivatives() {
    assert_eq!(total_derivative(&e("w"), "y", "w").unwrap(), e("D[w,y]"));
    let d = total_derivative(&e("L(y,z)*w"), "y", "w").unwrap();
    assert!(same(&d, &e("L[1](y,z)*w + L(y,z)*D[w,y]")));
    let d = total_derivative(&e("T(y,z,w)"), "y", "w").unwrap();
    assert!(same(&d, &e("T[1](y,z,w) + T[3](y,z,w)*D[w,y]")));
}

#[test]
fn gauge_first_order() {
    let m = transform_derivatives(&transformation("T14").unwrap(), 1).unwrap();
    let ut = m.get(&jet("u", &["t"])).unwrap();
    let ux = m.get(&jet("u", &["x"])).unwrap();
    assert!(same(ut, &e("(L[1](y,z)*w + L(y,z)*D[w,y]) / R[1](y)")));
    assert!(same(ux, &e("(L[2](y,z)*w + L(y,z)*D[w,z]) / S[1](z)")));
    assert!(same(m.get(&jet("u", &[])).unwrap(), &e("L(y,z)*w")));
}

#[test]
fn general_first_order_quotient() {
    let m = transform_derivatives(&transformation("T17").unwrap(), 1).unwrap();
    let num = "-S[2](y,z,w)*T[1](y,z,w) + S[1](y,z,w)*T[2](y,z,w) \
        + (S[3](y,z,w)*T[2](y,z,w) - S[2](y,z,w)*T[3](y,z,w))*D[w,y] \
        + (S[1](y,z,w)*T[3](y,z,w) - S[3](y,z,w)*T[1](y,z,w))*D[w,z]";
    let den = "R[2](y,z,w)*S[1](y,z,w) - R[1](y,z,w)*S[2](y,z,w) \
        + (R[2](y,z,w)*S[3](y,z,w) - R[3](y,z,w)*S[2](y,z,w))*D[w,y] \
        + (R[3](y,z,w)*S[1](y,z,w) - R[1](y,z,w)*S[3](y,z,w))*D[w,z]";
    let expected = e(&format!("({num}) / ({den})"));
    assert!(same(m.get(&jet("u", &["t"])).unwrap(), &expected));
}

#[test]
fn identity_second_order() {
    let id = PointTransformation::identity(&["t", "x"], "u", &["y", "z"], "w").unwrap();
    let m = transform_derivatives(&id, 2).unwrap();
    for (old, new) in [
        (vec!["t"], vec!["y"]),
        (vec!["x"], vec!["z"]),
        (vec!["t", "t"], vec!["y", "y"]),
        (vec!["t", "x"], vec!["y", "z"]),
        (vec!["x", "x"], vec!["z", "z"]),
    ] {
        assert_eq!(m.get(&jet("u", &old)).unwrap(), &Expr::jet("w", &new));
    }
}

#[test]
fn order_bound() {
    let m = transform_derivatives(&transformation("T17").unwrap(), 2).unwrap();
    for (old, image) in &m.entries {
        let k = old.jet_order().unwrap();
        assert!(image.max_jet_order("w").unwrap_or(0) <= k, "{old} -> {image}");
    }
}

#[test]
fn singular_transformation_rejected() {
    let tr = PointTransformation::new(
        vec!["t".into(), "x".into()],
        "u",
        vec!["y".into(), "z".into()],
        "w",
        vec![e("R(y)"), e("R(y)")],
        e("w"),
    )
    .unwrap();
    assert!(transform_derivatives(&tr, 1).is_err());
}

#[test]
fn hyper_form_preserved_under_gauge() {
    let fam = catalog("hyper", None).unwrap();
    let out = transform_equation(&fam.template(), &transformation("T14").unwrap(), 2).unwrap();
    let lead = JetMonomial::jet(jet("w", &["y", "z"]));
    let c = collect(&out, std::slice::from_ref(&lead)).unwrap();
    assert!(same(c.coefficient(&lead).unwrap(), &e("L(y,z)/(R[1](y)*S[1](z))")));
    assert!(out.max_jet_order("w") == Some(2));
}

#[test]
fn w_y_w_z_coefficient_under_t22() {
    let fam = catalog("hyperu", None).unwrap();
    let out = transform_equation(&fam.template(), &transformation("T22").unwrap(), 2).unwrap();
    let lead = JetMonomial::jet(jet("w", &["y", "z"]));
    let mixed = JetMonomial::from_factors([jet("w", &["y"]), jet("w", &["z"])]);
    let c = collect(&out, &[lead.clone(), mixed.clone()]).unwrap();
    let ratio = c.coefficient(&mixed).unwrap() / c.coefficient(&lead).unwrap();
    assert!(same(&ratio, &e("T[3,3](y,z,w)/T[3](y,z,w)")));
}

#[test]
fn second_derivative_terms_under_t21() {
    let fam = catalog("hyperu", None).unwrap();
    let out = transform_equation(&fam.template(), &transformation("T21").unwrap(), 2).unwrap();
    let wyy = JetMonomial::jet(jet("w", &["y", "y"]));
    let wzz = JetMonomial::jet(jet("w", &["z", "z"]));
    let c = collect(&out, &[wyy.clone(), wzz.clone()]).unwrap();
    let det = e("R[1](y,z)*S[2](y,z) - R[2](y,z)*S[1](y,z)");
    let scale = -Expr::pow(det, 3);
    let shown_yy = e("R[2](y,z)*S[2](y,z)*(-R[2](y,z)*S[1](y,z) + R[1](y,z)*S[2](y,z))*T[3](y,z,w)");
    let shown_zz = e("R[1](y,z)*S[1](y,z)*(-R[2](y,z)*S[1](y,z) + R[1](y,z)*S[2](y,z))*T[3](y,z,w)");
    assert!(same(&(c.coefficient(&wyy).unwrap() * &scale), &shown_yy));
    assert!(same(&(c.coefficient(&wzz).unwrap() * &scale), &shown_zz));
}

fn second_gauge() -> PointTransformation {
    PointTransformation::new(
        vec!["y".into(), "z".into()],
        "w",
        vec!["p".into(), "q".into()],
        "v",
        vec![e("P(p)"), e("Q(q)")],
        e("M(p,q)*v"),
    )
    .unwrap()
}

#[test]
fn transforming_twice_equals_composite() {
    let fam = catalog("hyper", None).unwrap();
    let eq = fam.template();
    for name in ["T14", "T24", "T28"] {
        let tr1 = transformation(name).unwrap();
        let tr2 = second_gauge();
        let stepwise = transform_equation(&transform_equation(&eq, &tr1, 2).unwrap(), &tr2, 2).unwrap();
        let direct = transform_equation(&eq, &tr1.compose(&tr2).unwrap(), 2).unwrap();
        assert!(same(&stepwise, &direct), "{name}");
    }
}

#[test]
fn transformed_equation_agrees_with_series_oracle() {
    let fam = catalog("hyperu", None).unwrap();
    let tr = transformation("T21").unwrap();
    let t = transform_equation_with_assumptions(&fam.template(), &tr, 2).unwrap();
    let err = validate_transformation(&fam.template(), &tr, &t.expr, &t.assumptions, 41, 12).unwrap();
    assert!(err <= 1e-6, "{err}");
    let wrong = &t.expr + e("D[w,y,y]");
    let err = validate_transformation(&fam.template(), &tr, &wrong, &t.assumptions, 41, 12).unwrap();
    assert!(err > 1e-3);
}
