use super::{CoefficientSlot, EquationFamily};
use crate::error::{Error, Result};
use crate::expr::{Atom, Expr, JetMonomial};
use crate::jets::PointTransformation;

pub const CATALOG_FAMILIES: &[&str] = &["glin", "gliny", "glin0y", "hyper", "hyperu", "hyperxp", "hypertt"];

/// Named transformations. ODE ones act on `(x; y)`, the others on `(t, x; u)`;
/// new variables are `(z; w)` and `(y, z; w)`.
pub const CATALOG_TRANSFORMATIONS: &[(&str, &str)] = &[
    ("T8", "x = S(z); y = L(z)*w"),
    ("T10", "x = S(z); y = L(z)*w + J(z)"),
    ("T12", "x = k1*z + k2; y = k3*w + k4"),
    ("T14", "t = R(y); x = S(z); u = L(y,z)*w"),
    ("T17", "t = R(y,z,w); x = S(y,z,w); u = T(y,z,w)"),
    ("T21", "t = R(y,z); x = S(y,z); u = T(y,z,w)"),
    ("T22", "t = R(y); x = S(z); u = T(y,z,w)"),
    ("T24", "t = R(y); x = S(z); u = L(y,z)*w + J(y,z)"),
    ("T10j", "t = R(y); x = S(z); u = L(y,z)*w + J(y,z)"),
    ("T28", "t = R(y); x = S(z); u = exp(f(y) + g(z))*w"),
    ("T32", "t = R(y); x = k1*z + k2; u = g(y)*exp(k3*z)*w"),
];

fn ode_family(name: &str, n: usize, args: &[Atom]) -> Result<EquationFamily> {
    let xs = |k: usize| vec!["x"; k];
    let slots = (1..=n)
        .map(|i| CoefficientSlot {
            name: format!("a{i}"),
            args: args.to_vec(),
            monomial: JetMonomial::jet(Atom::jet("y", &xs(n - i))),
        })
        .collect();
    EquationFamily::new(
        name,
        vec!["x".into()],
        "y",
        JetMonomial::jet(Atom::jet("y", &xs(n))),
        slots,
    )
}

fn hyper_family(name: &str, args: [&[Atom]; 3]) -> Result<EquationFamily> {
    let monos = [
        Atom::jet("u", &["t"]),
        Atom::jet("u", &["x"]),
        Atom::jet::<&str>("u", &[]),
    ];
    let slots = args
        .iter()
        .zip(monos)
        .enumerate()
        .map(|(i, (a, m))| CoefficientSlot {
            name: format!("a{}", i + 1),
            args: a.to_vec(),
            monomial: JetMonomial::jet(m),
        })
        .collect();
    EquationFamily::new(
        name,
        vec!["t".into(), "x".into()],
        "u",
        JetMonomial::jet(Atom::jet("u", &["t", "x"])),
        slots,
    )
}

/// Built-in families. `n` is the order of the ODE families (default 3) and
/// is ignored for the hyperbolic ones.
pub fn catalog(name: &str, n: Option<usize>) -> Result<EquationFamily> {
    let (x, y) = (Atom::indep("x"), Atom::jet::<&str>("y", &[]));
    let (t, u) = (Atom::indep("t"), Atom::jet::<&str>("u", &[]));
    let ode = |args: &[Atom]| {
        let n = n.unwrap_or(3);
        if n < 3 {
            return Err(Error::OrderTooLow { name: name.into(), n });
        }
        ode_family(name, n, args)
    };
    match name {
        "glin" => ode(&[x]),
        "gliny" => ode(&[x, y]),
        "glin0y" => ode(&[y]),
        "hyper" => {
            let tx = [t, Atom::indep("x")];
            hyper_family(name, [&tx, &tx, &tx])
        }
        "hyperu" => {
            let txu = [t, Atom::indep("x"), u];
            hyper_family(name, [&txu, &txu, &txu])
        }
        "hyperxp" => {
            let only_t = [t.clone()];
            hyper_family(name, [&[Atom::indep("x")], &only_t, &[t, Atom::indep("x")]])
        }
        "hypertt" => {
            let only_t = [t.clone()];
            hyper_family(name, [&only_t, &only_t, &[t, Atom::indep("x")]])
        }
        _ => Err(Error::UnknownFamily(name.into())),
    }
}

fn f(name: &str, args: &[&str]) -> Expr {
    Expr::func(name, args.iter().map(|a| Expr::indep(a)).collect())
}

fn hyper_tr(t: Expr, x: Expr, u: Expr) -> Result<PointTransformation> {
    PointTransformation::new(
        vec!["t".into(), "x".into()],
        "u",
        vec!["y".into(), "z".into()],
        "w",
        vec![t, x],
        u,
    )
}

fn ode_tr(x: Expr, y: Expr) -> Result<PointTransformation> {
    PointTransformation::new(vec!["x".into()], "y", vec!["z".into()], "w", vec![x], y)
}

/// Built-in transformation by name; see [`CATALOG_TRANSFORMATIONS`].
pub fn transformation(name: &str) -> Result<PointTransformation> {
    let w = Expr::dep("w");
    let k = |s: &str| Expr::param(s);
    let (y, z) = (Expr::indep("y"), Expr::indep("z"));
    let yzw = || vec![y.clone(), z.clone(), w.clone()];
    match name {
        "T8" => ode_tr(f("S", &["z"]), f("L", &["z"]) * &w),
        "T10" => ode_tr(f("S", &["z"]), f("L", &["z"]) * &w + f("J", &["z"])),
        "T12" => ode_tr(k("k1") * &z + k("k2"), k("k3") * &w + k("k4")),
        "T14" => hyper_tr(f("R", &["y"]), f("S", &["z"]), f("L", &["y", "z"]) * &w),
        "T17" => hyper_tr(
            Expr::func("R", yzw()),
            Expr::func("S", yzw()),
            Expr::func("T", yzw()),
        ),
        "T21" => hyper_tr(f("R", &["y", "z"]), f("S", &["y", "z"]), Expr::func("T", yzw())),
        "T22" => hyper_tr(f("R", &["y"]), f("S", &["z"]), Expr::func("T", yzw())),
        "T24" | "T10j" => hyper_tr(
            f("R", &["y"]),
            f("S", &["z"]),
            f("L", &["y", "z"]) * &w + f("J", &["y", "z"]),
        ),
        "T28" => hyper_tr(
            f("R", &["y"]),
            f("S", &["z"]),
            Expr::exp(f("f", &["y"]) + f("g", &["z"])) * &w,
        ),
        "T32" => hyper_tr(
            f("R", &["y"]),
            k("k1") * &z + k("k2"),
            f("g", &["y"]) * Expr::exp(k("k3") * &z) * &w,
        ),
        _ => Err(Error::InvalidTransformation(format!("unknown transformation `{name}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hyperxp_slots() {
        let fam = catalog("hyperxp", None).unwrap();
        let args: Vec<String> = fam
            .slots
            .iter()
            .map(|s| s.function().to_string() + "*" + &s.monomial.to_string())
            .collect();
        assert_eq!(args, ["a1(x)*D[u,t]", "a2(t)*D[u,x]", "a3(t,x)*u"]);
        assert_eq!(fam.lead.to_string(), "D[u,t,x]");
    }

    #[test]
    fn glin3_slots() {
        let fam = catalog("glin", Some(3)).unwrap();
        assert_eq!(fam.template().to_string(), "D[y,x,x,x] + a1(x)*D[y,x,x] + a2(x)*D[y,x] + a3(x)*y");
        assert_eq!(fam.order, 3);
    }

    #[test]
    fn hypertt_slots() {
        let fam = catalog("hypertt", None).unwrap();
        assert_eq!(
            fam.template().to_string(),
            "D[u,t,x] + a1(t)*D[u,t] + a2(t)*D[u,x] + a3(t,x)*u"
        );
    }

    #[test]
    fn errors() {
        assert_eq!(catalog("nope", None), Err(Error::UnknownFamily("nope".into())));
        assert!(matches!(catalog("glin", Some(2)), Err(Error::OrderTooLow { n: 2, .. })));
        for (name, _) in CATALOG_TRANSFORMATIONS {
            transformation(name).unwrap();
        }
    }
}
