//! Truncated multivariate Taylor series. Used to push a concrete `w(z)`
//! through a point transformation and read off the old derivatives without
//! going through the symbolic prolongation.

use std::collections::BTreeMap;

use num_traits::ToPrimitive;
use rand::Rng;

use super::{coordinates, evaluate, relative_error, rng, solve, Instantiation, Point, PolyFn};
use crate::error::{Error, Result};
use crate::expr::{Atom, AtomKind, Expr, Node};
use crate::jets::PointTransformation;

/// Draw guard for [`validate_transformation`]: points where an assumption is
/// this close to zero make the series inversion badly conditioned.
const CONDITION_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    nvars: usize,
    order: u32,
    coef: BTreeMap<Vec<u32>, f64>,
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

impl Series {
    pub fn constant(nvars: usize, order: u32, c: f64) -> Series {
        let mut coef = BTreeMap::new();
        if c != 0.0 {
            coef.insert(vec![0; nvars], c);
        }
        Series { nvars, order, coef }
    }

    /// `v0 + d_i`.
    pub fn variable(nvars: usize, order: u32, i: usize, v0: f64) -> Series {
        let mut s = Series::constant(nvars, order, v0);
        if order >= 1 {
            let mut e = vec![0; nvars];
            e[i] = 1;
            s.coef.insert(e, 1.0);
        }
        s
    }

    fn like(&self, c: f64) -> Series {
        Series::constant(self.nvars, self.order, c)
    }

    pub fn value(&self) -> f64 {
        self.coefficient(&vec![0; self.nvars])
    }

    pub fn coefficient(&self, alpha: &[u32]) -> f64 {
        self.coef.get(alpha).copied().unwrap_or(0.0)
    }

    /// The partial derivative with multi-index `alpha` at the base point.
    pub fn derivative(&self, alpha: &[u32]) -> f64 {
        self.coefficient(alpha) * alpha.iter().map(|&k| factorial(k)).product::<f64>()
    }

    pub fn add(&self, o: &Series) -> Series {
        let mut r = self.clone();
        for (e, c) in &o.coef {
            *r.coef.entry(e.clone()).or_insert(0.0) += c;
        }
        r
    }

    pub fn scale(&self, f: f64) -> Series {
        let mut r = self.clone();
        r.coef.values_mut().for_each(|c| *c *= f);
        r
    }

    pub fn sub(&self, o: &Series) -> Series {
        self.add(&o.scale(-1.0))
    }

    pub fn mul(&self, o: &Series) -> Series {
        let mut r = self.like(0.0);
        for (ea, ca) in &self.coef {
            let da: u32 = ea.iter().sum();
            for (eb, cb) in &o.coef {
                if da + eb.iter().sum::<u32>() > self.order {
                    continue;
                }
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                *r.coef.entry(e).or_insert(0.0) += ca * cb;
            }
        }
        r
    }

    fn without_constant(&self) -> Series {
        let mut r = self.clone();
        r.coef.remove(&vec![0; self.nvars]);
        r
    }

    fn powu(&self, k: u32) -> Series {
        let mut r = self.like(1.0);
        for _ in 0..k {
            r = r.mul(self);
        }
        r
    }

    /// `sum_k c_k r^k` for a series `r` without constant term.
    fn apply(r: &Series, coeffs: impl Fn(u32) -> f64) -> Series {
        let mut out = r.like(coeffs(0));
        let mut pow = r.like(1.0);
        for k in 1..=r.order {
            pow = pow.mul(r);
            out = out.add(&pow.scale(coeffs(k)));
        }
        out
    }

    pub fn recip(&self) -> Result<Series> {
        let c0 = self.value();
        if c0 == 0.0 {
            return Err(Error::DivisionByZero);
        }
        let r = self.without_constant().scale(1.0 / c0);
        Ok(Series::apply(&r, |k| if k % 2 == 0 { 1.0 } else { -1.0 }).scale(1.0 / c0))
    }

    pub fn powi(&self, k: i32) -> Result<Series> {
        if k >= 0 {
            Ok(self.powu(k as u32))
        } else {
            Ok(self.recip()?.powu(k.unsigned_abs()))
        }
    }

    pub fn exp(&self) -> Series {
        let r = self.without_constant();
        Series::apply(&r, |k| 1.0 / factorial(k)).scale(self.value().exp())
    }

    /// `ln |s|`.
    pub fn ln(&self) -> Result<Series> {
        let c0 = self.value();
        if c0 == 0.0 {
            return Err(Error::DivisionByZero);
        }
        let r = self.without_constant().scale(1.0 / c0);
        let sign = |k: u32| if k % 2 == 1 { 1.0 } else { -1.0 };
        Ok(Series::apply(&r, |k| if k == 0 { c0.abs().ln() } else { sign(k) / f64::from(k) }))
    }

    /// `self(subs)`, where every substituted series has zero constant term.
    pub fn compose(&self, subs: &[Series]) -> Series {
        let base = &subs[0];
        let mut powers: Vec<Vec<Series>> = subs.iter().map(|s| vec![s.like(1.0)]).collect();
        let mut out = base.like(0.0);
        for (e, c) in &self.coef {
            let mut term = base.like(*c);
            for (i, &k) in e.iter().enumerate() {
                while powers[i].len() <= k as usize {
                    let next = powers[i].last().expect("nonempty").mul(&subs[i]);
                    powers[i].push(next);
                }
                term = term.mul(&powers[i][k as usize]);
            }
            out = out.add(&term);
        }
        out
    }

    /// Term-wise antiderivative in variable `i` with zero constant.
    pub fn integrate(&self, i: usize) -> Series {
        let mut r = self.like(0.0);
        for (e, c) in &self.coef {
            if e.iter().sum::<u32>() >= self.order {
                continue;
            }
            let mut e = e.clone();
            e[i] += 1;
            let f = f64::from(e[i]);
            r.coef.insert(e, c / f);
        }
        r
    }

    /// The variable index `i` when `self` is exactly `v0 + d_i`.
    fn as_variable(&self) -> Option<usize> {
        let rest = self.without_constant();
        match rest.coef.iter().collect::<Vec<_>>().as_slice() {
            [(e, c)] if **c == 1.0 && e.iter().sum::<u32>() == 1 => e.iter().position(|&k| k == 1),
            _ => None,
        }
    }
}

fn poly_series(p: &PolyFn, slots: &[usize], args: &[Series]) -> Series {
    let mut out = args[0].like(0.0);
    'terms: for (exps, c) in &p.terms {
        let mut e = exps.clone();
        let mut coef = *c as f64;
        for &s in slots {
            if e[s] == 0 {
                continue 'terms;
            }
            coef *= f64::from(e[s]);
            e[s] -= 1;
        }
        let mut term = args[0].like(coef);
        for (a, k) in args.iter().zip(&e) {
            term = term.mul(&a.powu(*k));
        }
        out = out.add(&term);
    }
    out
}

fn evaluate_series(
    e: &Expr,
    inst: &Instantiation,
    env: &BTreeMap<Atom, Series>,
    unit: &Series,
) -> Result<Series> {
    Ok(match e.node() {
        Node::Num(q) => unit.like(q.to_f64().unwrap_or(f64::NAN)),
        Node::Add(xs) => {
            let mut s = unit.like(0.0);
            for x in xs {
                s = s.add(&evaluate_series(x, inst, env, unit)?);
            }
            s
        }
        Node::Mul(xs) => {
            let mut s = unit.like(1.0);
            for x in xs {
                s = s.mul(&evaluate_series(x, inst, env, unit)?);
            }
            s
        }
        Node::Pow(b, k) => evaluate_series(b, inst, env, unit)?.powi(*k)?,
        Node::Exp(a) => evaluate_series(a, inst, env, unit)?.exp(),
        Node::Atom(a) => {
            if let Some(s) = env.get(a) {
                return Ok(s.clone());
            }
            let uncovered = || Error::UncoveredAtom(a.to_string());
            match a.kind() {
                AtomKind::Indep(_) | AtomKind::Jet { .. } => return Err(uncovered()),
                AtomKind::Param(p) => {
                    let v = inst.params.get(p).ok_or_else(uncovered)?;
                    unit.like(v.to_f64().unwrap_or(f64::NAN))
                }
                AtomKind::Func { name, deriv, args } => {
                    let p = inst.funcs.get(name).ok_or_else(uncovered)?;
                    if p.nvars != args.len() {
                        return Err(Error::VariableMismatch(format!("{name} called with {} arguments", args.len())));
                    }
                    let xs = args
                        .iter()
                        .map(|x| evaluate_series(x, inst, env, unit))
                        .collect::<Result<Vec<_>>>()?;
                    poly_series(p, deriv, &xs)
                }
                AtomKind::Log(arg) => evaluate_series(arg, inst, env, unit)?.ln()?,
                AtomKind::Antiderivative { integrand, var } => {
                    let key = Atom::indep(var);
                    let s = env.get(&key).ok_or_else(|| Error::UncoveredAtom(var.clone()))?;
                    let unsupported = || Error::UnsupportedAtom(a.to_string());
                    let i = s.as_variable().ok_or_else(unsupported)?;
                    if coordinates(&[integrand]).iter().any(|c| *c != key) {
                        return Err(unsupported());
                    }
                    let base: Point = [(key, s.value())].into_iter().collect();
                    let f0 = evaluate(&Expr::atom(a.clone()), inst, &base)?;
                    evaluate_series(integrand, inst, env, unit)?.integrate(i).add(&unit.like(f0))
                }
            }
        }
    })
}

fn multi_indices(nvars: usize, order: u32) -> Vec<Vec<u32>> {
    fn go(cur: &mut Vec<u32>, i: usize, left: u32, out: &mut Vec<Vec<u32>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for k in 0..=left {
            cur[i] = k;
            go(cur, i + 1, left - k, out);
        }
        cur[i] = 0;
    }
    let mut out = Vec::new();
    go(&mut vec![0; nvars], 0, order, &mut out);
    out
}

fn jet_atom(dep: &str, names: &[String], alpha: &[u32]) -> Atom {
    let index: Vec<&str> = names
        .iter()
        .zip(alpha)
        .flat_map(|(n, &k)| std::iter::repeat_n(n.as_str(), k as usize))
        .collect();
    Atom::jet(dep, &index)
}

/// The new coordinates `z0` together with `w` and its derivatives up to
/// `order`.
pub fn new_point(tr: &PointTransformation, w: &PolyFn, z0: &[f64], order: u32) -> Point {
    let names = tr.new_indep();
    let mut p: Point = names.iter().zip(z0).map(|(n, v)| (Atom::indep(n), *v)).collect();
    for alpha in multi_indices(names.len(), order) {
        let slots: Vec<usize> = alpha
            .iter()
            .enumerate()
            .flat_map(|(i, &k)| std::iter::repeat_n(i, k as usize))
            .collect();
        p.insert(jet_atom(tr.new_dep(), names, &alpha), w.eval_deriv(&slots, z0));
    }
    p
}

/// Old independent variables and old jets up to `order` at the image of
/// `z0`, for the concrete graph `w(z)`.
#[allow(clippy::needless_range_loop)]
pub fn series_prolongation(
    tr: &PointTransformation,
    inst: &Instantiation,
    w: &PolyFn,
    z0: &[f64],
    order: u32,
) -> Result<Point> {
    let p = tr.new_indep().len();
    let vars: Vec<Series> = (0..p).map(|k| Series::variable(p, order, k, z0[k])).collect();
    let unit = Series::constant(p, order, 1.0);
    let mut env: BTreeMap<Atom, Series> = tr
        .new_indep()
        .iter()
        .zip(&vars)
        .map(|(n, s)| (Atom::indep(n), s.clone()))
        .collect();
    env.insert(Atom::jet::<&str>(tr.new_dep(), &[]), poly_series(w, &[], &vars));

    let xs = tr
        .phi()
        .iter()
        .map(|e| evaluate_series(e, inst, &env, &unit))
        .collect::<Result<Vec<_>>>()?;
    let u = evaluate_series(tr.psi(), inst, &env, &unit)?;

    let unit_index = |j: usize| {
        let mut e = vec![0; p];
        e[j] = 1;
        e
    };
    let a: Vec<Vec<f64>> = xs
        .iter()
        .map(|x| (0..p).map(|j| x.coefficient(&unit_index(j))).collect())
        .collect();
    let mut inv = vec![vec![0.0; p]; p];
    for k in 0..p {
        let col = solve(a.clone(), (0..p).map(|i| f64::from(u8::from(i == k))).collect())
            .ok_or_else(|| Error::AssumptionViolated("Jacobian".into()))?;
        for j in 0..p {
            inv[j][k] = col[j];
        }
    }
    let d: Vec<Series> = (0..p).map(|k| Series::variable(p, order, k, 0.0)).collect();
    // nonlinear remainder of x(z) around z0
    let nonlinear: Vec<Series> = xs
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let mut r = x.without_constant();
            for j in 0..p {
                r = r.sub(&d[j].scale(a[i][j]));
            }
            r
        })
        .collect();
    let times_inv = |v: &[Series]| -> Vec<Series> {
        (0..p)
            .map(|j| (0..p).fold(unit.like(0.0), |acc, i| acc.add(&v[i].scale(inv[j][i]))))
            .collect()
    };
    let mut dz = times_inv(&d);
    for _ in 0..order {
        let rhs: Vec<Series> = (0..p).map(|i| d[i].sub(&nonlinear[i].compose(&dz))).collect();
        dz = times_inv(&rhs);
    }
    let ux = u.compose(&dz);

    let names = tr.old_indep();
    let mut out: Point = names.iter().zip(&xs).map(|(n, x)| (Atom::indep(n), x.value())).collect();
    for alpha in multi_indices(p, order) {
        out.insert(jet_atom(tr.old_dep(), names, &alpha), ux.derivative(&alpha));
    }
    Ok(out)
}

/// Compares `transformed`, the claimed image of `eq` under `tr` (not divided
/// by anything), with a direct numeric evaluation of `eq` at the old jets
/// obtained by [`series_prolongation`]. Functions are random polynomials and
/// `w` is a dense polynomial of degree two above the equation order. Returns
/// the maximum relative error.
pub fn validate_transformation(
    eq: &Expr,
    tr: &PointTransformation,
    transformed: &Expr,
    assumptions: &[Expr],
    seed: u64,
    count: usize,
) -> Result<f64> {
    let order = [eq.max_jet_order(tr.old_dep()), transformed.max_jet_order(tr.new_dep())]
        .into_iter()
        .flatten()
        .max()
        .unwrap_or(0) as u32;
    let mut r = rng(seed);
    let mut exprs: Vec<&Expr> = vec![eq, transformed];
    exprs.extend(tr.phi());
    exprs.push(tr.psi());
    exprs.extend(assumptions);
    let inst = Instantiation::random(&mut r, &exprs);
    let w = PolyFn::dense(&mut r, tr.new_indep().len(), order + 2);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let mut done = false;
        for _ in 0..super::MAX_RETRIES {
            let z0: Vec<f64> = (0..tr.new_indep().len()).map(|_| r.gen_range(-1.5..1.5)).collect();
            let new = new_point(tr, &w, &z0, order);
            let admissible = assumptions.iter().all(|a| {
                evaluate(a, &inst, &new).is_ok_and(|v| v.is_finite() && v.abs() > CONDITION_FLOOR)
            });
            if !admissible {
                continue;
            }
            let Ok(old) = series_prolongation(tr, &inst, &w, &z0, order) else {
                continue;
            };
            let numeric = evaluate(eq, &inst, &old)?;
            let symbolic = evaluate(transformed, &inst, &new)?;
            if !numeric.is_finite() || !symbolic.is_finite() {
                continue;
            }
            worst = worst.max(relative_error(symbolic, numeric));
            done = true;
            break;
        }
        if !done {
            return Err(Error::NoAdmissiblePoints);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_arithmetic() {
        let x = Series::variable(1, 6, 0, 0.5);
        let e = x.exp();
        for k in 0..=6 {
            assert!((e.derivative(&[k]) - 0.5f64.exp()).abs() < 1e-12);
        }
        let l = x.ln().unwrap();
        assert!((l.derivative(&[3]) - 2.0 / 0.125).abs() < 1e-9);
        let r = x.recip().unwrap().mul(&x);
        assert!((r.value() - 1.0).abs() < 1e-12);
        assert!(r.coefficient(&[2]).abs() < 1e-12);
    }

    #[test]
    fn inversion_of_a_scalar_map() {
        // x = z^3 + z, u = w = z: u_x = 1/(3z^2+1)
        let tr = PointTransformation::new(
            vec!["x".into()],
            "y",
            vec!["z".into()],
            "w",
            vec![Expr::pow(Expr::indep("z"), 3) + Expr::indep("z")],
            Expr::dep("w"),
        )
        .unwrap();
        let w = PolyFn {
            nvars: 1,
            terms: vec![(vec![1], 1)],
        };
        let p = series_prolongation(&tr, &Instantiation::default(), &w, &[0.7], 2).unwrap();
        let d = 3.0 * 0.49 + 1.0;
        assert!((p[&Atom::jet("y", &["x"])] - 1.0 / d).abs() < 1e-12);
        assert!((p[&Atom::jet("y", &["x", "x"])] + 6.0 * 0.7 / d.powi(3)).abs() < 1e-12);
    }
}
