//! Numeric cross-checks: random polynomial instantiations, floating-point
//! evaluation and finite differences.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::expr::{
    instantiate_functions, substitute, Atom, AtomKind, Expr, FunctionBindings, FunctionBody, Node,
};
use crate::jets::PointTransformation;

mod series;

pub use series::{series_prolongation, validate_transformation, Series};

pub const DEFAULT_SEED: u64 = 20_240_611;
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_POINTS: usize = 12;
pub const DEFAULT_STEP: f64 = 1e-5;
/// Assumptions smaller than this in magnitude reject an evaluation point.
pub const ASSUMPTION_FLOOR: f64 = 1e-6;
pub(crate) const MAX_RETRIES: usize = 100;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A multivariate polynomial with integer coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyFn {
    pub nvars: usize,
    /// Exponent vector and coefficient.
    pub terms: Vec<(Vec<u32>, i64)>,
}

impl PolyFn {
    /// Random polynomial of total degree at most 3 with coefficients in
    /// {-3..3} \ {0} that depends on every one of its variables.
    pub fn random<R: Rng>(rng: &mut R, nvars: usize) -> PolyFn {
        let mut exps: Vec<Vec<u32>> = Vec::new();
        let mut cur = vec![0u32; nvars];
        all_exponents(&mut cur, 0, 3, &mut exps);
        let coeff = |rng: &mut R| {
            let c: i64 = rng.gen_range(1..=3);
            if rng.gen_bool(0.5) {
                c
            } else {
                -c
            }
        };
        let mut chosen: BTreeMap<Vec<u32>, i64> = BTreeMap::new();
        for v in 0..nvars {
            let with_v: Vec<&Vec<u32>> = exps.iter().filter(|e| e[v] > 0).collect();
            let e = (*with_v.choose(rng).expect("degree >= 1")).clone();
            chosen.insert(e, coeff(rng));
        }
        let extra = rng.gen_range(0..=2);
        for _ in 0..extra {
            let e = exps.choose(rng).expect("nonempty").clone();
            chosen.insert(e, coeff(rng));
        }
        PolyFn {
            nvars,
            terms: chosen.into_iter().collect(),
        }
    }

    /// Random polynomial using every monomial of total degree at most
    /// `degree`, so no derivative of order up to `degree` vanishes identically.
    pub fn dense<R: Rng>(rng: &mut R, nvars: usize, degree: u32) -> PolyFn {
        let mut exps: Vec<Vec<u32>> = Vec::new();
        let mut cur = vec![0u32; nvars];
        all_exponents(&mut cur, 0, degree, &mut exps);
        let terms = exps
            .into_iter()
            .map(|e| {
                let c: i64 = rng.gen_range(1..=3);
                (e, if rng.gen_bool(0.5) { c } else { -c })
            })
            .collect();
        PolyFn { nvars, terms }
    }

    /// Value of the partial derivative over the zero-based `slots` at `x`.
    pub fn eval_deriv(&self, slots: &[usize], x: &[f64]) -> f64 {
        let mut total = 0.0;
        'terms: for (exps, c) in &self.terms {
            let mut e = exps.clone();
            let mut coef = *c as f64;
            for &s in slots {
                if e[s] == 0 {
                    continue 'terms;
                }
                coef *= e[s] as f64;
                e[s] -= 1;
            }
            let mut v = coef;
            for (xi, ei) in x.iter().zip(&e) {
                v *= xi.powi(*ei as i32);
            }
            total += v;
        }
        total
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.eval_deriv(&[], x)
    }

    pub fn to_expr(&self, args: &[Expr]) -> Expr {
        Expr::add(
            self.terms
                .iter()
                .map(|(exps, c)| {
                    let mut f = vec![Expr::int(*c)];
                    for (a, k) in args.iter().zip(exps) {
                        f.push(Expr::pow(a.clone(), *k as i32));
                    }
                    Expr::mul(f)
                })
                .collect(),
        )
    }

    pub fn body(&self) -> FunctionBody {
        let params: Vec<String> = (0..self.nvars).map(|i| format!("s{i}")).collect();
        let args: Vec<Expr> = params.iter().map(|p| Expr::indep(p)).collect();
        FunctionBody {
            body: self.to_expr(&args),
            params,
        }
    }
}

fn all_exponents(cur: &mut Vec<u32>, i: usize, left: u32, out: &mut Vec<Vec<u32>>) {
    if i == cur.len() {
        out.push(cur.clone());
        return;
    }
    for k in 0..=left {
        cur[i] = k;
        all_exponents(cur, i + 1, left - k, out);
    }
    cur[i] = 0;
}

/// Concrete values for function symbols and parameters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Instantiation {
    pub funcs: BTreeMap<String, PolyFn>,
    pub params: BTreeMap<String, BigRational>,
}

/// A coordinate assignment for independent variables and jets.
pub type Point = BTreeMap<Atom, f64>;

fn random_nonzero<R: Rng>(rng: &mut R) -> BigRational {
    let n: i64 = *[-3, -2, -1, 1, 2, 3].choose(rng).expect("nonempty");
    BigRational::from_integer(BigInt::from(n))
}

impl Instantiation {
    /// Random polynomials for every function symbol of `exprs` and random
    /// nonzero integers for every parameter.
    pub fn random<R: Rng>(rng: &mut R, exprs: &[&Expr]) -> Instantiation {
        let mut inst = Instantiation::default();
        inst.cover(rng, exprs);
        inst
    }

    /// Adds instantiations for symbols of `exprs` not yet covered.
    pub fn cover<R: Rng>(&mut self, rng: &mut R, exprs: &[&Expr]) {
        let mut funcs: BTreeMap<String, usize> = BTreeMap::new();
        let mut params = Vec::new();
        for e in exprs {
            e.visit_atoms(&mut |a| match a.kind() {
                AtomKind::Func { name, args, .. } => {
                    funcs.entry(name.clone()).or_insert(args.len());
                }
                AtomKind::Param(p) => params.push(p.clone()),
                _ => {}
            });
        }
        for (name, arity) in funcs {
            self.funcs.entry(name).or_insert_with(|| PolyFn::random(rng, arity));
        }
        for p in params {
            self.params.entry(p).or_insert_with(|| random_nonzero(rng));
        }
    }

    /// Replaces the instantiated functions and parameters symbolically.
    pub fn apply(&self, e: &Expr) -> Result<Expr> {
        let bodies: FunctionBindings = self.funcs.iter().map(|(n, p)| (n.clone(), p.body())).collect();
        let e = instantiate_functions(e, &bodies)?;
        let m: BTreeMap<Atom, Expr> = self
            .params
            .iter()
            .map(|(n, v)| (Atom::param(n), Expr::rational(v.clone())))
            .collect();
        substitute(&e, &m)
    }
}

const GAUSS_NODES: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

fn integrate(f: &mut dyn FnMut(f64) -> Result<f64>, b: f64) -> Result<f64> {
    const PIECES: usize = 8;
    let width = b / PIECES as f64;
    let mut total = 0.0;
    for piece in 0..PIECES {
        let mid = width * (piece as f64 + 0.5);
        for (node, weight) in GAUSS_NODES {
            total += weight * f(mid + 0.5 * width * node)?;
        }
    }
    Ok(total * 0.5 * width)
}

/// Floating-point value of `e`. Antiderivatives are taken from 0, logarithms
/// of absolute values.
pub fn evaluate(e: &Expr, inst: &Instantiation, point: &Point) -> Result<f64> {
    Ok(match e.node() {
        Node::Num(q) => q.to_f64().unwrap_or(f64::NAN),
        Node::Add(xs) => {
            let mut s = 0.0;
            for x in xs {
                s += evaluate(x, inst, point)?;
            }
            s
        }
        Node::Mul(xs) => {
            let mut s = 1.0;
            for x in xs {
                s *= evaluate(x, inst, point)?;
            }
            s
        }
        Node::Pow(b, k) => evaluate(b, inst, point)?.powi(*k),
        Node::Exp(a) => evaluate(a, inst, point)?.exp(),
        Node::Atom(a) => evaluate_atom(a, inst, point)?,
    })
}

fn evaluate_atom(a: &Atom, inst: &Instantiation, point: &Point) -> Result<f64> {
    if let Some(v) = point.get(a) {
        return Ok(*v);
    }
    let uncovered = || Error::UncoveredAtom(a.to_string());
    match a.kind() {
        AtomKind::Indep(_) | AtomKind::Jet { .. } => Err(uncovered()),
        AtomKind::Param(p) => inst
            .params
            .get(p)
            .map(|q| q.to_f64().unwrap_or(f64::NAN))
            .ok_or_else(uncovered),
        AtomKind::Func { name, deriv, args } => {
            let p = inst.funcs.get(name).ok_or_else(uncovered)?;
            if p.nvars != args.len() {
                return Err(Error::VariableMismatch(format!(
                    "{name} instantiated with {} variables, called with {}",
                    p.nvars,
                    args.len()
                )));
            }
            let xs = args.iter().map(|x| evaluate(x, inst, point)).collect::<Result<Vec<_>>>()?;
            Ok(p.eval_deriv(deriv, &xs))
        }
        AtomKind::Antiderivative { integrand, var } => {
            let key = Atom::indep(var);
            let b = *point.get(&key).ok_or_else(|| Error::UncoveredAtom(var.clone()))?;
            let mut p = point.clone();
            integrate(
                &mut |s| {
                    p.insert(key.clone(), s);
                    evaluate(integrand, inst, &p)
                },
                b,
            )
        }
        AtomKind::Log(arg) => Ok(evaluate(arg, inst, point)?.abs().ln()),
    }
}

/// Like [`evaluate`], first checking that no assumption vanishes at `point`.
pub fn evaluate_checked(e: &Expr, inst: &Instantiation, point: &Point, assumptions: &[Expr]) -> Result<f64> {
    for a in assumptions {
        let v = evaluate(a, inst, point)?;
        if !v.is_finite() || v.abs() <= ASSUMPTION_FLOOR {
            return Err(Error::AssumptionViolated(a.to_string()));
        }
    }
    evaluate(e, inst, point)
}

/// `|a - b| / (1 + |b|)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let e = (a - b).abs() / (1.0 + b.abs());
    if e.is_nan() {
        f64::INFINITY
    } else {
        e
    }
}

/// Draws `count` points with coordinates in [-1.5, 1.5] for `coords`,
/// rejecting points where an assumption is within [`ASSUMPTION_FLOOR`] of 0
/// or fails to evaluate to a finite number.
pub fn draw_points<R: Rng>(
    rng: &mut R,
    coords: &[Atom],
    count: usize,
    inst: &Instantiation,
    assumptions: &[Expr],
) -> Result<Vec<Point>> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut found = None;
        for _ in 0..MAX_RETRIES {
            let p: Point = coords.iter().map(|a| (a.clone(), rng.gen_range(-1.5..1.5))).collect();
            let ok = assumptions.iter().all(|a| match evaluate(a, inst, &p) {
                Ok(v) => v.is_finite() && v.abs() > ASSUMPTION_FLOOR,
                Err(_) => false,
            });
            if ok {
                found = Some(p);
                break;
            }
        }
        out.push(found.ok_or(Error::NoAdmissiblePoints)?);
    }
    Ok(out)
}

/// Every independent variable and jet atom occurring in `exprs`, including
/// inside function arguments.
pub fn coordinates(exprs: &[&Expr]) -> Vec<Atom> {
    let mut set = std::collections::BTreeSet::new();
    for e in exprs {
        e.visit_atoms(&mut |a| {
            if matches!(a.kind(), AtomKind::Indep(_) | AtomKind::Jet { .. }) {
                set.insert(a.clone());
            }
            if let AtomKind::Antiderivative { var, .. } = a.kind() {
                set.insert(Atom::indep(var));
            }
        });
    }
    set.into_iter().collect()
}

/// Maximum relative error between `lhs` and `rhs` over `points`.
pub fn compare(lhs: &Expr, rhs: &Expr, inst: &Instantiation, points: &[Point]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in points {
        let a = evaluate(lhs, inst, p)?;
        let b = evaluate(rhs, inst, p)?;
        worst = worst.max(relative_error(a, b));
    }
    Ok(worst)
}

/// Seeded numeric comparison of two expressions at `count` random points,
/// instantiating every function symbol and parameter at random.
pub fn check_identity(lhs: &Expr, rhs: &Expr, assumptions: &[Expr], seed: u64, count: usize) -> Result<f64> {
    let mut r = rng(seed);
    let mut all: Vec<&Expr> = vec![lhs, rhs];
    all.extend(assumptions.iter());
    let inst = Instantiation::random(&mut r, &all);
    let coords = coordinates(&all);
    let points = draw_points(&mut r, &coords, count, &inst, assumptions)?;
    compare(lhs, rhs, &inst, &points)
}

/// Central-difference check of `symbolic` against the derivative of `base`
/// with respect to `var`: the maximum of `|FD - sym| / (1 + |sym|)`.
pub fn fd_check(
    symbolic: &Expr,
    base: &Expr,
    var: &Atom,
    inst: &Instantiation,
    points: &[Point],
    h: f64,
) -> Result<f64> {
    if h <= 0.0 {
        return Err(Error::Precondition("finite-difference step must be positive".into()));
    }
    let mut worst: f64 = 0.0;
    for p in points {
        let x = *p.get(var).ok_or_else(|| Error::UncoveredAtom(var.to_string()))?;
        let mut q = p.clone();
        q.insert(var.clone(), x + h);
        let up = evaluate(base, inst, &q)?;
        q.insert(var.clone(), x - h);
        let down = evaluate(base, inst, &q)?;
        let fd = (up - down) / (2.0 * h);
        let sym = evaluate(symbolic, inst, p)?;
        worst = worst.max(relative_error(fd, sym));
    }
    Ok(worst)
}

/// Replaces every function symbol and parameter of `tr` by random
/// polynomials and nonzero integers. Each polynomial depends on all of its
/// arguments, so Jacobian factors such as `R_y` do not vanish identically.
pub fn random_instance<R: Rng>(rng: &mut R, tr: &PointTransformation) -> Result<(PointTransformation, Instantiation)> {
    let mut exprs: Vec<&Expr> = tr.phi().iter().collect();
    exprs.push(tr.psi());
    let inst = Instantiation::random(rng, &exprs);
    let phi = tr.phi().iter().map(|e| inst.apply(e)).collect::<Result<Vec<_>>>()?;
    let psi = inst.apply(tr.psi())?;
    let concrete = PointTransformation::new(
        tr.old_indep().to_vec(),
        tr.old_dep(),
        tr.new_indep().to_vec(),
        tr.new_dep(),
        phi,
        psi,
    )?;
    Ok((concrete, inst))
}

/// Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
pub(crate) fn solve(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[piv][c].abs() < 1e-12 {
            return None;
        }
        m.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| m[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / m[r][r];
    }
    Some(x)
}
