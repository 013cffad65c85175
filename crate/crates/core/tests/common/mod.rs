//! Random expression trees for property tests.

#![allow(dead_code)]

use eqv_core::expr::{Atom, Expr};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

pub fn config(seed: u64) -> Config {
    Config {
        cases: 200,
        rng_seed: RngSeed::Fixed(seed),
        failure_persistence: None,
        ..Config::default()
    }
}

#[derive(Debug, Clone)]
pub enum Tree {
    Int(i64),
    X,
    Y,
    W,
    Wy,
    /// `int(g(x, y), x)`
    Integral,
    F(Box<Tree>),
    G(Box<Tree>, Box<Tree>),
    Add(Box<Tree>, Box<Tree>),
    Mul(Box<Tree>, Box<Tree>),
    Neg(Box<Tree>),
    Pow(Box<Tree>, i32),
    /// `(t^2 + k)^-1`
    Den(Box<Tree>, i64),
    /// `exp` of a coordinate
    Exp(u8),
    /// `log(t^2 + 1)`
    Log(Box<Tree>),
}

pub fn x() -> Expr {
    Expr::indep("x")
}

pub fn y() -> Expr {
    Expr::indep("y")
}

pub fn w() -> Expr {
    Expr::dep("w")
}

pub fn wy() -> Expr {
    Expr::jet("w", &["y"])
}

pub fn add(a: Expr, b: Expr) -> Expr {
    Expr::add(vec![a, b])
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    Expr::mul(vec![a, b])
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    Expr::add(vec![a, -b])
}

impl Tree {
    pub fn expr(&self) -> Expr {
        match self {
            Tree::Int(n) => Expr::int(*n),
            Tree::X => x(),
            Tree::Y => y(),
            Tree::W => w(),
            Tree::Wy => wy(),
            Tree::Integral => Expr::antiderivative(Expr::func("g", vec![x(), y()]), "x"),
            Tree::F(a) => Expr::func("f", vec![a.expr()]),
            Tree::G(a, b) => Expr::func("g", vec![a.expr(), b.expr()]),
            Tree::Add(a, b) => add(a.expr(), b.expr()),
            Tree::Mul(a, b) => mul(a.expr(), b.expr()),
            Tree::Neg(a) => -a.expr(),
            Tree::Pow(a, k) => Expr::pow(a.expr(), *k),
            Tree::Den(a, k) => Expr::pow(add(Expr::pow(a.expr(), 2), Expr::int(*k)), -1),
            Tree::Exp(i) => Expr::exp([x(), y(), w()][*i as usize % 3].clone()),
            Tree::Log(a) => Expr::log(add(Expr::pow(a.expr(), 2), Expr::one())),
        }
    }
}

fn leaf() -> impl Strategy<Value = Tree> {
    prop_oneof![
        (-3i64..=3).prop_map(Tree::Int),
        Just(Tree::X),
        Just(Tree::Y),
        Just(Tree::W),
        Just(Tree::Wy),
        Just(Tree::Integral),
        (0u8..3).prop_map(Tree::Exp),
    ]
}

/// Small trees over `x`, `y`, `w`, `w_y` with function symbols `f`, `g`.
pub fn tree() -> impl Strategy<Value = Tree> {
    trees(leaf().boxed(), true)
}

/// Like [`tree`], with function arguments restricted to coordinates and no
/// antiderivatives, which keeps numeric values of moderate size.
pub fn flat_tree() -> impl Strategy<Value = Tree> {
    let coord = prop_oneof![Just(Tree::X), Just(Tree::Y), Just(Tree::W), Just(Tree::Wy)];
    let base = prop_oneof![
        3 => (-3i64..=3).prop_map(Tree::Int),
        3 => coord.clone(),
        1 => (0u8..3).prop_map(Tree::Exp),
        1 => coord.clone().prop_map(|a| Tree::F(a.into())),
        1 => (coord.clone(), coord).prop_map(|(a, b)| Tree::G(a.into(), b.into())),
    ];
    trees(base.boxed(), false)
}

fn trees(leaf: BoxedStrategy<Tree>, nested: bool) -> impl Strategy<Value = Tree> {
    let f = if nested { 1 } else { 0 };
    leaf.prop_recursive(3, 12, 2, move |inner| {
        prop_oneof![
            3 => (inner.clone(), inner.clone()).prop_map(|(a, b)| Tree::Add(a.into(), b.into())),
            3 => (inner.clone(), inner.clone()).prop_map(|(a, b)| Tree::Mul(a.into(), b.into())),
            1 => inner.clone().prop_map(|a| Tree::Neg(a.into())),
            1 => (inner.clone(), 2i32..=3).prop_map(|(a, k)| Tree::Pow(a.into(), k)),
            1 => (inner.clone(), 1i64..=3).prop_map(|(a, k)| Tree::Den(a.into(), k)),
            f => inner.clone().prop_map(|a| Tree::F(a.into())),
            f => (inner.clone(), inner.clone()).prop_map(|(a, b)| Tree::G(a.into(), b.into())),
            1 => inner.prop_map(|a| Tree::Log(a.into())),
        ]
    })
}

pub fn expr() -> impl Strategy<Value = Expr> {
    tree().prop_map(|t| t.expr())
}

pub fn coordinate() -> impl Strategy<Value = Atom> {
    prop_oneof![
        Just(Atom::indep("x")),
        Just(Atom::indep("y")),
        Just(Atom::jet::<&str>("w", &[])),
        Just(Atom::jet("w", &["y"])),
    ]
}
