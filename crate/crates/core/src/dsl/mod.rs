//! Session files and the expression text syntax.
//!
//! ```text
//! indep t x;
//! dep u;
//! func a1(t,x), a2(t,x), a3(t,x);
//! family F: D[u,t,x] + a1(t,x)*D[u,t] + a2(t,x)*D[u,x] + a3(t,x)*u = 0;
//! family G := catalog(hyperxp);
//! transform T: t = R(y); x = S(z); u = L(y,z)*w;
//! equation E: D[u,t,x] - u = 0;
//! ```

mod lexer;
mod parser;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::expr::Expr;
use crate::families::EquationFamily;
use crate::jets::PointTransformation;

/// Names with a fixed meaning in the syntax.
pub const RESERVED: &[&str] = &[
    "D", "exp", "log", "int", "catalog", "indep", "dep", "param", "func", "family", "transform", "equation",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    Undeclared,
    Arity,
    Duplicate,
    /// A well-formed statement describing an invalid object.
    Semantic,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(kind: ParseErrorKind, line: usize, col: usize, message: impl fmt::Display) -> Self {
        ParseError {
            kind,
            line,
            col,
            message: message.to_string(),
        }
    }
}

/// Symbols visible to [`parse_expr`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Scope {
    pub indep: Vec<String>,
    pub deps: Vec<String>,
    pub params: Vec<String>,
    /// Declared functions and their arity.
    pub funcs: BTreeMap<String, usize>,
    /// Read undeclared names as independent variables and accept any jet.
    pub permissive: bool,
}

impl Scope {
    pub fn permissive() -> Self {
        Scope {
            permissive: true,
            ..Scope::default()
        }
    }

    pub fn indep(mut self, names: &[&str]) -> Self {
        self.indep.extend(names.iter().map(|s| s.to_string()));
        self
    }

    pub fn dep(mut self, name: &str) -> Self {
        self.deps.push(name.to_string());
        self
    }

    pub fn params(mut self, names: &[&str]) -> Self {
        self.params.extend(names.iter().map(|s| s.to_string()));
        self
    }

    pub fn func(mut self, name: &str, arity: usize) -> Self {
        self.funcs.insert(name.to_string(), arity);
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SessionFile {
    pub indep: Vec<String>,
    pub deps: Vec<String>,
    pub params: Vec<String>,
    /// Declared functions with their formal argument names.
    pub funcs: BTreeMap<String, Vec<String>>,
    pub families: Vec<EquationFamily>,
    pub transforms: Vec<(String, PointTransformation)>,
    pub equations: Vec<(String, Expr)>,
}

impl SessionFile {
    pub fn is_empty(&self) -> bool {
        *self == SessionFile::default()
    }

    pub fn family(&self, name: &str) -> Option<&EquationFamily> {
        self.families.iter().find(|f| f.name == name)
    }

    pub fn transform(&self, name: &str) -> Option<&PointTransformation> {
        self.transforms.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn equation(&self, name: &str) -> Option<&Expr> {
        self.equations.iter().find(|(n, _)| n == name).map(|(_, e)| e)
    }

    /// The declarations of this file as a strict scope.
    pub fn scope(&self) -> Scope {
        Scope {
            indep: self.indep.clone(),
            deps: self.deps.clone(),
            params: self.params.clone(),
            funcs: self.funcs.iter().map(|(n, a)| (n.clone(), a.len())).collect(),
            permissive: false,
        }
    }
}

/// Parses a session file.
pub fn parse(text: &str) -> Result<SessionFile, ParseError> {
    parser::parse_session(text)
}

/// Parses one expression against `scope`.
pub fn parse_expr(text: &str, scope: &Scope) -> Result<Expr, ParseError> {
    let mut p = parser::Parser::new(text, scope.clone())?;
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}
