use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use super::lexer::{tokenize, Tok, Token};
use super::{ParseError, ParseErrorKind, Scope, SessionFile, RESERVED};
use crate::error::Error;
use crate::expr::{substitute, Atom, Expr, MAX_EXPONENT};
use crate::families::{catalog, transformation, EquationFamily};
use crate::jets::PointTransformation;

type PResult<T> = Result<T, ParseError>;
/// Header names with their tokens: `(indep...; dep)`.
type HeaderNames = (Vec<(String, Token)>, (String, Token));

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
    pub scope: Scope,
    locals: BTreeMap<String, Expr>,
    /// When set, undeclared bare identifiers are recorded here and read as
    /// independent variables.
    capture: Option<Vec<String>>,
    /// Functions first seen in the current statement, with their arity.
    implicit: BTreeMap<String, usize>,
    depth: usize,
}

const MAX_DEPTH: usize = 200;

impl Parser {
    pub fn new(text: &str, scope: Scope) -> PResult<Self> {
        Ok(Parser {
            toks: tokenize(text)?,
            pos: 0,
            scope,
            locals: BTreeMap::new(),
            capture: None,
            implicit: BTreeMap::new(),
            depth: 0,
        })
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err_at(t: &Token, kind: ParseErrorKind, msg: impl std::fmt::Display) -> ParseError {
        ParseError::new(kind, t.line, t.col, msg)
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        let t = self.peek();
        Parser::err_at(t, ParseErrorKind::Syntax, format!("expected {wanted}, found {}", t.tok.describe()))
    }

    fn at_sym(&self, c: char) -> bool {
        self.peek().tok == Tok::Sym(c)
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if self.at_sym(c) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, c: char) -> PResult<()> {
        if self.eat_sym(c) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{c}`")))
        }
    }

    fn ident(&mut self) -> PResult<(String, Token)> {
        match self.peek().tok.clone() {
            Tok::Ident(s) => Ok((s, self.next())),
            _ => Err(self.unexpected("a name")),
        }
    }

    fn int(&mut self) -> PResult<(BigInt, Token)> {
        match self.peek().tok.clone() {
            Tok::Int(n) => Ok((n, self.next())),
            _ => Err(self.unexpected("an integer")),
        }
    }

    pub fn expect_eof(&self) -> PResult<()> {
        if self.peek().tok == Tok::Eof {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.too_deep());
        }
        let e = self.sum();
        self.depth -= 1;
        e
    }

    fn too_deep(&self) -> ParseError {
        Parser::err_at(self.peek(), ParseErrorKind::Syntax, "expression nested too deeply")
    }

    fn sum(&mut self) -> PResult<Expr> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat_sym('+') {
                terms.push(self.term()?);
            } else if self.eat_sym('-') {
                terms.push(-self.term()?);
            } else {
                return Ok(Expr::add(terms));
            }
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut e = self.unary()?;
        loop {
            if self.eat_sym('*') {
                e = e * self.unary()?;
            } else if self.eat_sym('/') {
                e = e / self.unary()?;
            } else {
                return Ok(e);
            }
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        let mut negate = false;
        loop {
            if self.eat_sym('-') {
                negate = !negate;
            } else if !self.eat_sym('+') {
                break;
            }
        }
        let e = self.power()?;
        Ok(if negate { -e } else { e })
    }

    fn power(&mut self) -> PResult<Expr> {
        let base = self.primary()?;
        if !self.eat_sym('^') {
            return Ok(base);
        }
        let paren = self.eat_sym('(');
        let negative = self.eat_sym('-');
        let (n, t) = self.int()?;
        if paren {
            self.expect_sym(')')?;
        }
        let n = if negative { -n } else { n };
        let k = n
            .to_i32()
            .filter(|k| k.unsigned_abs() <= MAX_EXPONENT)
            .ok_or_else(|| Parser::err_at(&t, ParseErrorKind::Syntax, "exponent out of range"))?;
        Ok(Expr::pow(base, k))
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().tok.clone() {
            Tok::Int(n) => {
                self.next();
                Ok(Expr::rational(n.into()))
            }
            Tok::Sym('(') => {
                self.next();
                let e = self.expr()?;
                self.expect_sym(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let t = self.next();
                if name == "D" && self.at_sym('[') {
                    return self.jet();
                }
                if self.at_sym('[') || self.at_sym('(') {
                    return self.call(&name, &t);
                }
                self.resolve(&name, &t)
            }
            _ => Err(self.unexpected("an expression")),
        }
    }

    fn jet(&mut self) -> PResult<Expr> {
        self.expect_sym('[')?;
        let (dep, dt) = self.ident()?;
        if !self.scope.permissive && !self.scope.deps.contains(&dep) {
            return Err(Parser::err_at(
                &dt,
                ParseErrorKind::Undeclared,
                format!("`{dep}` is not a declared dependent variable"),
            ));
        }
        let mut index = Vec::new();
        while self.eat_sym(',') {
            let (v, vt) = self.ident()?;
            if !self.scope.permissive && !self.scope.indep.contains(&v) {
                return Err(Parser::err_at(
                    &vt,
                    ParseErrorKind::Undeclared,
                    format!("`{v}` is not a declared independent variable"),
                ));
            }
            index.push(v);
        }
        self.expect_sym(']')?;
        Ok(Expr::jet(&dep, &index))
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect_sym('(')?;
        let mut args = Vec::new();
        if self.eat_sym(')') {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if self.eat_sym(')') {
                return Ok(args);
            }
            self.expect_sym(',')?;
        }
    }

    fn call(&mut self, name: &str, at: &Token) -> PResult<Expr> {
        let mut slots = Vec::new();
        if self.eat_sym('[') {
            loop {
                let (n, t) = self.int()?;
                let k = n
                    .to_usize()
                    .filter(|k| *k >= 1)
                    .ok_or_else(|| Parser::err_at(&t, ParseErrorKind::Syntax, "slot indices start at 1"))?;
                slots.push(k - 1);
                if self.eat_sym(']') {
                    break;
                }
                self.expect_sym(',')?;
            }
            if !self.at_sym('(') {
                return Err(self.unexpected("`(`"));
            }
        }
        let builtin = slots.is_empty() && matches!(name, "exp" | "log" | "int");
        if builtin {
            self.expect_sym('(')?;
            let arg = self.expr()?;
            let e = match name {
                "exp" => Expr::exp(arg),
                "log" => Expr::log(arg),
                _ => {
                    self.expect_sym(',')?;
                    let (v, vt) = self.ident()?;
                    let var = self.resolve(&v, &vt)?;
                    if !matches!(var.as_atom().map(Atom::kind), Some(crate::expr::AtomKind::Indep(_))) {
                        return Err(Parser::err_at(
                            &vt,
                            ParseErrorKind::Semantic,
                            format!("`{v}` is not an independent variable"),
                        ));
                    }
                    Expr::antiderivative(arg, &v)
                }
            };
            self.expect_sym(')')?;
            return Ok(e);
        }
        if RESERVED.contains(&name) {
            return Err(Parser::err_at(at, ParseErrorKind::Syntax, format!("`{name}` cannot be called here")));
        }
        if self.locals.contains_key(name)
            || self.scope.indep.iter().chain(&self.scope.deps).chain(&self.scope.params).any(|s| s == name)
        {
            return Err(Parser::err_at(
                at,
                ParseErrorKind::Semantic,
                format!("`{name}` is not a function"),
            ));
        }
        let args = self.args()?;
        let known = self.scope.funcs.get(name).or_else(|| self.implicit.get(name)).copied();
        match known {
            Some(k) if k != args.len() => {
                return Err(Parser::err_at(
                    at,
                    ParseErrorKind::Arity,
                    format!("`{name}` takes {k} arguments, got {}", args.len()),
                ))
            }
            Some(_) => {}
            None => {
                self.implicit.insert(name.to_string(), args.len());
            }
        }
        if let Some(s) = slots.iter().find(|s| **s >= args.len()) {
            return Err(Parser::err_at(
                at,
                ParseErrorKind::Arity,
                format!("`{name}` has no argument slot {}", s + 1),
            ));
        }
        Ok(Expr::func_deriv(name, slots, args))
    }

    fn resolve(&mut self, name: &str, t: &Token) -> PResult<Expr> {
        if let Some(e) = self.locals.get(name) {
            return Ok(e.clone());
        }
        if self.scope.deps.iter().any(|s| s == name) {
            return Ok(Expr::dep(name));
        }
        if self.scope.indep.iter().any(|s| s == name) {
            return Ok(Expr::indep(name));
        }
        if self.scope.params.iter().any(|s| s == name) {
            return Ok(Expr::param(name));
        }
        if self.scope.funcs.contains_key(name) {
            return Err(Parser::err_at(t, ParseErrorKind::Arity, format!("function `{name}` used without arguments")));
        }
        if RESERVED.contains(&name) {
            return Err(Parser::err_at(t, ParseErrorKind::Syntax, format!("`{name}` is reserved")));
        }
        if let Some(c) = &mut self.capture {
            if !c.iter().any(|s| s == name) {
                c.push(name.to_string());
            }
            return Ok(Expr::indep(name));
        }
        if self.scope.permissive {
            return Ok(Expr::indep(name));
        }
        Err(Parser::err_at(t, ParseErrorKind::Undeclared, format!("undeclared symbol `{name}`")))
    }

    /// `lhs [= rhs]`, returned as `lhs - rhs`.
    fn equation(&mut self) -> PResult<Expr> {
        let lhs = self.expr()?;
        if self.eat_sym('=') {
            let rhs = self.expr()?;
            if rhs.is_literal_zero() {
                return Ok(lhs);
            }
            return Ok(lhs - rhs);
        }
        Ok(lhs)
    }

    fn name_list(&mut self) -> PResult<Vec<(String, Token)>> {
        let mut out = vec![self.ident()?];
        loop {
            self.eat_sym(',');
            match self.peek().tok {
                Tok::Ident(_) => out.push(self.ident()?),
                _ => return Ok(out),
            }
        }
    }

    /// `(a, b; c)`: independent variables and one dependent variable.
    fn header(&mut self) -> PResult<Option<HeaderNames>> {
        if !self.eat_sym('(') {
            return Ok(None);
        }
        let vars = self.name_list()?;
        self.expect_sym(';')?;
        let dep = self.ident()?;
        self.expect_sym(')')?;
        Ok(Some((vars, dep)))
    }

    fn catalog_call(&mut self) -> PResult<(String, Option<BigInt>, Token)> {
        let (kw, t) = self.ident()?;
        if kw != "catalog" {
            return Err(Parser::err_at(&t, ParseErrorKind::Syntax, "expected `catalog(...)`"));
        }
        self.expect_sym('(')?;
        let (name, nt) = self.ident()?;
        let n = if self.eat_sym(',') { Some(self.int()?.0) } else { None };
        self.expect_sym(')')?;
        Ok((name, n, nt))
    }
}

fn semantic(t: &Token, e: Error) -> ParseError {
    let msg = match e {
        Error::Parse(p) => return p,
        other => other.to_string(),
    };
    ParseError::new(ParseErrorKind::Semantic, t.line, t.col, msg)
}

pub(crate) fn parse_session(text: &str) -> PResult<SessionFile> {
    let mut p = Parser::new(text, Scope::default())?;
    let mut s = SessionFile::default();
    let mut taken: Vec<String> = Vec::new();
    let claim = |taken: &mut Vec<String>, name: &str, t: &Token| -> PResult<()> {
        if RESERVED.contains(&name) {
            return Err(Parser::err_at(t, ParseErrorKind::Syntax, format!("`{name}` is reserved")));
        }
        if taken.iter().any(|n| n == name) {
            return Err(Parser::err_at(t, ParseErrorKind::Duplicate, format!("`{name}` is already defined")));
        }
        taken.push(name.to_string());
        Ok(())
    };
    while p.peek().tok != Tok::Eof {
        p.implicit.clear();
        p.locals.clear();
        p.capture = None;
        let (kw, kt) = p.ident()?;
        match kw.as_str() {
            "indep" | "dep" | "param" => {
                for (name, t) in p.name_list()? {
                    claim(&mut taken, &name, &t)?;
                    let list = match kw.as_str() {
                        "indep" => &mut p.scope.indep,
                        "dep" => &mut p.scope.deps,
                        _ => &mut p.scope.params,
                    };
                    list.push(name);
                }
                p.expect_sym(';')?;
            }
            "func" => {
                loop {
                    let (name, t) = p.ident()?;
                    claim(&mut taken, &name, &t)?;
                    p.expect_sym('(')?;
                    let mut params = Vec::new();
                    if !p.eat_sym(')') {
                        loop {
                            params.push(p.ident()?.0);
                            if p.eat_sym(')') {
                                break;
                            }
                            p.expect_sym(',')?;
                        }
                    }
                    p.scope.funcs.insert(name.clone(), params.len());
                    s.funcs.insert(name, params);
                    if !p.eat_sym(',') {
                        break;
                    }
                }
                p.expect_sym(';')?;
            }
            "family" => {
                let (name, nt) = p.ident()?;
                claim(&mut taken, &name, &nt)?;
                let header = p.header()?;
                let fam = if p.peek().tok == Tok::Define {
                    p.next();
                    let (cat, n, ct) = p.catalog_call()?;
                    let n = n.map(|n| n.to_usize().unwrap_or(usize::MAX));
                    let mut fam = catalog(&cat, n).map_err(|e| semantic(&ct, e))?;
                    fam.name = name;
                    fam
                } else {
                    p.expect_sym(':')?;
                    let (indep, dep) = family_variables(&p, header, &kt)?;
                    let e = p.equation()?;
                    EquationFamily::from_template(&name, &e, indep, &dep).map_err(|e| semantic(&kt, e))?
                };
                p.expect_sym(';')?;
                s.families.push(fam);
            }
            "transform" => {
                let (name, nt) = p.ident()?;
                claim(&mut taken, &name, &nt)?;
                let tr = if p.peek().tok == Tok::Define {
                    p.next();
                    let (cat, _, ct) = p.catalog_call()?;
                    p.expect_sym(';')?;
                    transformation(&cat).map_err(|e| semantic(&ct, e))?
                } else {
                    let header = p.header()?;
                    p.expect_sym(':')?;
                    transform_body(&mut p, header, &kt)?
                };
                s.transforms.push((name, tr));
            }
            "equation" => {
                let (name, nt) = p.ident()?;
                claim(&mut taken, &name, &nt)?;
                p.expect_sym(':')?;
                let e = p.equation()?;
                p.expect_sym(';')?;
                s.equations.push((name, e));
            }
            _ => {
                return Err(Parser::err_at(
                    &kt,
                    ParseErrorKind::Syntax,
                    format!("unknown statement `{kw}`"),
                ))
            }
        }
    }
    s.indep = p.scope.indep.clone();
    s.deps = p.scope.deps.clone();
    s.params = p.scope.params.clone();
    Ok(s)
}

type Header = Option<(Vec<(String, Token)>, (String, Token))>;

fn family_variables(p: &Parser, header: Header, at: &Token) -> PResult<(Vec<String>, String)> {
    match header {
        Some((vars, (dep, dt))) => {
            for (v, t) in &vars {
                if !p.scope.indep.contains(v) {
                    return Err(Parser::err_at(
                        t,
                        ParseErrorKind::Undeclared,
                        format!("`{v}` is not a declared independent variable"),
                    ));
                }
            }
            if !p.scope.deps.contains(&dep) {
                return Err(Parser::err_at(
                    &dt,
                    ParseErrorKind::Undeclared,
                    format!("`{dep}` is not a declared dependent variable"),
                ));
            }
            Ok((vars.into_iter().map(|(v, _)| v).collect(), dep))
        }
        None => match p.scope.deps.as_slice() {
            [dep] if !p.scope.indep.is_empty() => Ok((p.scope.indep.clone(), dep.clone())),
            _ => Err(Parser::err_at(
                at,
                ParseErrorKind::Semantic,
                "declare one dependent variable and at least one independent variable, or give a `(vars; dep)` header",
            )),
        },
    }
}

fn transform_body(p: &mut Parser, header: Header, at: &Token) -> PResult<PointTransformation> {
    match &header {
        Some((vars, (dep, _))) => {
            for (v, _) in vars {
                p.locals.insert(v.clone(), Expr::indep(v));
            }
            p.locals.insert(dep.clone(), Expr::dep(dep));
        }
        None => p.capture = Some(Vec::new()),
    }
    let mut old_indep = Vec::new();
    let mut phi = Vec::new();
    let mut dep_eq: Option<(String, Expr)> = None;
    while matches!(p.peek().tok, Tok::Ident(_)) && *p.peek_at(1) == Tok::Sym('=') {
        let (lhs, lt) = p.ident()?;
        p.expect_sym('=')?;
        let e = p.expr()?;
        p.expect_sym(';')?;
        if p.scope.deps.contains(&lhs) {
            if dep_eq.is_some() {
                return Err(Parser::err_at(&lt, ParseErrorKind::Semantic, "more than one dependent variable assigned"));
            }
            dep_eq = Some((lhs, e));
        } else if p.scope.indep.contains(&lhs) {
            if old_indep.contains(&lhs) {
                return Err(Parser::err_at(&lt, ParseErrorKind::Duplicate, format!("`{lhs}` assigned twice")));
            }
            old_indep.push(lhs);
            phi.push(e);
        } else {
            return Err(Parser::err_at(&lt, ParseErrorKind::Undeclared, format!("`{lhs}` is not a declared variable")));
        }
    }
    let Some((old_dep, psi)) = dep_eq else {
        return Err(Parser::err_at(
            p.peek(),
            ParseErrorKind::Syntax,
            "transformation needs an assignment to the dependent variable",
        ));
    };
    let (new_indep, new_dep, phi, psi) = match header {
        Some((vars, (dep, _))) => (vars.into_iter().map(|(v, _)| v).collect::<Vec<_>>(), dep, phi, psi),
        None => {
            let mut found = p.capture.take().unwrap_or_default();
            if found.len() != old_indep.len() + 1 {
                return Err(Parser::err_at(
                    at,
                    ParseErrorKind::Semantic,
                    format!(
                        "found new variables [{}], expected {}; give a `(vars; dep)` header",
                        found.join(", "),
                        old_indep.len() + 1
                    ),
                ));
            }
            let dep = found.pop().expect("nonempty");
            let m = BTreeMap::from([(Atom::indep(&dep), Expr::dep(&dep))]);
            let fix = |e: &Expr| substitute(e, &m).map_err(|e| semantic(at, e));
            let phi = phi.iter().map(fix).collect::<PResult<Vec<_>>>()?;
            let psi = fix(&psi)?;
            (found, dep, phi, psi)
        }
    };
    p.locals.clear();
    PointTransformation::new(old_indep, old_dep, new_indep, new_dep, phi, psi).map_err(|e| semantic(at, e))
}
