//! Command-line driver: resolves families and transformations from a session
//! file or the built-in catalog, runs one command and reports JSON.

pub mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use eqv_core::dsl::{parse, parse_expr, ParseError, SessionFile};
use eqv_core::expr::{collect, expr_to_json, normalize, partial, Expr, JetMonomial};
use eqv_core::families::{
    catalog, certificate_residual, check_equivalence, theorem_instance_check, transformation, EquationFamily,
};
use eqv_core::hyperbolic::{contact_invariance_check_for, invariants, reduce_to_canonical, HyperbolicEquation};
use eqv_core::jets::{transform_equation_with_assumptions, PointTransformation};
use eqv_core::oracle::{self, validate_transformation};
use eqv_core::{Atom, Error};

use config::{ConfigError, OracleConfig};

#[derive(Debug, Parser)]
#[command(name = "eqv", version, about = "Equivalence transformations of linear differential equations")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Session file (.eqv) with declarations, families and transformations.
    #[arg(long, global = true)]
    pub session: Option<PathBuf>,
    /// TOML file with an [oracle] table (seed, tol, points).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Oracle RNG seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Largest accepted relative error.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Number of random evaluation points.
    #[arg(long, global = true)]
    pub points: Option<usize>,
    /// Also write the JSON report to this file.
    #[arg(long = "json-out", global = true)]
    pub json_out: Option<PathBuf>,
}

/// The equation to work on: a family (session or catalog) or a session
/// equation.
#[derive(Debug, Args)]
pub struct Subject {
    /// Family name from the session or the built-in catalog.
    #[arg(long, conflicts_with = "equation")]
    pub family: Option<String>,
    /// Order of catalog ODE families.
    #[arg(long)]
    pub order: Option<usize>,
    /// Equation name from the session.
    #[arg(long)]
    pub equation: Option<String>,
}

/// Values substituted for the coefficients of the chosen family or equation.
#[derive(Debug, Args)]
pub struct Coefficients {
    /// Coefficient of u_t.
    #[arg(long)]
    pub a1: Option<String>,
    /// Coefficient of u_x.
    #[arg(long)]
    pub a2: Option<String>,
    /// Coefficient of u.
    #[arg(long)]
    pub a3: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the transformed equation divided by its lead coefficient.
    Transform {
        #[command(flatten)]
        subject: Subject,
        #[arg(long)]
        transform: String,
    },
    /// Decide whether a transformation preserves a family.
    Check {
        #[command(flatten)]
        subject: Subject,
        #[arg(long)]
        transform: String,
    },
    /// The action induced on the family's coefficient functions.
    InducedAction {
        #[command(flatten)]
        subject: Subject,
        #[arg(long)]
        transform: String,
    },
    /// Check that a transformation of `--family` also preserves `--target`.
    TheoremCheck {
        #[command(flatten)]
        subject: Subject,
        #[arg(long)]
        target: String,
        #[arg(long)]
        transform: String,
        /// Check this many seeded random polynomial instances instead of
        /// the generic transformation.
        #[arg(long)]
        instances: Option<usize>,
    },
    /// Laplace and contact invariants of a hyperbolic equation.
    Invariants {
        #[command(flatten)]
        subject: Subject,
        #[command(flatten)]
        coefficients: Coefficients,
        /// Also check invariance of P and Q under this transformation.
        #[arg(long)]
        transform: Option<String>,
    },
    /// Reduce `u_tx + a1(x) u_t + a2(t) u_x + a3 u = 0` to `w_yz + b w = 0`.
    Reduce {
        #[command(flatten)]
        subject: Subject,
        #[command(flatten)]
        coefficients: Coefficients,
    },
    /// Numeric cross-check of a transformed equation and, for families, of
    /// the equivalence certificate.
    Oracle {
        #[command(flatten)]
        subject: Subject,
        #[arg(long)]
        transform: String,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}:{source}")]
    Session { path: String, source: ParseError },
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Session { .. } => "parse",
            CliError::Io { .. } => "io",
            CliError::Config(_) => "config",
            CliError::Usage(_) => "usage",
        }
    }
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// JSON report, `Null` for help and version output.
    pub report: Value,
    /// 0 positive, 1 negative, 2 error.
    pub code: i32,
    /// Human-readable text for standard error.
    pub summary: String,
}

impl Outcome {
    fn error(e: &CliError) -> Outcome {
        Outcome {
            report: json!({"error": {"kind": e.kind(), "message": e.to_string()}}),
            code: 2,
            summary: format!("error: {e}"),
        }
    }
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                return Outcome {
                    report: Value::Null,
                    code: 0,
                    summary: e.to_string(),
                };
            }
            let mut out = Outcome::error(&CliError::Usage(e.kind().to_string()));
            out.summary = e.to_string();
            return out;
        }
    };
    let out = match execute(&cli) {
        Ok(o) => o,
        Err(e) => Outcome::error(&e),
    };
    if let Some(path) = &cli.global.json_out {
        let text = serde_json::to_string_pretty(&out.report).expect("json values serialize");
        if let Err(source) = std::fs::write(path, text + "\n") {
            return Outcome::error(&CliError::Io {
                path: path.display().to_string(),
                source,
            });
        }
    }
    out
}

struct Context {
    session: SessionFile,
    oracle: OracleConfig,
}

fn load_session(path: &Path) -> Result<SessionFile, CliError> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: name.clone(),
        source,
    })?;
    parse(&text).map_err(|source| CliError::Session { path: name, source })
}

impl Context {
    fn new(g: &Global) -> Result<Context, CliError> {
        let mut oracle = match &g.config {
            Some(p) => config::load(p)?,
            None => OracleConfig::default(),
        };
        if let Some(s) = g.seed {
            oracle.seed = s;
        }
        if let Some(t) = g.tol {
            oracle.tol = t;
        }
        if let Some(n) = g.points {
            oracle.points = n;
        }
        if oracle.tol.is_nan() || oracle.tol <= 0.0 || oracle.points == 0 {
            return Err(CliError::Usage("--tol must be positive and --points nonzero".into()));
        }
        let session = match &g.session {
            Some(p) => load_session(p)?,
            None => SessionFile::default(),
        };
        Ok(Context { session, oracle })
    }

    fn family(&self, name: &str, order: Option<usize>) -> Result<EquationFamily, CliError> {
        match self.session.family(name) {
            Some(f) => Ok(f.clone()),
            None => Ok(catalog(name, order)?),
        }
    }

    fn subject(&self, s: &Subject) -> Result<Equation, CliError> {
        if let Some(name) = &s.family {
            let fam = self.family(name, s.order)?;
            return Ok(Equation {
                name: fam.name.clone(),
                expr: fam.template(),
                indep: fam.indep.clone(),
                dep: fam.dep.clone(),
                family: Some(fam),
            });
        }
        let Some(name) = &s.equation else {
            return Err(CliError::Usage("give --family or --equation".into()));
        };
        let expr = self
            .session
            .equation(name)
            .ok_or_else(|| CliError::Usage(format!("no equation `{name}` in the session")))?
            .clone();
        let deps: Vec<&String> = self
            .session
            .deps
            .iter()
            .filter(|d| expr.max_jet_order(d).is_some())
            .collect();
        let [dep] = deps.as_slice() else {
            return Err(CliError::Usage(format!("equation `{name}` must involve exactly one dependent variable")));
        };
        Ok(Equation {
            name: name.clone(),
            expr,
            indep: self.session.indep.clone(),
            dep: (*dep).clone(),
            family: None,
        })
    }

    fn transform(&self, name: &str, eq: &Equation) -> Result<PointTransformation, CliError> {
        if let Some(t) = self.session.transform(name) {
            return Ok(t.clone());
        }
        if name == "identity" {
            let new: Vec<String> = match eq.indep.len() {
                1 => vec!["z".into()],
                2 => vec!["y".into(), "z".into()],
                p => (1..=p).map(|i| format!("z{i}")).collect(),
            };
            let old: Vec<&str> = eq.indep.iter().map(String::as_str).collect();
            let new: Vec<&str> = new.iter().map(String::as_str).collect();
            return Ok(PointTransformation::identity(&old, &eq.dep, &new, "w")?);
        }
        Ok(transformation(name)?)
    }
}

struct Equation {
    name: String,
    expr: Expr,
    indep: Vec<String>,
    dep: String,
    family: Option<EquationFamily>,
}

impl Equation {
    fn family(&self) -> Result<&EquationFamily, CliError> {
        self.family
            .as_ref()
            .ok_or_else(|| CliError::Usage("this command needs --family".into()))
    }

    fn check_variables(&self, tr: &PointTransformation) -> Result<(), CliError> {
        let mut a = self.indep.clone();
        let mut b = tr.old_indep().to_vec();
        a.sort();
        b.sort();
        if a != b || self.dep != tr.old_dep() {
            return Err(Error::VariableMismatch(format!(
                "{} is written in ({}; {}) but the transformation maps ({}; {})",
                self.name,
                self.indep.join(", "),
                self.dep,
                tr.old_indep().join(", "),
                tr.old_dep()
            ))
            .into());
        }
        Ok(())
    }

    fn order(&self) -> usize {
        self.expr.max_jet_order(&self.dep).unwrap_or(0)
    }

    fn hyperbolic(&self, ctx: &Context, c: &Coefficients) -> Result<HyperbolicEquation, CliError> {
        let [t, x] = self.indep.as_slice() else {
            return Err(Error::Precondition(format!("{} has {} independent variables, not 2", self.name, self.indep.len())).into());
        };
        let jet = |idx: &[&String]| JetMonomial::jet(Atom::jet(&self.dep, idx));
        let monos = [jet(&[t, x]), jet(&[t]), jet(&[x]), jet(&[])];
        let not_hyperbolic = || Error::Precondition(format!("{} is not of the form u_tx + a1 u_t + a2 u_x + a3 u", self.name));
        let mut a = [Expr::zero(), Expr::zero(), Expr::zero()];
        match &self.family {
            Some(fam) => {
                if fam.lead != monos[0] {
                    return Err(not_hyperbolic().into());
                }
                for slot in &fam.slots {
                    let i = monos[1..].iter().position(|m| *m == slot.monomial).ok_or_else(not_hyperbolic)?;
                    a[i] = slot.function();
                }
            }
            None => {
                let col = collect(&self.expr, &monos)?;
                if !col.residual.is_zero()? {
                    return Err(not_hyperbolic().into());
                }
                let lead = col.coefficient(&monos[0]).cloned().unwrap_or_else(Expr::zero);
                if lead.is_zero()? {
                    return Err(not_hyperbolic().into());
                }
                for i in 0..3 {
                    let ci = col.coefficient(&monos[i + 1]).cloned().unwrap_or_else(Expr::zero);
                    a[i] = normalize(&(ci / &lead))?;
                }
            }
        }
        let mut scope = ctx.session.scope();
        scope.permissive = true;
        for v in [t, x] {
            if !scope.indep.contains(v) {
                scope.indep.push(v.clone());
            }
        }
        if !scope.deps.contains(&self.dep) {
            scope.deps.push(self.dep.clone());
        }
        for (i, text) in [&c.a1, &c.a2, &c.a3].into_iter().enumerate() {
            if let Some(text) = text {
                a[i] = parse_expr(text, &scope).map_err(|source| CliError::Session {
                    path: format!("--a{}", i + 1),
                    source,
                })?;
            }
        }
        let [a1, a2, a3] = a;
        Ok(HyperbolicEquation {
            vars: [t.clone(), x.clone()],
            dep: self.dep.clone(),
            a1,
            a2,
            a3,
        })
    }
}

fn texts(es: &[Expr]) -> Vec<String> {
    es.iter().map(|e| e.to_string()).collect()
}

fn verdict_code(holds: bool) -> i32 {
    if holds {
        0
    } else {
        1
    }
}

fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let ctx = Context::new(&cli.global)?;
    match &cli.command {
        Command::Transform { subject, transform } => {
            let eq = ctx.subject(subject)?;
            let tr = ctx.transform(transform, &eq)?;
            eq.check_variables(&tr)?;
            let t = transform_equation_with_assumptions(&eq.expr, &tr, eq.order())?;
            let jets = t.expr.jets_of(tr.new_dep());
            let top = jets.iter().max_by_key(|j| (j.jet_order(), std::cmp::Reverse((*j).clone())));
            let mut lead = Expr::one();
            if let Some(j) = top {
                let c = normalize(&partial(&t.expr, j)?)?;
                if !c.is_zero()? {
                    lead = c;
                }
            }
            let normalized = normalize(&(&t.expr / &lead))?;
            Ok(Outcome {
                summary: format!("{} under {transform}:\n  {normalized} = 0", eq.name),
                report: json!({
                    "command": "transform",
                    "subject": eq.name,
                    "transformation": tr.to_json(),
                    "transformed": normalized.to_string(),
                    "tree": expr_to_json(&normalized),
                    "lead_coefficient": lead.to_string(),
                    "assumptions": texts(&t.assumptions),
                }),
                code: 0,
            })
        }
        Command::Check { subject, transform } | Command::InducedAction { subject, transform } => {
            let eq = ctx.subject(subject)?;
            let fam = eq.family()?;
            let tr = ctx.transform(transform, &eq)?;
            let report = check_equivalence(fam, &tr)?;
            let holds = report.holds();
            let summary = format!(
                "{}: {} under {transform}",
                if holds { "equivalence" } else { "not-equivalence" },
                fam.name
            );
            let mut out = report.to_json();
            if matches!(cli.command, Command::InducedAction { .. }) {
                out = json!({"verdict": out["verdict"], "induced_action": out["induced_action"]});
            } else if holds {
                out["certificate"] = json!(certificate_residual(fam, &tr, &report)?.to_string());
            }
            out["command"] = json!(if matches!(cli.command, Command::Check { .. }) { "check" } else { "induced-action" });
            out["family"] = json!(fam.name);
            out["transform"] = json!(transform);
            Ok(Outcome {
                report: out,
                code: verdict_code(holds),
                summary,
            })
        }
        Command::TheoremCheck {
            subject,
            target,
            transform,
            instances,
        } => {
            let eq = ctx.subject(subject)?;
            let fam_a = eq.family()?;
            let fam_b = ctx.family(target, subject.order)?;
            let tr = ctx.transform(transform, &eq)?;
            let (holds, details) = match instances {
                None => {
                    let o = theorem_instance_check(fam_a, &fam_b, &tr)?;
                    (o.holds(), o.to_json())
                }
                Some(n) => {
                    let mut r = oracle::rng(ctx.oracle.seed);
                    let mut failed = Vec::new();
                    for i in 0..*n {
                        let (concrete, _) = oracle::random_instance(&mut r, &tr)?;
                        let o = theorem_instance_check(fam_a, &fam_b, &concrete)?;
                        if !o.holds() {
                            failed.push(json!({"instance": i, "transformation": concrete.to_json(), "outcome": o.to_json()}));
                        }
                    }
                    (
                        failed.is_empty(),
                        json!({"instances": n, "seed": ctx.oracle.seed, "failures": failed}),
                    )
                }
            };
            Ok(Outcome {
                summary: format!(
                    "{} -> {} under {transform}: {}",
                    fam_a.name,
                    fam_b.name,
                    if holds { "holds" } else { "contradiction" }
                ),
                report: json!({
                    "command": "theorem-check",
                    "family": fam_a.name,
                    "target": fam_b.name,
                    "transform": transform,
                    "verdict": if holds { "holds" } else { "contradiction" },
                    "details": details,
                }),
                code: verdict_code(holds),
            })
        }
        Command::Invariants {
            subject,
            coefficients,
            transform,
        } => {
            let eq = ctx.subject(subject)?;
            let h = eq.hyperbolic(&ctx, coefficients)?;
            let inv = invariants(&h)?;
            let mut report = json!({"command": "invariants", "subject": eq.name, "invariants": inv.to_json()});
            let mut holds = true;
            if let Some(name) = transform {
                let tr = ctx.transform(name, &eq)?;
                let c = contact_invariance_check_for(&h, &tr)?;
                holds = c.holds();
                report["contact"] = c.to_json();
            }
            let summary = format!("H = {}\nK = {}\nwave_reducible = {}", inv.h, inv.k, inv.wave_reducible);
            Ok(Outcome {
                report,
                code: verdict_code(holds),
                summary,
            })
        }
        Command::Reduce { subject, coefficients } => {
            let eq = ctx.subject(subject)?;
            let h = eq.hyperbolic(&ctx, coefficients)?;
            let r = reduce_to_canonical(&h)?;
            let ok = r.defect.is_literal_zero();
            let summary = format!(
                "b = {}\nreduced: {} = 0{}",
                r.b,
                r.reduced,
                if r.wave { " (wave equation)" } else { "" }
            );
            let mut report = r.to_json();
            report["command"] = json!("reduce");
            report["subject"] = json!(eq.name);
            Ok(Outcome {
                report,
                code: verdict_code(ok),
                summary,
            })
        }
        Command::Oracle { subject, transform } => {
            let eq = ctx.subject(subject)?;
            let tr = ctx.transform(transform, &eq)?;
            eq.check_variables(&tr)?;
            let cfg = ctx.oracle;
            let t = transform_equation_with_assumptions(&eq.expr, &tr, eq.order())?;
            let err = validate_transformation(&eq.expr, &tr, &t.expr, &t.assumptions, cfg.seed, cfg.points)?;
            let mutated = &t.expr + Expr::dep(tr.new_dep());
            let control = validate_transformation(&eq.expr, &tr, &mutated, &t.assumptions, cfg.seed, cfg.points)?;
            let mut holds = err <= cfg.tol && control > cfg.tol;
            let mut report = json!({
                "command": "oracle",
                "subject": eq.name,
                "transform": transform,
                "seed": cfg.seed,
                "points": cfg.points,
                "tolerance": cfg.tol,
                "transformed_error": err,
                "negative_control_error": control,
            });
            if let Some(fam) = &eq.family {
                let rep = check_equivalence(fam, &tr)?;
                report["verdict"] = json!(rep.verdict);
                if let (Some(action), Some(lead)) = (&rep.induced_action, &rep.lead_coefficient) {
                    let member = fam.member(&action.as_map(), tr.new_indep(), tr.new_dep())?;
                    let cert = oracle::check_identity(&(lead * member), &t.expr, &rep.assumptions, cfg.seed, cfg.points)?;
                    report["certificate_error"] = json!(cert);
                    holds &= cert <= cfg.tol;
                }
            }
            report["holds"] = json!(holds);
            Ok(Outcome {
                summary: format!(
                    "{} under {transform}: max relative error {err:.3e}, negative control {control:.3e} (seed {})",
                    eq.name, cfg.seed
                ),
                report,
                code: verdict_code(holds),
            })
        }
    }
}
