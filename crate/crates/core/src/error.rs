use thiserror::Error;

use crate::dsl::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("division by zero: denominator normalizes to 0")]
    DivisionByZero,

    #[error("cannot differentiate with respect to {0}")]
    UnsupportedAtom(String),

    #[error("cannot substitute {value} for the integration variable {var}")]
    BoundVariable { var: String, value: String },

    #[error("singular transformation: Jacobian determinant {0} vanishes identically")]
    SingularTransformation(String),

    #[error("degenerate transformation: coefficient of lead monomial {0} vanishes identically")]
    DegenerateTransformation(String),

    #[error("invalid transformation: {0}")]
    InvalidTransformation(String),

    #[error("jet {jet} has order {found}, above the prolongation order {max}")]
    OrderExceeded { jet: String, found: usize, max: usize },

    #[error("variable mismatch: {0}")]
    VariableMismatch(String),

    #[error("unknown catalog family `{0}`")]
    UnknownFamily(String),

    #[error("family `{name}` needs order n >= 3, got {n}")]
    OrderTooLow { name: String, n: usize },

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invariant {name} is undefined: {certificate} normalizes to 0")]
    UndefinedInvariant { name: String, certificate: String },

    #[error("atom {0} is not covered by the instantiation or the evaluation point")]
    UncoveredAtom(String),

    #[error("assumption {0} vanishes at the evaluation point")]
    AssumptionViolated(String),

    #[error("could not draw evaluation points avoiding the recorded assumptions")]
    NoAdmissiblePoints,

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("invalid expression json: {0}")]
    Json(String),
}

impl Error {
    /// Stable machine-readable tag used in JSON error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DivisionByZero => "division-by-zero",
            Error::UnsupportedAtom(_) => "unsupported-atom",
            Error::BoundVariable { .. } => "bound-variable",
            Error::SingularTransformation(_) => "singular-transformation",
            Error::DegenerateTransformation(_) => "degenerate-transformation",
            Error::InvalidTransformation(_) => "invalid-transformation",
            Error::OrderExceeded { .. } => "order-exceeded",
            Error::VariableMismatch(_) => "variable-mismatch",
            Error::UnknownFamily(_) => "unknown-family",
            Error::OrderTooLow { .. } => "order-too-low",
            Error::InvalidFamily(_) => "invalid-family",
            Error::Precondition(_) => "precondition",
            Error::UndefinedInvariant { .. } => "undefined-invariant",
            Error::UncoveredAtom(_) => "uncovered-atom",
            Error::AssumptionViolated(_) => "assumption-violated",
            Error::NoAdmissiblePoints => "no-admissible-points",
            Error::Parse(_) => "parse",
            Error::Json(_) => "json",
        }
    }
}
