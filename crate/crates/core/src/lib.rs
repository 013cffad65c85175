//! Symbolic equivalence checking for linear differential equations under
//! point transformations.

pub mod dsl;
pub mod error;
pub mod expr;
pub mod families;
pub mod hyperbolic;
pub mod jets;
pub mod oracle;

pub use error::{Error, Result};
pub use expr::{normalize, Atom, AtomKind, Expr, Node};
