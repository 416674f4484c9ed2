//! Affine integer sets and maps at desk scale.
//!
//! Sets are unions of conjunctions of affine constraints over named
//! dimensions and parameters. Projection uses rational Fourier–Motzkin
//! elimination with equality substitution and gcd tightening, so it is
//! exact for unit-coefficient systems and a superset otherwise. Emptiness
//! answers `Empty` only when the system is rationally infeasible, which
//! implies integer infeasibility; everything else is reported as
//! `MaybeNonEmpty`. `AffineSet::enumerate` is the brute-force reference
//! the rest of the crate is tested against.

mod expr;
mod map;
mod set;

pub use expr::AffineExpr;
pub use map::{lex_lt, primed, AffineMap, AffineRelation};
pub use set::{AffineSet, Constraint, Emptiness, Relation, MAX_DISJUNCTS};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("space mismatch: {left:?} vs {right:?}")]
    SpaceMismatch { left: Vec<String>, right: Vec<String> },
    #[error("symbol `{0}` is neither a dimension nor a parameter")]
    UndeclaredSymbol(String),
    #[error("lexicographic depth {depth} out of range for a {dims}-dimensional space")]
    DepthOutOfRange { depth: usize, dims: usize },
    #[error("set exceeds {MAX_DISJUNCTS} disjuncts ({0})")]
    TooManyDisjuncts(usize),
}
