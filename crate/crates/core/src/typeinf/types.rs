use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Elem {
    Bool,
    Int,
    Float,
    Complex,
    Unknown,
}

impl Elem {
    /// Standard numeric promotion: bool < int < float.
    pub fn promote(self, other: Elem) -> Elem {
        use Elem::*;
        match (self, other) {
            (Unknown, _) | (_, Unknown) => Unknown,
            (Complex, _) | (_, Complex) => Complex,
            (Float, _) | (_, Float) => Float,
            (Int, _) | (_, Int) => Int,
            (Bool, Bool) => Int,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Elem::Bool => "bool",
            Elem::Int => "int",
            Elem::Float => "float",
            Elem::Complex => "complex",
            Elem::Unknown => "?",
        }
    }
}

/// Inferred semantic type: scalar kind, or container with element kind and
/// rank.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum SemType {
    Int,
    Float,
    Bool,
    Array { elem: Elem, rank: Option<u32> },
    List { elem: Elem, rank: Option<u32> },
    #[default]
    Unknown,
}

impl SemType {
    pub fn scalar(elem: Elem) -> SemType {
        match elem {
            Elem::Bool => SemType::Bool,
            Elem::Int => SemType::Int,
            Elem::Float => SemType::Float,
            Elem::Complex | Elem::Unknown => SemType::Unknown,
        }
    }

    pub fn array(elem: Elem, rank: u32) -> SemType {
        SemType::Array { elem, rank: Some(rank) }
    }

    pub fn is_scalar(self) -> bool {
        matches!(self, SemType::Int | SemType::Float | SemType::Bool)
    }

    pub fn is_container(self) -> bool {
        matches!(self, SemType::Array { .. } | SemType::List { .. })
    }

    /// Rank with scalars as rank 0; `None` when unknown.
    pub fn rank(self) -> Option<u32> {
        match self {
            SemType::Int | SemType::Float | SemType::Bool => Some(0),
            SemType::Array { rank, .. } | SemType::List { rank, .. } => rank,
            SemType::Unknown => None,
        }
    }

    pub fn elem(self) -> Elem {
        match self {
            SemType::Int => Elem::Int,
            SemType::Float => Elem::Float,
            SemType::Bool => Elem::Bool,
            SemType::Array { elem, .. } | SemType::List { elem, .. } => elem,
            SemType::Unknown => Elem::Unknown,
        }
    }

    /// Lattice join used at assignments: equal types stay, anything else
    /// collapses to `Unknown`.
    pub fn join(self, other: SemType) -> SemType {
        if self == other {
            self
        } else {
            SemType::Unknown
        }
    }
}

impl fmt::Display for SemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rank = |r: &Option<u32>| r.map(|r| r.to_string()).unwrap_or_else(|| "?".into());
        match self {
            SemType::Int => f.write_str("int"),
            SemType::Float => f.write_str("float"),
            SemType::Bool => f.write_str("bool"),
            SemType::Array { elem, rank: r } => write!(f, "array({}, {})", elem.name(), rank(r)),
            SemType::List { elem, rank: r } => write!(f, "list({}, {})", elem.name(), rank(r)),
            SemType::Unknown => f.write_str("unknown"),
        }
    }
}
