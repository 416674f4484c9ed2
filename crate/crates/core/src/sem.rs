//! Element-wise semantics trees shared by the knowledge base, the SCoP
//! and the remapper.
//!
//! A tree describes the value of one element of a statement's write, as
//! a function of the statement's iterators. Reductions and row operations
//! bind local variables whose ranges are part of the node.

use std::collections::BTreeSet;
use std::fmt;

use crate::polyset::AffineExpr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SemOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Neg,
}

impl SemOp {
    pub fn name(self) -> &'static str {
        match self {
            SemOp::Add => "add",
            SemOp::Sub => "sub",
            SemOp::Mul => "mult",
            SemOp::Div => "div",
            SemOp::Pow => "pow",
            SemOp::Neg => "neg",
        }
    }

    pub fn from_name(s: &str) -> Option<SemOp> {
        Some(match s {
            "add" => SemOp::Add,
            "sub" => SemOp::Sub,
            "mult" => SemOp::Mul,
            "div" => SemOp::Div,
            "pow" => SemOp::Pow,
            "neg" => SemOp::Neg,
            _ => return None,
        })
    }

    pub fn symbol(self) -> &'static str {
        match self {
            SemOp::Add => "+",
            SemOp::Sub | SemOp::Neg => "-",
            SemOp::Mul => "*",
            SemOp::Div => "/",
            SemOp::Pow => "**",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sem {
    /// One element of an array, or a scalar variable when `index` is empty.
    Read { array: String, index: Vec<AffineExpr> },
    /// Literal, kept as source text.
    Const(String),
    /// Integer value of an affine form of iterators and parameters.
    Affine(AffineExpr),
    Op { op: SemOp, args: Vec<Sem> },
    /// `sum` of `body` over `lo <= var < hi`.
    Reduce {
        var: String,
        lo: AffineExpr,
        hi: AffineExpr,
        body: Box<Sem>,
    },
    /// Element `pos` of a whole-row function applied to the row
    /// `body(var)` for `lo <= var < hi`.
    Row {
        func: String,
        var: String,
        lo: AffineExpr,
        hi: AffineExpr,
        pos: AffineExpr,
        body: Box<Sem>,
    },
}

/// A local variable bound by a reduction or row node, with its range.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Local {
    pub var: String,
    pub lo: AffineExpr,
    pub hi: AffineExpr,
}

impl Sem {
    pub fn read(array: impl Into<String>, index: Vec<AffineExpr>) -> Sem {
        Sem::Read {
            array: array.into(),
            index,
        }
    }

    /// Every read with the locals in scope at that read.
    pub fn reads(&self) -> Vec<(String, Vec<AffineExpr>, Vec<Local>)> {
        let mut out = Vec::new();
        self.collect_reads(&mut Vec::new(), &mut out);
        out
    }

    fn collect_reads(&self, scope: &mut Vec<Local>, out: &mut Vec<(String, Vec<AffineExpr>, Vec<Local>)>) {
        match self {
            Sem::Read { array, index } => out.push((array.clone(), index.clone(), scope.clone())),
            Sem::Const(_) | Sem::Affine(_) => {}
            Sem::Op { args, .. } => args.iter().for_each(|a| a.collect_reads(scope, out)),
            Sem::Reduce { var, lo, hi, body } | Sem::Row { var, lo, hi, body, .. } => {
                scope.push(Local {
                    var: var.clone(),
                    lo: lo.clone(),
                    hi: hi.clone(),
                });
                body.collect_reads(scope, out);
                scope.pop();
            }
        }
    }

    pub fn has_reduction(&self) -> bool {
        match self {
            Sem::Reduce { .. } => true,
            Sem::Op { args, .. } => args.iter().any(Sem::has_reduction),
            Sem::Row { body, .. } => body.has_reduction(),
            _ => false,
        }
    }

    pub fn row_funcs(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |s| {
            if let Sem::Row { func, .. } = s {
                out.insert(func.clone());
            }
        });
        out
    }

    pub fn visit(&self, f: &mut dyn FnMut(&Sem)) {
        f(self);
        match self {
            Sem::Op { args, .. } => args.iter().for_each(|a| a.visit(f)),
            Sem::Reduce { body, .. } | Sem::Row { body, .. } => body.visit(f),
            _ => {}
        }
    }

    /// Substitutes a symbol in every affine position.
    pub fn substitute(&self, name: &str, with: &AffineExpr) -> Sem {
        let s = |a: &AffineExpr| a.substitute(name, with);
        match self {
            Sem::Read { array, index } => Sem::Read {
                array: array.clone(),
                index: index.iter().map(s).collect(),
            },
            Sem::Const(c) => Sem::Const(c.clone()),
            Sem::Affine(a) => Sem::Affine(s(a)),
            Sem::Op { op, args } => Sem::Op {
                op: *op,
                args: args.iter().map(|a| a.substitute(name, with)).collect(),
            },
            Sem::Reduce { var, lo, hi, body } => Sem::Reduce {
                var: var.clone(),
                lo: s(lo),
                hi: s(hi),
                body: Box::new(body.substitute(name, with)),
            },
            Sem::Row {
                func,
                var,
                lo,
                hi,
                pos,
                body,
            } => Sem::Row {
                func: func.clone(),
                var: var.clone(),
                lo: s(lo),
                hi: s(hi),
                pos: s(pos),
                body: Box::new(body.substitute(name, with)),
            },
        }
    }
}

impl fmt::Display for Sem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sem::Read { array, index } if index.is_empty() => f.write_str(array),
            Sem::Read { array, index } => {
                let ix: Vec<String> = index.iter().map(|e| e.to_string()).collect();
                write!(f, "{array}[{}]", ix.join(", "))
            }
            Sem::Const(c) => f.write_str(c),
            Sem::Affine(a) => write!(f, "({a})"),
            Sem::Op { op, args } => {
                let a: Vec<String> = args.iter().map(|x| x.to_string()).collect();
                write!(f, "{}({})", op.name(), a.join(", "))
            }
            Sem::Reduce { var, lo, hi, body } => write!(f, "sum({var} in {lo}..{hi}: {body})"),
            Sem::Row {
                func,
                var,
                lo,
                hi,
                pos,
                body,
            } => write!(f, "{func}({var} in {lo}..{hi}: {body})[{pos}]"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_carry_local_scope() {
        let k = AffineExpr::var("k0");
        let s = Sem::Reduce {
            var: "k0".into(),
            lo: AffineExpr::zero(),
            hi: AffineExpr::var("N"),
            body: Box::new(Sem::Op {
                op: SemOp::Mul,
                args: vec![
                    Sem::read("data", vec![k.clone(), AffineExpr::var("i0")]),
                    Sem::read("data", vec![k, AffineExpr::var("i1")]),
                ],
            }),
        };
        let reads = s.reads();
        assert_eq!(reads.len(), 2);
        assert_eq!(reads[0].2.len(), 1);
        assert_eq!(s.to_string(), "sum(k0 in 0..N: mult(data[k0, i0], data[k0, i1]))");
        assert!(s.has_reduction());
    }
}
