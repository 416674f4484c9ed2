//! Affine classification of expressions and statements.
//!
//! Parameters are symbolic integers that stay constant over a region:
//! integer kernel parameters, receiver attributes (`self.M`) and array
//! extents (`x.shape[k]`). They are named by their source spelling so
//! they can be turned back into expressions.

use std::collections::BTreeSet;

use super::ast::{BinOp, BoolOp, CmpOp, Expr, ExprKind, Index, Stmt, StmtKind};
use super::parse_expr;
use crate::polyset::{AffineExpr, Constraint};

#[derive(Clone, Debug, Default)]
pub struct AffineEnv {
    pub iters: Vec<String>,
    /// Plain names that are integer parameters.
    pub params: BTreeSet<String>,
}

impl AffineEnv {
    pub fn new(params: impl IntoIterator<Item = String>) -> Self {
        AffineEnv {
            iters: Vec::new(),
            params: params.into_iter().collect(),
        }
    }

    pub fn with_iter(&self, it: &str) -> AffineEnv {
        let mut e = self.clone();
        e.iters.push(it.to_string());
        e
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    Affine,
    BlackBox,
}

/// Structural parameter spelling: `self.M` or `x.shape[k]`.
pub fn structural_param(e: &Expr) -> Option<String> {
    match &e.kind {
        ExprKind::Attribute { base, attr } if matches!(&base.kind, ExprKind::Name(n) if n == "self") => {
            Some(format!("self.{attr}"))
        }
        ExprKind::Subscript { base, indices } if indices.len() == 1 => {
            let ExprKind::Attribute { base: arr, attr } = &base.kind else { return None };
            let (Index::Expr(Expr { kind: ExprKind::Int(k), .. }), "shape") = (&indices[0], attr.as_str()) else {
                return None;
            };
            Some(format!("{}.shape[{k}]", arr.dotted()?))
        }
        _ => None,
    }
}

pub fn to_affine(e: &Expr, env: &AffineEnv) -> Option<AffineExpr> {
    if let Some(p) = structural_param(e) {
        return Some(AffineExpr::var(p));
    }
    match &e.kind {
        ExprKind::Int(v) => Some(AffineExpr::constant(*v)),
        ExprKind::Name(n) if env.iters.contains(n) || env.params.contains(n) => Some(AffineExpr::var(n.clone())),
        ExprKind::Neg(inner) => Some(to_affine(inner, env)?.scale(-1)),
        ExprKind::BinOp { op, lhs, rhs } => {
            let l = to_affine(lhs, env)?;
            let r = to_affine(rhs, env)?;
            match op {
                BinOp::Add => Some(l.add(&r)),
                BinOp::Sub => Some(l.sub(&r)),
                BinOp::Mul => match (l.as_constant(), r.as_constant()) {
                    (Some(c), _) => Some(r.scale(c)),
                    (_, Some(c)) => Some(l.scale(c)),
                    _ => None,
                },
                BinOp::Div | BinOp::Pow => None,
            }
        }
        _ => None,
    }
}

/// Affine condition as a conjunction of constraints. Disjunctions,
/// negations and `!=` are not affine guards.
pub fn to_constraints(e: &Expr, env: &AffineEnv) -> Option<Vec<Constraint>> {
    match &e.kind {
        ExprKind::BoolOp { op: BoolOp::And, values } => {
            let mut out = Vec::new();
            for v in values {
                out.extend(to_constraints(v, env)?);
            }
            Some(out)
        }
        ExprKind::Compare { op, lhs, rhs } => {
            let l = to_affine(lhs, env)?;
            let r = to_affine(rhs, env)?;
            match op {
                CmpOp::Eq => Some(vec![Constraint::eq(&l, &r)]),
                CmpOp::Lt => Some(vec![Constraint::lt(&l, &r)]),
                CmpOp::Le => Some(vec![Constraint::le(&l, &r)]),
                CmpOp::Gt => Some(vec![Constraint::lt(&r, &l)]),
                CmpOp::Ge => Some(vec![Constraint::le(&r, &l)]),
                CmpOp::Ne => None,
            }
        }
        _ => None,
    }
}

/// Every subscript index inside `e` is affine (full slices allowed).
pub fn subscripts_affine(e: &Expr, env: &AffineEnv) -> bool {
    let mut ok = true;
    e.walk(&mut |x| {
        if structural_param(x).is_some() {
            return;
        }
        if let ExprKind::Subscript { indices, .. } = &x.kind {
            for ix in indices {
                ok &= match ix {
                    Index::Expr(i) => to_affine(i, env).is_some(),
                    Index::Slice { lower, upper } => {
                        lower.as_ref().is_none_or(|l| to_affine(l, env).is_some())
                            && upper.as_ref().is_none_or(|u| to_affine(u, env).is_some())
                    }
                };
            }
        }
    });
    ok
}

pub fn classify_affine(stmt: &Stmt, env: &AffineEnv) -> Classification {
    let ok = match &stmt.kind {
        StmtKind::For {
            var,
            lower,
            upper,
            step,
            body,
        } => {
            let bounds = lower.as_ref().is_none_or(|l| to_affine(l, env).is_some()) && to_affine(upper, env).is_some();
            let unit = step.as_ref().is_none_or(|s| s.kind == ExprKind::Int(1));
            let inner = env.with_iter(var);
            bounds && unit && body.iter().all(|s| classify_affine(s, &inner) == Classification::Affine)
        }
        StmtKind::If { cond, body, orelse } => {
            to_constraints(cond, env).is_some()
                && body.iter().chain(orelse).all(|s| classify_affine(s, env) == Classification::Affine)
        }
        StmtKind::Assign { target, value } | StmtKind::AugAssign { target, value, .. } => {
            subscripts_affine(target, env) && subscripts_affine(value, env)
        }
        StmtKind::ExprCall(e) => subscripts_affine(e, env),
        StmtKind::Return(e) => e.as_ref().is_none_or(|e| subscripts_affine(e, env)),
        StmtKind::Comment(_) => true,
        StmtKind::BlackBox(_) => false,
    };
    if ok {
        Classification::Affine
    } else {
        Classification::BlackBox
    }
}

/// Turns an affine form back into source, in the same term order as its
/// display (`self.M - i0 - 1`).
pub fn affine_to_expr(a: &AffineExpr) -> Expr {
    let sym = |s: &str| parse_expr(s).unwrap_or_else(|| Expr::name(s));
    let term = |s: &str, mag: i64| {
        if mag == 1 {
            sym(s)
        } else {
            Expr::bin(BinOp::Mul, Expr::int(mag), sym(s))
        }
    };
    let mut acc: Option<Expr> = None;
    let pos = a.terms().filter(|(_, c)| *c > 0);
    let neg = a.terms().filter(|(_, c)| *c < 0);
    for (s, c) in pos.chain(neg) {
        let t = term(s, c.abs());
        acc = Some(match acc {
            None if c < 0 && c != -1 => Expr::bin(BinOp::Mul, Expr::int(c), sym(s)),
            None if c < 0 => Expr::neg(t),
            None => t,
            Some(prev) if c < 0 => Expr::bin(BinOp::Sub, prev, t),
            Some(prev) => Expr::bin(BinOp::Add, prev, t),
        });
    }
    let k = a.constant_term();
    match acc {
        None => Expr::int(k),
        Some(e) if k > 0 => Expr::bin(BinOp::Add, e, Expr::int(k)),
        Some(e) if k < 0 => Expr::bin(BinOp::Sub, e, Expr::int(-k)),
        Some(e) => e,
    }
}
