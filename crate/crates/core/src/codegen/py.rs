//! Rendering of affine forms and rewriting of statements into the names
//! visible in generated code.

use std::collections::BTreeMap;

use crate::frontend::affine::affine_to_expr;
use crate::frontend::ast::{Expr, ExprKind, Index, Stmt, StmtKind};
use crate::frontend::emit_expr;
use crate::polyset::{AffineExpr, Constraint, Relation};

/// How symbols of the SCoP are spelled at the emission point.
#[derive(Clone, Debug, Default)]
pub struct Spelling {
    /// Canonical iterator `i<d>` to its source name.
    pub iters: BTreeMap<String, String>,
    /// List parameters to their array copies (`x` to `__a_x`).
    pub arrays: BTreeMap<String, String>,
    /// Inside task functions `self.X` becomes `__p_self_X`.
    pub flatten_self: bool,
    /// Array module alias (`np` or `xp`).
    pub module: String,
}

pub fn self_param(attr: &str) -> String {
    format!("__p_self_{attr}")
}

impl Spelling {
    pub fn new() -> Self {
        Spelling {
            module: "np".into(),
            ..Default::default()
        }
    }

    pub fn array(&self, a: &str) -> String {
        if let Some(x) = self.arrays.get(a) {
            return x.clone();
        }
        match a.strip_prefix("self.") {
            Some(attr) if self.flatten_self => self_param(attr),
            _ => a.to_string(),
        }
    }

    pub fn symbol(&self, s: &str) -> String {
        if let Some(n) = self.iters.get(s) {
            return n.clone();
        }
        if let Some((root, rest)) = s.split_once(".shape[") {
            return format!("{}.shape[{rest}", self.array(root));
        }
        match s.strip_prefix("self.") {
            Some(attr) if self.flatten_self => self_param(attr),
            _ => s.to_string(),
        }
    }

    pub fn affine(&self, e: &AffineExpr) -> String {
        emit_expr(&affine_to_expr(&e.rename(&|s| self.symbol(s))))
    }

    /// `lhs >= rhs` or `lhs == rhs` with positive coefficients on each side.
    pub fn condition(&self, c: &Constraint) -> String {
        let e = &c.expr;
        let mut lhs = AffineExpr::zero();
        let mut rhs = AffineExpr::zero();
        for (s, k) in e.terms() {
            if k > 0 {
                lhs = lhs.add(&AffineExpr::term(s, k));
            } else {
                rhs = rhs.add(&AffineExpr::term(s, -k));
            }
        }
        let k = e.constant_term();
        if k > 0 {
            lhs = lhs.add_const(k);
        } else {
            rhs = rhs.add_const(-k);
        }
        let op = if c.rel == Relation::Zero { "==" } else { ">=" };
        format!("{} {op} {}", self.affine(&lhs), self.affine(&rhs))
    }

    fn needs_rewrite(&self) -> bool {
        !self.arrays.is_empty() || self.flatten_self || self.module != "np"
    }

    pub fn expr(&self, e: &Expr) -> Expr {
        rewrite(e, &|x| match &x.kind {
            ExprKind::Name(n) if n == "np" || n == "numpy" => Some(Expr::name(self.module.clone())),
            ExprKind::Name(n) => self.arrays.get(n).map(|a| Expr::name(a.clone())),
            ExprKind::Attribute { base, attr } if self.flatten_self && matches!(&base.kind, ExprKind::Name(b) if b == "self") => {
                Some(Expr::name(self_param(attr)))
            }
            _ => None,
        })
    }

    /// The statement with names respelled; `None` for black boxes that
    /// would need it, since their text cannot be rewritten.
    pub fn stmt(&self, s: &Stmt) -> Option<Stmt> {
        if !self.needs_rewrite() {
            return Some(s.clone());
        }
        let mut out = s.clone();
        out.kind = match &s.kind {
            StmtKind::Assign { target, value } => StmtKind::Assign {
                target: self.expr(target),
                value: self.expr(value),
            },
            StmtKind::AugAssign { target, op, value } => StmtKind::AugAssign {
                target: self.expr(target),
                op: *op,
                value: self.expr(value),
            },
            StmtKind::ExprCall(e) => StmtKind::ExprCall(self.expr(e)),
            StmtKind::Comment(_) => s.kind.clone(),
            _ => return None,
        };
        out.strip_text();
        Some(out)
    }
}

/// Bottom-up rewrite where `f` may replace any node (children first are
/// not visited for replaced nodes).
pub fn rewrite(e: &Expr, f: &dyn Fn(&Expr) -> Option<Expr>) -> Expr {
    if let Some(r) = f(e) {
        return r;
    }
    let kind = match &e.kind {
        ExprKind::BinOp { op, lhs, rhs } => ExprKind::BinOp {
            op: *op,
            lhs: Box::new(rewrite(lhs, f)),
            rhs: Box::new(rewrite(rhs, f)),
        },
        ExprKind::Compare { op, lhs, rhs } => ExprKind::Compare {
            op: *op,
            lhs: Box::new(rewrite(lhs, f)),
            rhs: Box::new(rewrite(rhs, f)),
        },
        ExprKind::Neg(x) => ExprKind::Neg(Box::new(rewrite(x, f))),
        ExprKind::Not(x) => ExprKind::Not(Box::new(rewrite(x, f))),
        ExprKind::BoolOp { op, values } => ExprKind::BoolOp {
            op: *op,
            values: values.iter().map(|v| rewrite(v, f)).collect(),
        },
        ExprKind::Tuple(vs) => ExprKind::Tuple(vs.iter().map(|v| rewrite(v, f)).collect()),
        ExprKind::Subscript { base, indices } => ExprKind::Subscript {
            base: Box::new(rewrite(base, f)),
            indices: indices
                .iter()
                .map(|ix| match ix {
                    Index::Expr(x) => Index::Expr(rewrite(x, f)),
                    Index::Slice { lower, upper } => Index::Slice {
                        lower: lower.as_ref().map(|x| rewrite(x, f)),
                        upper: upper.as_ref().map(|x| rewrite(x, f)),
                    },
                })
                .collect(),
        },
        ExprKind::Attribute { base, attr } => ExprKind::Attribute {
            base: Box::new(rewrite(base, f)),
            attr: attr.clone(),
        },
        ExprKind::Call { func, args, kwargs } => ExprKind::Call {
            func: Box::new(rewrite(func, f)),
            args: args.iter().map(|a| rewrite(a, f)).collect(),
            kwargs: kwargs.iter().map(|(k, v)| (k.clone(), rewrite(v, f))).collect(),
        },
        ExprKind::Int(_) | ExprKind::Float(_) | ExprKind::Name(_) => e.kind.clone(),
    };
    Expr { kind, ty: e.ty }
}
