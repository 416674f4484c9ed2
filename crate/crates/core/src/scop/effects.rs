//! Conservative effects of structured statements that are treated as
//! black boxes, mirroring the token-based sets the parser computes.

use std::collections::BTreeSet;

use crate::frontend::affine::structural_param;
use crate::frontend::ast::{BlackBox, Expr, ExprKind, Stmt, StmtKind};
use crate::kb::{resolve_call, KnowledgeBase};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Effects {
    pub reads: BTreeSet<String>,
    pub writes: BTreeSet<String>,
    pub assigns: BTreeSet<String>,
    pub has_call: bool,
}

impl From<&BlackBox> for Effects {
    fn from(b: &BlackBox) -> Self {
        Effects {
            reads: b.reads.clone(),
            writes: b.writes.clone(),
            assigns: b.assigns.clone(),
            has_call: b.has_call,
        }
    }
}

const PURE: &[&str] = &["len", "range", "float", "int", "abs", "min", "max", "bool", "type", "isinstance"];

fn root(e: &Expr) -> Option<Vec<String>> {
    if let Some(p) = structural_param(e) {
        let r = p.split('.').next().unwrap_or("").to_string();
        return Some(vec![r, p]);
    }
    match &e.kind {
        ExprKind::Name(n) => Some(vec![n.clone()]),
        ExprKind::Attribute { base, attr } => {
            let mut r = root(base)?;
            if let ExprKind::Name(b) = &base.kind {
                r.push(format!("{b}.{attr}"));
            }
            Some(r)
        }
        ExprKind::Subscript { base, .. } => root(base),
        _ => None,
    }
}

fn expr_effects(e: &Expr, kb: &KnowledgeBase, fx: &mut Effects) {
    e.walk(&mut |x| {
        match &x.kind {
            ExprKind::Name(n) => {
                fx.reads.insert(n.clone());
            }
            ExprKind::Attribute { base, attr } => {
                if let ExprKind::Name(b) = &base.kind {
                    fx.reads.insert(format!("{b}.{attr}"));
                }
            }
            ExprKind::Call { func, args, kwargs } => {
                fx.has_call = true;
                let known = resolve_call(x).is_some_and(|s| kb.entries.iter().any(|k| k.def.function_id == s.function_id))
                    || func.dotted().is_some_and(|d| PURE.contains(&d.as_str()));
                if known {
                    return;
                }
                for a in args.iter().chain(kwargs.iter().map(|(_, v)| v)) {
                    fx.writes.extend(root(a).unwrap_or_default());
                }
                if let ExprKind::Attribute { base, .. } = &func.kind {
                    let module = base.dotted().is_some_and(|d| d == "np" || d == "numpy" || d.ends_with(".fft"));
                    if !module {
                        fx.writes.extend(root(base).unwrap_or_default());
                    }
                }
            }
            _ => {}
        }
    });
}

fn target(e: &Expr, kb: &KnowledgeBase, fx: &mut Effects) {
    expr_effects(e, kb, fx);
    let r = root(e).unwrap_or_default();
    fx.writes.extend(r.iter().cloned());
    let rebinds = matches!(e.kind, ExprKind::Name(_) | ExprKind::Attribute { .. });
    if rebinds {
        fx.assigns.extend(r);
    }
    if let ExprKind::Tuple(items) = &e.kind {
        for t in items {
            target(t, kb, fx);
        }
    }
}

pub fn stmt_effects(s: &Stmt, kb: &KnowledgeBase) -> Effects {
    let mut fx = Effects::default();
    collect(s, kb, &mut fx);
    fx
}

fn collect(s: &Stmt, kb: &KnowledgeBase, fx: &mut Effects) {
    match &s.kind {
        StmtKind::For {
            var,
            lower,
            upper,
            step,
            body,
        } => {
            for e in lower.iter().chain(step.iter()).chain(std::iter::once(upper)) {
                expr_effects(e, kb, fx);
            }
            fx.writes.insert(var.clone());
            fx.assigns.insert(var.clone());
            fx.reads.insert(var.clone());
            body.iter().for_each(|b| collect(b, kb, fx));
        }
        StmtKind::If { cond, body, orelse } => {
            expr_effects(cond, kb, fx);
            body.iter().chain(orelse).for_each(|b| collect(b, kb, fx));
        }
        StmtKind::Assign { target: t, value } => {
            expr_effects(value, kb, fx);
            target(t, kb, fx);
        }
        StmtKind::AugAssign { target: t, value, .. } => {
            expr_effects(value, kb, fx);
            target(t, kb, fx);
        }
        StmtKind::ExprCall(e) | StmtKind::Return(Some(e)) => expr_effects(e, kb, fx),
        StmtKind::BlackBox(b) => {
            let e = Effects::from(b);
            fx.reads.extend(e.reads);
            fx.writes.extend(e.writes);
            fx.assigns.extend(e.assigns);
            fx.has_call |= e.has_call;
        }
        StmtKind::Return(None) | StmtKind::Comment(_) => {}
    }
}

/// Every name read anywhere in `stmts`, including slice bounds.
pub fn names_read(stmts: &[Stmt], kb: &KnowledgeBase) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for s in stmts {
        out.extend(stmt_effects(s, kb).reads);
    }
    out
}

/// Names `stmts` may read before assigning them. A loop binds its
/// variable only for its own body, since it may run zero times.
pub fn live_reads(stmts: &[Stmt], kb: &KnowledgeBase) -> BTreeSet<String> {
    let mut live = BTreeSet::new();
    let mut killed: BTreeSet<String> = BTreeSet::new();
    for s in stmts {
        let add = |names: BTreeSet<String>, live: &mut BTreeSet<String>| live.extend(names.into_iter().filter(|n| !killed.contains(n)));
        match &s.kind {
            StmtKind::For {
                var,
                lower,
                upper,
                step,
                body,
            } => {
                let mut fx = Effects::default();
                for e in lower.iter().chain(step.iter()).chain(std::iter::once(upper)) {
                    expr_effects(e, kb, &mut fx);
                }
                add(fx.reads, &mut live);
                let mut inner = live_reads(body, kb);
                inner.remove(var);
                add(inner, &mut live);
            }
            StmtKind::If { cond, body, orelse } => {
                let mut fx = Effects::default();
                expr_effects(cond, kb, &mut fx);
                add(fx.reads, &mut live);
                add(live_reads(body, kb), &mut live);
                add(live_reads(orelse, kb), &mut live);
            }
            StmtKind::Assign { target: t, value } if matches!(t.kind, ExprKind::Name(_)) => {
                let mut fx = Effects::default();
                expr_effects(value, kb, &mut fx);
                add(fx.reads, &mut live);
                if let ExprKind::Name(n) = &t.kind {
                    killed.insert(n.clone());
                }
            }
            _ => add(stmt_effects(s, kb).reads, &mut live),
        }
    }
    live
}
