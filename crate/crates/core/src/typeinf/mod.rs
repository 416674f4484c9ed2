//! Type inference seeded by parameter annotations.
//!
//! Flow-insensitive over a function body: every local gets one type, and
//! a local bound to two different types becomes `Unknown`. Container
//! parameters get their rank from subscript usage (the deepest integer
//! subscript seen), since annotations carry no rank.

mod types;

use std::collections::BTreeMap;
use std::fmt::Write;

pub use types::{Elem, SemType};

use crate::frontend::affine::structural_param;
use crate::frontend::ast::{
    AnnotationKind, BinOp, Expr, ExprKind, Index, Item, KernelFunction, Program, Stmt, StmtKind, TypeAnnotation,
};
use crate::kb::{resolve_call, KnowledgeBase};

/// Inferred types of one function, parameters first.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionTypes {
    pub name: String,
    pub params: Vec<(String, SemType)>,
    pub locals: BTreeMap<String, SemType>,
}

impl FunctionTypes {
    pub fn get(&self, name: &str) -> SemType {
        self.params
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| *t)
            .or_else(|| self.locals.get(name).copied())
            .unwrap_or(SemType::Unknown)
    }
}

/// Type seeded by an annotation. Container elements are assumed to be
/// float; rank comes from usage.
pub fn annotation_type(a: &TypeAnnotation) -> SemType {
    match a.kind {
        AnnotationKind::Int => SemType::Int,
        AnnotationKind::Float => SemType::Float,
        AnnotationKind::Bool => SemType::Bool,
        AnnotationKind::Ndarray => SemType::Array {
            elem: Elem::Float,
            rank: None,
        },
        AnnotationKind::List => SemType::List {
            elem: Elem::Float,
            rank: None,
        },
        AnnotationKind::Other => SemType::Unknown,
    }
}

pub fn rank_of(e: &Expr) -> Option<u32> {
    e.ty.rank()
}

/// Infers every function in the program, including class methods
/// (named `Class.method`).
pub fn infer(prog: &mut Program, kb: &KnowledgeBase) -> Vec<FunctionTypes> {
    let mut out = Vec::new();
    infer_items(&mut prog.items, "", kb, &mut out);
    out
}

fn infer_items(items: &mut [Item], prefix: &str, kb: &KnowledgeBase, out: &mut Vec<FunctionTypes>) {
    for item in items {
        match item {
            Item::Function(f) => {
                let mut t = infer_function(f, kb);
                t.name = format!("{prefix}{}", t.name);
                out.push(t);
            }
            Item::Class(c) => {
                let name = c
                    .header
                    .trim_start_matches("class")
                    .trim()
                    .split(['(', ':'])
                    .next()
                    .unwrap_or("")
                    .to_string();
                infer_items(&mut c.body, &format!("{prefix}{name}."), kb, out);
            }
            Item::Opaque(_) => {}
        }
    }
}

struct Env<'a> {
    kb: &'a KnowledgeBase,
    params: Vec<(String, SemType)>,
    locals: BTreeMap<String, SemType>,
}

impl Env<'_> {
    fn lookup(&self, n: &str) -> SemType {
        if let Some((_, t)) = self.params.iter().find(|(p, _)| p == n) {
            return *t;
        }
        self.locals.get(n).copied().unwrap_or(SemType::Unknown)
    }

    fn bind(&mut self, n: &str, t: SemType) {
        if let Some(slot) = self.params.iter_mut().find(|(p, _)| p == n) {
            slot.1 = slot.1.join(t);
            return;
        }
        let joined = match self.locals.get(n) {
            Some(old) => old.join(t),
            None => t,
        };
        self.locals.insert(n.to_string(), joined);
    }
}

pub fn infer_function(f: &mut KernelFunction, kb: &KnowledgeBase) -> FunctionTypes {
    let seed: Vec<(String, SemType)> = f
        .kernel_params()
        .map(|p| (p.name.clone(), p.annotation.as_ref().map(annotation_type).unwrap_or_default()))
        .collect();
    let mut ranks: BTreeMap<String, u32> = BTreeMap::new();
    let mut last = None;
    for _ in 0..8 {
        let params = seed
            .iter()
            .map(|(n, t)| (n.clone(), with_rank(*t, ranks.get(n).copied())))
            .collect();
        let mut env = Env {
            kb,
            params,
            locals: BTreeMap::new(),
        };
        // Twice, so uses inside loops see bindings made later in the body.
        for _ in 0..2 {
            stmts(&mut f.body, &mut env);
        }
        ranks = usage_ranks(&f.body, &seed);
        let state = (env.params.clone(), env.locals.clone());
        let stable = last.as_ref() == Some(&state)
            && env.params.iter().all(|(n, t)| !t.is_container() || t.rank() == ranks.get(n).copied());
        last = Some(state);
        if stable {
            break;
        }
    }
    let (params, locals) = last.unwrap_or_default();
    FunctionTypes {
        name: f.name.clone(),
        params,
        locals,
    }
}

fn with_rank(t: SemType, rank: Option<u32>) -> SemType {
    match t {
        SemType::Array { elem, .. } => SemType::Array { elem, rank },
        SemType::List { elem, .. } => SemType::List { elem, rank },
        other => other,
    }
}

/// Deepest subscript chain applied to each container parameter whose
/// indices are all integers or slices.
fn usage_ranks(body: &[Stmt], seed: &[(String, SemType)]) -> BTreeMap<String, u32> {
    let mut out: BTreeMap<String, u32> = BTreeMap::new();
    let mut visit = |e: &Expr| {
        let mut depth = 0u32;
        let mut cur = e;
        loop {
            match &cur.kind {
                ExprKind::Subscript { base, indices } => {
                    let ok = indices.iter().all(|ix| match ix {
                        Index::Slice { .. } => true,
                        Index::Expr(x) => x.ty == SemType::Int || x.ty == SemType::Bool,
                    });
                    if !ok {
                        return;
                    }
                    depth += indices.len() as u32;
                    cur = base;
                }
                ExprKind::Name(n) => {
                    if seed.iter().any(|(p, t)| p == n && t.is_container()) && depth > 0 {
                        let r = out.entry(n.clone()).or_insert(0);
                        *r = (*r).max(depth);
                    }
                    return;
                }
                _ => return,
            }
        }
    };
    for_each_expr(body, &mut visit);
    out
}

fn for_each_expr(body: &[Stmt], f: &mut dyn FnMut(&Expr)) {
    for s in body {
        match &s.kind {
            StmtKind::For {
                lower,
                upper,
                step,
                body,
                ..
            } => {
                for e in lower.iter().chain(step.iter()).chain(std::iter::once(upper)) {
                    e.walk(f);
                }
                for_each_expr(body, f);
            }
            StmtKind::If { cond, body, orelse } => {
                cond.walk(f);
                for_each_expr(body, f);
                for_each_expr(orelse, f);
            }
            StmtKind::Assign { target, value } | StmtKind::AugAssign { target, value, .. } => {
                target.walk(f);
                value.walk(f);
            }
            StmtKind::ExprCall(e) | StmtKind::Return(Some(e)) => e.walk(f),
            StmtKind::Return(None) | StmtKind::BlackBox(_) | StmtKind::Comment(_) => {}
        }
    }
}

fn stmts(body: &mut [Stmt], env: &mut Env) {
    for s in body {
        match &mut s.kind {
            StmtKind::For {
                var,
                lower,
                upper,
                step,
                body,
            } => {
                let mut int = true;
                for e in lower.iter_mut().chain(step.iter_mut()).chain(std::iter::once(upper)) {
                    int &= expr(e, env) == SemType::Int;
                }
                env.bind(var, if int { SemType::Int } else { SemType::Unknown });
                stmts(body, env);
            }
            StmtKind::If { cond, body, orelse } => {
                expr(cond, env);
                stmts(body, env);
                stmts(orelse, env);
            }
            StmtKind::Assign { target, value } => {
                let t = expr(value, env);
                match &target.kind {
                    ExprKind::Name(n) => {
                        let n = n.clone();
                        env.bind(&n, t);
                        target.ty = env.lookup(&n);
                    }
                    _ => {
                        expr(target, env);
                    }
                }
            }
            StmtKind::AugAssign { target, op, value } => {
                let v = expr(value, env);
                let cur = expr(target, env);
                if let ExprKind::Name(n) = &target.kind {
                    let n = n.clone();
                    let r = binop(*op, cur, v, value, env);
                    env.bind(&n, r);
                }
            }
            StmtKind::ExprCall(e) | StmtKind::Return(Some(e)) => {
                expr(e, env);
            }
            StmtKind::BlackBox(bb) => {
                for n in &bb.assigns {
                    if !n.contains('.') {
                        env.bind(n, SemType::Unknown);
                    }
                }
            }
            StmtKind::Return(None) | StmtKind::Comment(_) => {}
        }
    }
}

fn scalar_binop(op: BinOp, l: SemType, r: SemType, rhs: &Expr) -> SemType {
    if !l.is_scalar() || !r.is_scalar() {
        return SemType::Unknown;
    }
    match op {
        BinOp::Div => SemType::Float,
        BinOp::Pow => {
            let nonneg_int = matches!(rhs.kind, ExprKind::Int(_));
            match (r, nonneg_int) {
                (SemType::Int | SemType::Bool, true) => SemType::scalar(l.elem().promote(Elem::Int)),
                (SemType::Int | SemType::Bool, false) => SemType::Float,
                _ => SemType::scalar(l.elem().promote(r.elem())),
            }
        }
        _ => SemType::scalar(l.elem().promote(r.elem())),
    }
}

fn binop(op: BinOp, l: SemType, r: SemType, rhs: &Expr, env: &Env) -> SemType {
    if l.is_container() || r.is_container() {
        return env
            .kb
            .lookup(op.kb_name(), &[l, r], &[])
            .map(|e| e.result_type(&[l, r]))
            .unwrap_or(SemType::Unknown);
    }
    scalar_binop(op, l, r, rhs)
}

/// Types `e` and all its subexpressions, storing the results in place.
fn expr(e: &mut Expr, env: &Env) -> SemType {
    let t = expr_inner(e, env);
    e.ty = t;
    t
}

fn expr_inner(e: &mut Expr, env: &Env) -> SemType {
    if structural_param(e).is_some() {
        // Still type the children for completeness.
        if let ExprKind::Subscript { base, .. } = &mut e.kind {
            expr(base, env);
        }
        return SemType::Int;
    }
    match &mut e.kind {
        ExprKind::Int(_) => SemType::Int,
        ExprKind::Float(_) => SemType::Float,
        ExprKind::Name(n) => env.lookup(n),
        ExprKind::Neg(x) => match expr(x, env) {
            SemType::Bool => SemType::Int,
            t => t,
        },
        ExprKind::Not(x) => {
            expr(x, env);
            SemType::Bool
        }
        ExprKind::Compare { lhs, rhs, .. } => {
            let l = expr(lhs, env);
            let r = expr(rhs, env);
            if l.is_scalar() && r.is_scalar() {
                SemType::Bool
            } else {
                SemType::Unknown
            }
        }
        ExprKind::BoolOp { values, .. } => {
            let mut all = true;
            for v in values.iter_mut() {
                all &= expr(v, env).is_scalar();
            }
            if all {
                SemType::Bool
            } else {
                SemType::Unknown
            }
        }
        ExprKind::BinOp { op, lhs, rhs } => {
            let l = expr(lhs, env);
            let r = expr(rhs, env);
            binop(*op, l, r, rhs, env)
        }
        ExprKind::Tuple(values) => {
            for v in values.iter_mut() {
                expr(v, env);
            }
            SemType::Unknown
        }
        ExprKind::Subscript { base, indices } => {
            let b = expr(base, env);
            let mut dropped = 0;
            let mut ok = true;
            for ix in indices.iter_mut() {
                match ix {
                    Index::Expr(x) => {
                        dropped += 1;
                        ok &= matches!(expr(x, env), SemType::Int | SemType::Bool);
                    }
                    Index::Slice { lower, upper } => {
                        for x in lower.iter_mut().chain(upper.iter_mut()) {
                            ok &= expr(x, env) == SemType::Int;
                        }
                    }
                }
            }
            match (b, b.rank()) {
                (SemType::Array { elem, .. } | SemType::List { elem, .. }, Some(r))
                    if ok && indices.len() as u32 <= r =>
                {
                    let rest = r - dropped;
                    match (rest, b) {
                        (0, _) => SemType::scalar(elem),
                        (_, SemType::List { .. }) => SemType::List { elem, rank: Some(rest) },
                        _ => SemType::array(elem, rest),
                    }
                }
                _ => SemType::Unknown,
            }
        }
        ExprKind::Attribute { base, attr } => {
            let b = expr(base, env);
            match attr.as_str() {
                "ndim" if b.is_container() => SemType::Int,
                "T" => env
                    .kb
                    .lookup("transpose", &[b], &[])
                    .map(|k| k.result_type(&[b]))
                    .unwrap_or(SemType::Unknown),
                _ => SemType::Unknown,
            }
        }
        ExprKind::Call { .. } => call(e, env),
    }
}

fn call(e: &mut Expr, env: &Env) -> SemType {
    let ExprKind::Call { func, args, kwargs } = &mut e.kind else {
        return SemType::Unknown;
    };
    let mut arg_types: Vec<SemType> = args.iter_mut().map(|a| expr(a, env)).collect();
    for (_, v) in kwargs.iter_mut() {
        expr(v, env);
    }
    if let ExprKind::Attribute { base, .. } = &mut func.kind {
        let receiver = expr(base, env);
        if base.dotted().is_none_or(|d| !["np", "numpy", "np.fft", "numpy.fft"].contains(&d.as_str())) {
            arg_types.insert(0, receiver);
        }
    }
    let builtin = func.dotted();
    match builtin.as_deref() {
        Some("len") => return SemType::Int,
        Some("int") => return SemType::Int,
        Some("float") => return SemType::Float,
        Some("abs") if arg_types.len() == 1 && arg_types[0].is_scalar() => return arg_types[0],
        Some("min" | "max") if !arg_types.is_empty() && arg_types.iter().all(|t| t.is_scalar()) => {
            let elem = arg_types.iter().map(|t| t.elem()).reduce(Elem::promote).unwrap_or(Elem::Unknown);
            return SemType::scalar(elem);
        }
        _ => {}
    }
    let Some(site) = resolve_call(e) else {
        return SemType::Unknown;
    };
    env.kb
        .lookup_site(&site, &arg_types)
        .map(|k| k.result_type(&arg_types))
        .unwrap_or(SemType::Unknown)
}

/// `--dump-types` table: one block per function, parameters in order and
/// then locals alphabetically.
pub fn dump_types(tables: &[FunctionTypes]) -> String {
    let mut out = String::new();
    for t in tables {
        let _ = writeln!(out, "{}:", t.name);
        for (n, ty) in t.params.iter().map(|(n, t)| (n, t)).chain(t.locals.iter()) {
            let _ = writeln!(out, "  {n} : {ty}");
        }
    }
    out
}

#[cfg(test)]
mod tests;
