use std::collections::{BTreeMap, BTreeSet};

use super::effects::{live_reads, stmt_effects, Effects};
use super::lower::Lowerer;
use super::{Access, Scop, ScopKind, ScopStatement};
use crate::frontend::affine::{to_affine, to_constraints, AffineEnv};
use crate::frontend::ast::{KernelFunction, Stmt, StmtKind};
use crate::kb::KnowledgeBase;
use crate::polyset::{AffineExpr, AffineSet, Constraint, Relation};
use crate::typeinf::{FunctionTypes, SemType};

const NOT_DATA: &[&str] = &[
    "np", "numpy", "math", "range", "len", "min", "max", "abs", "print", "float", "int", "bool", "sum", "zip", "enumerate",
];

/// A maximal run of top-level statements `[start, end)` analyzed together.
#[derive(Clone, Debug)]
pub struct Region {
    pub start: usize,
    pub end: usize,
    pub scop: Scop,
}

#[derive(Clone)]
struct Ctx {
    env: AffineEnv,
    rename: BTreeMap<String, String>,
    names: Vec<String>,
    loops: Vec<usize>,
    cons: Vec<Constraint>,
    bounds: Vec<(AffineExpr, AffineExpr)>,
    beta: Vec<usize>,
    /// Names read after the statement being lowered.
    after: BTreeSet<String>,
}

struct Builder<'a> {
    kb: &'a KnowledgeBase,
    next_loop: usize,
    out: Vec<ScopStatement>,
}

const CONTROL: &[&str] = &["break", "continue", "return", "yield", "raise", "global", "nonlocal"];

fn is_control(s: &Stmt) -> bool {
    match &s.kind {
        StmtKind::Return(_) => true,
        StmtKind::BlackBox(_) => CONTROL.contains(&first_word(s)),
        StmtKind::For { body, .. } => body.iter().any(is_control),
        StmtKind::If { body, orelse, .. } => body.iter().chain(orelse).any(is_control),
        _ => false,
    }
}

/// Leaves the function: return, raise or yield anywhere inside.
pub fn exits(s: &Stmt) -> bool {
    match &s.kind {
        StmtKind::Return(_) => true,
        StmtKind::BlackBox(_) => is_control(s) && !matches!(first_word(s), "break" | "continue"),
        StmtKind::For { body, .. } => body.iter().any(exits),
        StmtKind::If { body, orelse, .. } => body.iter().chain(orelse).any(exits),
        _ => false,
    }
}

fn first_word(s: &Stmt) -> &str {
    let StmtKind::BlackBox(b) = &s.kind else { return "" };
    let first = b.text.lines.first().map(|l| l.trim_start()).unwrap_or("");
    first.split(|c: char| !c.is_alphanumeric() && c != '_').next().unwrap_or("")
}

fn loop_vars(s: &Stmt, out: &mut BTreeSet<String>) {
    match &s.kind {
        StmtKind::For { var, body, .. } => {
            out.insert(var.clone());
            body.iter().for_each(|b| loop_vars(b, out));
        }
        StmtKind::If { body, orelse, .. } => body.iter().chain(orelse).for_each(|b| loop_vars(b, out)),
        _ => {}
    }
}

impl Builder<'_> {
    fn block(&mut self, stmts: &[Stmt], ctx: &Ctx, pos: &mut usize) {
        for (k, s) in stmts.iter().enumerate() {
            let mut c = ctx.clone();
            c.after.extend(live_reads(&stmts[k + 1..], self.kb));
            self.stmt(s, &c, pos);
        }
    }

    fn stmt(&mut self, s: &Stmt, ctx: &Ctx, pos: &mut usize) {
        match &s.kind {
            StmtKind::Comment(_) => {}
            StmtKind::For {
                var,
                lower,
                upper,
                step,
                body,
            } => {
                let ok = self.loop_ok(s, ctx);
                let lo = match lower {
                    Some(l) => to_affine(l, &ctx.env),
                    None => Some(AffineExpr::zero()),
                };
                let hi = to_affine(upper, &ctx.env);
                let int = lower.iter().chain(std::iter::once(upper)).all(|e| e.ty == SemType::Int);
                let (Some(lo), Some(hi), true, true, None) = (lo, hi, ok, int, step) else {
                    return self.black_box(s, ctx, pos);
                };
                let canon = format!("i{}", ctx.names.len());
                let ren = |a: &AffineExpr| a.rename(&|x| ctx.rename.get(x).cloned().unwrap_or_else(|| x.to_string()));
                let it = AffineExpr::var(canon.as_str());
                let mut inner = ctx.clone();
                inner.cons.push(Constraint::le(&ren(&lo), &it));
                inner.cons.push(Constraint::lt(&it, &ren(&hi)));
                inner.bounds.push((ren(&lo), ren(&hi)));
                inner.env = ctx.env.with_iter(var);
                inner.rename.insert(var.clone(), canon);
                inner.names.push(var.clone());
                inner.loops.push(self.next_loop);
                self.next_loop += 1;
                inner.beta.push(*pos);
                *pos += 1;
                let mut p = 0;
                self.block(body, &inner, &mut p);
            }
            StmtKind::If { cond, body, orelse } => {
                let ren = |c: Constraint| Constraint {
                    expr: c.expr.rename(&|x| ctx.rename.get(x).cloned().unwrap_or_else(|| x.to_string())),
                    rel: c.rel,
                };
                let Some(cs) = to_constraints(cond, &ctx.env) else {
                    return self.black_box(s, ctx, pos);
                };
                let cs: Vec<Constraint> = cs.into_iter().map(ren).collect();
                let negated = match cs.as_slice() {
                    [c] if c.rel == Relation::NonNeg => Some(c.negate()),
                    _ => None,
                };
                if !orelse.is_empty() && negated.is_none() {
                    return self.black_box(s, ctx, pos);
                }
                let mut then = ctx.clone();
                then.cons.extend(cs);
                then.after.extend(live_reads(orelse, self.kb));
                self.block(body, &then, pos);
                if let Some(neg) = negated.filter(|_| !orelse.is_empty()) {
                    let mut other = ctx.clone();
                    other.cons.extend(neg);
                    self.block(orelse, &other, pos);
                }
            }
            StmtKind::Assign { target, value } => self.leaf(s, target, value, None, ctx, pos),
            StmtKind::AugAssign { target, op, value } => self.leaf(s, target, value, Some(*op), ctx, pos),
            StmtKind::ExprCall(_) | StmtKind::Return(_) | StmtKind::BlackBox(_) => self.black_box(s, ctx, pos),
        }
    }

    /// A loop is analyzable when it cannot exit early, does not rebind its
    /// own bounds and its iterators are dead after it.
    fn loop_ok(&self, s: &Stmt, ctx: &Ctx) -> bool {
        if is_control(s) {
            return false;
        }
        let StmtKind::For { body, .. } = &s.kind else { return false };
        let mut vars = BTreeSet::new();
        loop_vars(s, &mut vars);
        if vars.iter().any(|v| ctx.after.contains(v) || ctx.env.iters.contains(v) || ctx.env.params.contains(v)) {
            return false;
        }
        let mut assigned = BTreeSet::new();
        for b in body {
            assigned.extend(stmt_effects(b, self.kb).assigns);
        }
        // Nested loops assign their own iterators; that is fine.
        let outer: BTreeSet<&String> = ctx.env.iters.iter().chain(&ctx.env.params).collect();
        let StmtKind::For { var, .. } = &s.kind else { return false };
        !assigned.iter().any(|a| outer.contains(a) || a == var || a.starts_with("self"))
    }

    fn domain(&self, ctx: &Ctx, extra: &[Constraint], dims: usize) -> AffineSet {
        let space: Vec<String> = (0..dims).map(|d| format!("i{d}")).collect();
        let mut cons = ctx.cons.clone();
        cons.extend(extra.iter().cloned());
        AffineSet::from_constraints(space, Vec::new(), cons)
    }

    fn push(&mut self, s: ScopStatement) {
        self.out.push(s);
    }

    fn black_box(&mut self, s: &Stmt, ctx: &Ctx, pos: &mut usize) {
        let fx: Effects = stmt_effects(s, self.kb);
        // Structural symbols like `a.shape[0]`, modules and builtins are
        // not arrays.
        let skip = |n: &String| {
            let root = n.split('.').next().unwrap_or("");
            ctx.names.contains(n) || n.contains('[') || n.ends_with(".shape") || n.ends_with(".ndim") || NOT_DATA.contains(&root)
        };
        let writes = fx.writes.iter().filter(|n| !skip(n)).map(Access::whole).collect();
        let reads = fx.reads.iter().filter(|n| !skip(n)).map(Access::whole).collect();
        let mut beta = ctx.beta.clone();
        beta.push(*pos);
        *pos += 1;
        let dims = ctx.names.len();
        self.push(ScopStatement {
            id: 0,
            kind: ScopKind::BlackBox,
            domain: self.domain(ctx, &[], dims),
            names: ctx.names.clone(),
            explicit: dims,
            loops: ctx.loops.clone(),
            bounds: ctx.bounds.clone(),
            writes,
            reads,
            sem: None,
            reduction: false,
            original: s.clone(),
            beta,
        });
    }

    fn leaf(
        &mut self,
        s: &Stmt,
        target: &crate::frontend::ast::Expr,
        value: &crate::frontend::ast::Expr,
        aug: Option<crate::frontend::ast::BinOp>,
        ctx: &Ctx,
        pos: &mut usize,
    ) {
        let depth = ctx.names.len();
        let mut lw = Lowerer::new(&ctx.env, &ctx.rename, self.kb, depth);
        let Ok(leaf) = lw.assign(target, value, aug) else {
            return self.black_box(s, ctx, pos);
        };
        let dims = depth + leaf.implicit_dims;
        let mut names = ctx.names.clone();
        names.extend((depth..dims).map(|d| format!("__i{d}")));
        let mut beta = ctx.beta.clone();
        beta.push(*pos);
        *pos += 1;
        self.push(ScopStatement {
            id: 0,
            kind: leaf.kind,
            domain: self.domain(ctx, &leaf.implicit, dims),
            names,
            explicit: depth,
            loops: ctx.loops.clone(),
            bounds: ctx.bounds.clone(),
            writes: vec![leaf.write],
            reads: leaf.reads,
            sem: Some(leaf.sem),
            reduction: leaf.reduction,
            original: s.clone(),
            beta,
        });
    }
}

/// Symbols other than iterators and locals that a statement depends on.
fn statement_params(s: &ScopStatement) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut bound: BTreeSet<String> = s.domain.space.iter().cloned().collect();
    for a in s.reads.iter().chain(&s.writes) {
        for l in &a.locals {
            bound.insert(l.var.clone());
        }
    }
    let mut add = |e: &AffineExpr| {
        out.extend(e.symbols().filter(|x| !bound.contains(*x)).map(str::to_string));
    };
    for d in &s.domain.disjuncts {
        d.iter().for_each(|c| add(&c.expr));
    }
    for a in s.reads.iter().chain(&s.writes) {
        a.index.iter().for_each(&mut add);
        for l in &a.locals {
            add(&l.lo);
            add(&l.hi);
        }
    }
    if let Some(sem) = &s.sem {
        sem.visit(&mut |x| match x {
            crate::sem::Sem::Affine(a) => add(a),
            crate::sem::Sem::Reduce { lo, hi, .. } | crate::sem::Sem::Row { lo, hi, .. } => {
                add(lo);
                add(hi);
            }
            _ => {}
        });
    }
    out
}

/// Root variable of a parameter symbol: `n`, `self.M`, `x` for `x.shape[0]`.
fn param_root(p: &str) -> String {
    match p.split_once(".shape[") {
        Some((root, _)) => root.to_string(),
        None => p.to_string(),
    }
}

/// Integer names usable as symbolic parameters: integer kernel parameters
/// plus integer locals bound exactly once, at top level.
fn affine_env(f: &KernelFunction, types: &FunctionTypes, kb: &KnowledgeBase) -> AffineEnv {
    let mut params: BTreeSet<String> = types
        .params
        .iter()
        .filter(|(_, t)| *t == SemType::Int)
        .map(|(n, _)| n.clone())
        .collect();
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for s in &f.body {
        for a in stmt_effects(s, kb).assigns {
            *counts.entry(a).or_default() += 1;
        }
    }
    for s in &f.body {
        if let StmtKind::Assign { target, .. } = &s.kind {
            if let crate::frontend::ast::ExprKind::Name(n) = &target.kind {
                let nested = f.body.iter().filter(|x| !std::ptr::eq(*x, s)).any(|x| stmt_effects(x, kb).assigns.contains(n));
                if types.get(n) == SemType::Int && counts.get(n) == Some(&1) && !nested {
                    params.insert(n.clone());
                }
            }
        }
    }
    AffineEnv::new(params)
}

/// Lowers every top-level statement; `None` marks a region boundary.
fn lower_all(f: &KernelFunction, types: &FunctionTypes, kb: &KnowledgeBase) -> Vec<Option<Vec<ScopStatement>>> {
    let env = affine_env(f, types, kb);
    let mut b = Builder {
        kb,
        next_loop: 0,
        out: Vec::new(),
    };
    let mut per_stmt = Vec::new();
    for (t, s) in f.body.iter().enumerate() {
        let ctx = Ctx {
            env: env.clone(),
            rename: BTreeMap::new(),
            names: Vec::new(),
            loops: Vec::new(),
            cons: Vec::new(),
            bounds: Vec::new(),
            beta: Vec::new(),
            after: live_reads(&f.body[t + 1..], kb),
        };
        let mut pos = t;
        b.stmt(s, &ctx, &mut pos);
        per_stmt.push(std::mem::take(&mut b.out));
    }
    // Roots of every parameter symbol in use.
    let mut roots: BTreeSet<String> = env.params.clone();
    for stmts in &per_stmt {
        for s in stmts {
            for p in statement_params(s) {
                roots.insert(param_root(&p));
            }
        }
    }
    f.body
        .iter()
        .zip(per_stmt)
        .map(|(s, stmts)| {
            let fx = stmt_effects(s, kb);
            let rebinds = fx.assigns.iter().any(|a| roots.contains(a));
            let barrier = exits(s);
            if rebinds || barrier || stmts.is_empty() {
                None
            } else {
                Some(stmts)
            }
        })
        .collect()
}

fn finish(function: &str, mut stmts: Vec<ScopStatement>) -> Scop {
    let mut params = BTreeSet::new();
    for s in &stmts {
        params.extend(statement_params(s));
    }
    let params: Vec<String> = params.into_iter().collect();
    for (k, s) in stmts.iter_mut().enumerate() {
        s.id = k;
        s.domain.params = params.clone();
    }
    Scop {
        function: function.to_string(),
        params,
        statements: stmts,
    }
}

/// Maximal regions of consecutive analyzable top-level statements.
pub fn extract_function(f: &KernelFunction, types: &FunctionTypes, kb: &KnowledgeBase) -> Vec<Region> {
    let lowered = lower_all(f, types, kb);
    let mut out = Vec::new();
    let mut t = 0;
    while t < lowered.len() {
        if lowered[t].is_none() {
            t += 1;
            continue;
        }
        let start = t;
        let mut stmts = Vec::new();
        while let Some(Some(s)) = lowered.get(t) {
            stmts.extend(s.iter().cloned());
            t += 1;
        }
        out.push(Region {
            start,
            end: t,
            scop: finish(&types.name, stmts),
        });
    }
    out
}

/// Region boundaries only, as top-level statement ranges.
pub fn region_split(f: &KernelFunction, types: &FunctionTypes, kb: &KnowledgeBase) -> Vec<(usize, usize)> {
    extract_function(f, types, kb).iter().map(|r| (r.start, r.end)).collect()
}

/// Whole-function SCoP (statements of every region, renumbered).
pub fn extract_scop(f: &KernelFunction, types: &FunctionTypes, kb: &KnowledgeBase) -> Scop {
    let stmts = extract_function(f, types, kb).into_iter().flat_map(|r| r.scop.statements).collect();
    finish(&types.name, stmts)
}
