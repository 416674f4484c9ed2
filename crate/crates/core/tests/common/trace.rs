//! Reference semantics for dependence checks: runs a kernel's loop nest
//! on concrete parameters and records which array cells each statement
//! instance touches. Knows nothing about polyhedra.

use std::collections::{BTreeMap, HashMap};

use loomc::frontend::ast::{BinOp, BoolOp, CmpOp, Expr, ExprKind, Index, KernelFunction, Stmt, StmtKind};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub array: String,
    pub index: Vec<i64>,
}

/// One execution of a leaf statement.
#[derive(Clone, Debug)]
pub struct Instance<'f> {
    pub leaf: &'f Stmt,
    /// Values of the enclosing loop variables, outermost first.
    pub iters: Vec<i64>,
    pub reads: Vec<Cell>,
    pub writes: Vec<Cell>,
}

/// Two instances in execution order touching a common cell, one of them
/// writing it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Conflict {
    pub first: usize,
    pub second: usize,
}

pub struct Trace<'f> {
    pub instances: Vec<Instance<'f>>,
}

struct Run<'f> {
    env: HashMap<String, i64>,
    loops: Vec<i64>,
    out: Vec<Instance<'f>>,
}

fn int(env: &HashMap<String, i64>, e: &Expr) -> i64 {
    match &e.kind {
        ExprKind::Int(v) => *v,
        ExprKind::Name(_) | ExprKind::Attribute { .. } => {
            let n = e.dotted().expect("dotted name");
            *env.get(&n).unwrap_or_else(|| panic!("unbound {n}"))
        }
        ExprKind::Neg(x) => -int(env, x),
        ExprKind::BinOp { op, lhs, rhs } => {
            let (a, b) = (int(env, lhs), int(env, rhs));
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                _ => panic!("unsupported integer operator"),
            }
        }
        _ => panic!("not an integer expression: {e:?}"),
    }
}

fn truth(env: &HashMap<String, i64>, e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Compare { op, lhs, rhs } => {
            let (a, b) = (int(env, lhs), int(env, rhs));
            match op {
                CmpOp::Eq => a == b,
                CmpOp::Ne => a != b,
                CmpOp::Lt => a < b,
                CmpOp::Le => a <= b,
                CmpOp::Gt => a > b,
                CmpOp::Ge => a >= b,
            }
        }
        ExprKind::BoolOp { op: BoolOp::And, values } => values.iter().all(|v| truth(env, v)),
        ExprKind::BoolOp { op: BoolOp::Or, values } => values.iter().any(|v| truth(env, v)),
        ExprKind::Not(x) => !truth(env, x),
        _ => panic!("unsupported condition"),
    }
}

/// `a[i][j]` and `a[i, j]` both name cell `(i, j)` of `a`.
fn cell(env: &HashMap<String, i64>, e: &Expr) -> Option<Cell> {
    let ExprKind::Subscript { base, indices } = &e.kind else { return None };
    let mut c = match cell(env, base) {
        Some(c) => c,
        None => Cell {
            array: base.dotted().expect("array name"),
            index: Vec::new(),
        },
    };
    for ix in indices {
        match ix {
            Index::Expr(x) => c.index.push(int(env, x)),
            Index::Slice { .. } => panic!("slices are outside the oracle's subset"),
        }
    }
    Some(c)
}

fn reads(env: &HashMap<String, i64>, e: &Expr, out: &mut Vec<Cell>) {
    if let Some(c) = cell(env, e) {
        out.push(c);
        return;
    }
    match &e.kind {
        ExprKind::BinOp { lhs, rhs, .. } | ExprKind::Compare { lhs, rhs, .. } => {
            reads(env, lhs, out);
            reads(env, rhs, out);
        }
        ExprKind::Neg(x) | ExprKind::Not(x) => reads(env, x, out),
        ExprKind::BoolOp { values, .. } | ExprKind::Tuple(values) => values.iter().for_each(|v| reads(env, v, out)),
        ExprKind::Call { args, .. } => args.iter().for_each(|v| reads(env, v, out)),
        _ => {}
    }
}

impl<'f> Run<'f> {
    fn block(&mut self, body: &'f [Stmt]) {
        for s in body {
            self.stmt(s);
        }
    }

    fn stmt(&mut self, s: &'f Stmt) {
        match &s.kind {
            StmtKind::For { var, lower, upper, step, body } => {
                let lo = lower.as_ref().map_or(0, |e| int(&self.env, e));
                let hi = int(&self.env, upper);
                let st = step.as_ref().map_or(1, |e| int(&self.env, e));
                assert!(st > 0, "positive steps only");
                let saved = self.env.get(var).copied();
                let mut v = lo;
                while v < hi {
                    self.env.insert(var.clone(), v);
                    self.loops.push(v);
                    self.block(body);
                    self.loops.pop();
                    v += st;
                }
                match saved {
                    Some(x) => self.env.insert(var.clone(), x),
                    None => self.env.remove(var),
                };
            }
            StmtKind::If { cond, body, orelse } => {
                if truth(&self.env, cond) {
                    self.block(body)
                } else {
                    self.block(orelse)
                }
            }
            StmtKind::Assign { target, value } | StmtKind::AugAssign { target, value, .. } => {
                let mut r = Vec::new();
                reads(&self.env, value, &mut r);
                let w = cell(&self.env, target).expect("subscripted target");
                if matches!(s.kind, StmtKind::AugAssign { .. }) {
                    r.push(w.clone());
                }
                self.out.push(Instance {
                    leaf: s,
                    iters: self.loops.clone(),
                    reads: r,
                    writes: vec![w],
                });
            }
            _ => panic!("statement outside the oracle's subset"),
        }
    }
}

impl<'f> Trace<'f> {
    /// Runs `f` with integer parameters and `self.x` attributes bound by
    /// `params`.
    pub fn run(f: &'f KernelFunction, params: &BTreeMap<String, i64>) -> Self {
        let mut r = Run {
            env: params.iter().map(|(k, v)| (k.clone(), *v)).collect(),
            loops: Vec::new(),
            out: Vec::new(),
        };
        r.block(&f.body);
        Trace { instances: r.out }
    }

    /// Every conflicting instance pair, by brute force over cells.
    pub fn conflicts(&self) -> Vec<Conflict> {
        let mut by_cell: HashMap<&Cell, Vec<(usize, bool)>> = HashMap::new();
        for (k, i) in self.instances.iter().enumerate() {
            for c in &i.reads {
                by_cell.entry(c).or_default().push((k, false));
            }
            for c in &i.writes {
                by_cell.entry(c).or_default().push((k, true));
            }
        }
        let mut out = Vec::new();
        for uses in by_cell.values() {
            for (n, &(a, wa)) in uses.iter().enumerate() {
                for &(b, wb) in &uses[n + 1..] {
                    if a != b && (wa || wb) {
                        out.push(Conflict {
                            first: a.min(b),
                            second: a.max(b),
                        });
                    }
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }
}

/// Whether `leaf` is `root` or nested inside it. Tree equality ignores
/// positions, so identical statements are told apart by theirs.
pub fn within(root: &Stmt, leaf: &Stmt) -> bool {
    let here = (root.origin.line, root.origin.col) == (leaf.origin.line, leaf.origin.col);
    if here && root == leaf {
        return true;
    }
    match &root.kind {
        StmtKind::For { body, .. } => body.iter().any(|s| within(s, leaf)),
        StmtKind::If { body, orelse, .. } => body.iter().chain(orelse).any(|s| within(s, leaf)),
        _ => false,
    }
}
