//! Dependences between statement instances, from exact conflict sets.

use crate::polyset::{AffineExpr, AffineSet, Constraint, Emptiness};
use crate::scop::{Access, Scop, ScopKind, ScopStatement};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum DepKind {
    Flow,
    Anti,
    Output,
}

impl DepKind {
    pub fn name(self) -> &'static str {
        match self {
            DepKind::Flow => "flow",
            DepKind::Anti => "anti",
            DepKind::Output => "output",
        }
    }
}

/// Source instances `x0..` of `src` that must run before destination
/// instances `y0..` of `dst`. `set` also ranges over the accesses' locals.
#[derive(Clone, Debug)]
pub struct Dependence {
    pub src: usize,
    pub dst: usize,
    pub array: String,
    pub kind: DepKind,
    /// 1-based loop level carrying the dependence, `None` when it is loop
    /// independent.
    pub level: Option<usize>,
    /// Self-dependence of a reduction on its accumulator.
    pub relaxable: bool,
    pub set: AffineSet,
}

pub fn xv(d: usize) -> AffineExpr {
    AffineExpr::var(format!("x{d}"))
}

pub fn yv(d: usize) -> AffineExpr {
    AffineExpr::var(format!("y{d}"))
}

fn side(s: &ScopStatement, tag: char) -> impl Fn(&str) -> String + '_ {
    move |v: &str| match s.domain.space.iter().position(|x| x == v) {
        Some(d) => format!("{tag}{d}"),
        None => v.to_string(),
    }
}

/// Lifts one access to `(space additions, index, local bounds)` on a side.
fn lift(s: &ScopStatement, a: &Access, tag: char) -> (Vec<String>, Vec<AffineExpr>, Vec<Constraint>) {
    let dom = side(s, tag);
    let local = |v: &str| -> Option<String> { a.locals.iter().any(|l| l.var == v).then(|| format!("{tag}.{v}")) };
    let ren = |e: &AffineExpr| e.rename(&|v| local(v).unwrap_or_else(|| dom(v)));
    let mut space = Vec::new();
    let mut cons = Vec::new();
    for l in &a.locals {
        let v = AffineExpr::var(format!("{tag}.{}", l.var));
        space.push(format!("{tag}.{}", l.var));
        cons.push(Constraint::le(&ren(&l.lo), &v));
        cons.push(Constraint::lt(&v, &ren(&l.hi)));
    }
    (space, a.index.iter().map(ren).collect(), cons)
}

/// Pairs of instances of `a` and `b` touching a common element through
/// the given accesses, over `x0.., y0.., locals`.
pub fn conflict_set(scop: &Scop, a: &ScopStatement, acc_a: &Access, b: &ScopStatement, acc_b: &Access) -> AffineSet {
    let mut space: Vec<String> = (0..a.dims()).map(|d| format!("x{d}")).collect();
    space.extend((0..b.dims()).map(|d| format!("y{d}")));
    let (la, ia, mut cons) = lift(a, acc_a, 'x');
    let (lb, ib, cb) = lift(b, acc_b, 'y');
    space.extend(la);
    space.extend(lb);
    cons.extend(cb);
    if !acc_a.whole && !acc_b.whole && ia.len() == ib.len() {
        for (p, q) in ia.iter().zip(&ib) {
            cons.push(Constraint::eq(p, q));
        }
    }
    let base = AffineSet::from_constraints(space.clone(), scop.params.clone(), cons);
    let da = a.domain.rename(&side(a, 'x')).with_dims(&space);
    let db = b.domain.rename(&side(b, 'y')).with_dims(&space);
    let mut out = base;
    for d in [da, db] {
        let mut d = d;
        d.space = space.clone();
        d.params = scop.params.clone();
        out = out.intersect(&d).expect("same space");
    }
    out
}

pub fn nonempty(s: &AffineSet, extra: &[Constraint]) -> bool {
    s.is_empty_under(extra) == Emptiness::MaybeNonEmpty
}

/// Number of leading loops shared by two statements.
pub fn common_loops(a: &ScopStatement, b: &ScopStatement) -> usize {
    a.loops.iter().zip(&b.loops).take_while(|(x, y)| x == y).count()
}

/// Constraints `x[..l-1] == y[..l-1]` and `x[l-1] < y[l-1]`.
pub fn carried_at(l: usize) -> Vec<Constraint> {
    let mut c: Vec<Constraint> = (0..l - 1).map(|k| Constraint::eq(&xv(k), &yv(k))).collect();
    c.push(Constraint::lt(&xv(l - 1), &yv(l - 1)));
    c
}

/// Every access pair of `a` then `b` with at least one write.
pub fn access_pairs<'s>(a: &'s ScopStatement, b: &'s ScopStatement) -> Vec<(&'s Access, &'s Access, DepKind)> {
    let mut out = Vec::new();
    for w in &a.writes {
        for r in &b.reads {
            out.push((w, r, DepKind::Flow));
        }
        for w2 in &b.writes {
            out.push((w, w2, DepKind::Output));
        }
    }
    for r in &a.reads {
        for w in &b.writes {
            out.push((r, w, DepKind::Anti));
        }
    }
    out.retain(|(p, q, _)| p.array == q.array);
    out
}

pub fn compute_deps(scop: &Scop) -> Vec<Dependence> {
    let mut out = Vec::new();
    for a in &scop.statements {
        for b in &scop.statements {
            let common = common_loops(a, b);
            for (pa, pb, kind) in access_pairs(a, b) {
                let conflict = conflict_set(scop, a, pa, b, pb);
                let relaxable = a.id == b.id && a.reduction && a.writes.first().is_some_and(|w| w.array == pa.array);
                let mut levels: Vec<(Option<usize>, Vec<Constraint>)> = (1..=common).map(|l| (Some(l), carried_at(l))).collect();
                if a.id < b.id {
                    levels.push((None, (0..common).map(|k| Constraint::eq(&xv(k), &yv(k))).collect()));
                }
                for (level, extra) in levels {
                    if !nonempty(&conflict, &extra) {
                        continue;
                    }
                    out.push(Dependence {
                        src: a.id,
                        dst: b.id,
                        array: pa.array.clone(),
                        kind,
                        level,
                        relaxable,
                        set: conflict.with_constraints(extra).expect("same space"),
                    });
                }
            }
        }
    }
    out
}

/// No instance pair of `members` conflicts with equal `x[..depth]` and
/// different `x[depth]`.
pub fn parallel_at(scop: &Scop, members: &[usize], depth: usize) -> bool {
    for &i in members {
        for &j in members {
            let (a, b) = (scop.statement(i), scop.statement(j));
            if a.dims() <= depth || b.dims() <= depth {
                continue;
            }
            for (pa, pb, _) in access_pairs(a, b) {
                if nonempty(&conflict_set(scop, a, pa, b, pb), &carried_at(depth + 1)) {
                    return false;
                }
            }
        }
    }
    true
}

/// Black boxes keep their original text, so nothing else may be merged
/// into their loop.
pub fn is_black_box(s: &ScopStatement) -> bool {
    s.kind == ScopKind::BlackBox
}
