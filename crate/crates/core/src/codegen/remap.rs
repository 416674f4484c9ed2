//! Whole-box rewriting of one statement into array operations.

use super::py::Spelling;
use super::vector::{Vectorizer, V};
use crate::polyset::{AffineExpr, AffineSet, Constraint, Emptiness, Relation};
use crate::scheduler::conflict_set;
use crate::scop::{Access, Scop, ScopKind, ScopStatement};
use crate::sem::{Sem, SemOp};

/// Lower and upper bound (exclusive) of `d` from constraints that only
/// mention `d` and `allowed` symbols. Redundant bounds that differ by a
/// constant are dropped; anything else fails.
pub fn bounds_of(cons: &[Constraint], d: &str, allowed: &dyn Fn(&str) -> bool) -> Option<(AffineExpr, AffineExpr)> {
    let mut lows = Vec::new();
    let mut highs = Vec::new();
    for c in cons.iter().filter(|c| c.expr.mentions(d)) {
        if c.expr.symbols().any(|s| s != d && !allowed(s)) {
            return None;
        }
        let k = c.expr.coeff(d);
        let rest = c.expr.sub(&AffineExpr::term(d, k));
        match (c.rel, k) {
            (Relation::Zero, 1) | (Relation::Zero, -1) => {
                let v = rest.scale(-k);
                highs.push(v.add_const(1));
                lows.push(v);
            }
            (Relation::NonNeg, 1) => lows.push(rest.scale(-1)),
            (Relation::NonNeg, -1) => highs.push(rest.add_const(1)),
            _ => return None,
        }
    }
    Some((tightest(lows, 1)?, tightest(highs, -1)?))
}

/// The bound `b` with `sign * (b - other)` a nonnegative constant for every
/// other candidate.
fn tightest(mut v: Vec<AffineExpr>, sign: i64) -> Option<AffineExpr> {
    v.dedup();
    v.iter()
        .find(|b| v.iter().all(|o| b.sub(o).scale(sign).as_constant().is_some_and(|c| c >= 0)))
        .cloned()
}

fn implied(space: &[String], params: &[String], by: &[Constraint], c: &Constraint) -> bool {
    c.negate().into_iter().all(|n| {
        let mut cs = by.to_vec();
        cs.push(n);
        AffineSet::from_constraints(space.to_vec(), params.to_vec(), cs).is_empty() == Emptiness::Empty
    })
}

/// Whether two different instances in the box touch the same element
/// through `w` and `other`, with the outer `covered` dimensions equal.
/// A read only matters when its instance comes after the writer's: an
/// array statement reads everything before it writes.
fn box_conflict(scop: &Scop, s: &ScopStatement, w: &Access, other: &Access, covered: usize, vdims: &[usize], read: bool) -> bool {
    let set = conflict_set(scop, s, w, s, other);
    let x = |d: usize| AffineExpr::var(format!("x{d}"));
    let y = |d: usize| AffineExpr::var(format!("y{d}"));
    let same: Vec<Constraint> = (0..covered).map(|d| Constraint::eq(&x(d), &y(d))).collect();
    (0..vdims.len()).any(|k| {
        let mut orders = vec![Constraint::lt(&x(vdims[k]), &y(vdims[k]))];
        if !read {
            orders.push(Constraint::lt(&y(vdims[k]), &x(vdims[k])));
        }
        orders.into_iter().any(|c| {
            let mut ctx = same.clone();
            ctx.extend(vdims[..k].iter().map(|&d| Constraint::eq(&x(d), &y(d))));
            ctx.push(c);
            set.is_empty_under(&ctx) == Emptiness::MaybeNonEmpty
        })
    })
}

pub struct Remap {
    pub lines: Vec<String>,
}

/// Rewrites dimensions `covered..` of `s` as one array statement. In
/// chunk mode dimension 0 runs over `__lo..__hi` and constraints on it
/// alone are taken as satisfied by the chunking.
pub fn remap(scop: &Scop, s: &ScopStatement, covered: usize, sp: &Spelling, chunk: bool, temps: &mut usize) -> Option<Remap> {
    if s.kind == ScopKind::BlackBox || s.dims() <= covered || s.domain.disjuncts.len() != 1 {
        return None;
    }
    let sem = s.sem.as_ref()?;
    let [w] = &s.writes[..] else { return None };
    if w.whole {
        return None;
    }
    let iters = s.iters();
    let cons = &s.domain.disjuncts[0];
    let outer = &iters[..covered];
    let is_outer = |v: &str| outer.iter().any(|o| o == v) || !iters.iter().any(|i| i == v);
    let in_write = |v: &String| w.index.iter().any(|e| e.mentions(v));
    let vdims: Vec<usize> = (covered..s.dims()).filter(|&d| in_write(&iters[d])).collect();
    let fold: Vec<usize> = (covered..s.dims()).filter(|&d| !in_write(&iters[d])).collect();
    if chunk && (covered > 0 || !vdims.contains(&0)) {
        return None;
    }

    let (value, accumulate) = if fold.is_empty() {
        (sem.clone(), false)
    } else {
        let Sem::Op { op: SemOp::Add, args } = sem else { return None };
        let [acc, rest] = &args[..] else { return None };
        if !s.reduction || *acc != Sem::read(w.array.clone(), w.index.clone()) {
            return None;
        }
        if rest.reads().iter().any(|r| r.0 == w.array) {
            return None;
        }
        let mut body = rest.clone();
        for &m in fold.iter().rev() {
            let (lo, hi) = bounds_of(cons, &iters[m], &is_outer)?;
            body = Sem::Reduce {
                var: iters[m].clone(),
                lo,
                hi,
                body: Box::new(body),
            };
        }
        (body, true)
    };

    let acc_read = |r: &Access| accumulate && r.array == w.array && r.index == w.index;
    let writes = s.writes.iter().map(|o| (o, false));
    let others = writes.chain(s.reads.iter().filter(|r| !acc_read(r)).map(|o| (o, true)));
    if others.filter(|(o, _)| o.array == w.array).any(|(o, read)| box_conflict(scop, s, w, o, covered, &vdims, read)) {
        return None;
    }
    // Reads that a later instance's write overlaps need a private copy
    // when the value is not a fresh array.
    let overlap = s
        .reads
        .iter()
        .filter(|r| r.array == w.array && !acc_read(r))
        .any(|r| box_conflict(scop, s, w, r, covered, &vdims, false));

    // Box bounds, from the projection onto the outer dims and each box dim.
    let explicit: Vec<Constraint> = cons.iter().filter(|c| !fold.iter().any(|&m| c.expr.mentions(&iters[m]))).cloned().collect();
    let flat = AffineSet::from_constraints(
        iters.iter().enumerate().filter(|(d, _)| !fold.contains(d)).map(|(_, v)| v.clone()).collect(),
        s.domain.params.clone(),
        explicit.clone(),
    );
    let mut context: Vec<Constraint> = explicit.iter().filter(|c| c.expr.symbols().all(&is_outer)).cloned().collect();
    let mut ranges = Vec::new();
    for &d in &vdims {
        let mut keep = outer.to_vec();
        keep.push(iters[d].clone());
        let proj = flat.project_onto(&keep);
        let [pc] = &proj.disjuncts[..] else { return None };
        let (lo, hi) = bounds_of(pc, &iters[d], &is_outer)?;
        context.push(Constraint::le(&lo, &AffineExpr::var(iters[d].as_str())));
        context.push(Constraint::lt(&AffineExpr::var(iters[d].as_str()), &hi));
        ranges.push(if chunk && d == 0 {
            (iters[d].clone(), AffineExpr::var("__lo"), AffineExpr::var("__hi"))
        } else {
            (iters[d].clone(), lo, hi)
        });
    }
    for l in &w.locals {
        ranges.push((l.var.clone(), l.lo.clone(), l.hi.clone()));
    }
    let mut extras = Vec::new();
    for c in &explicit {
        let only_chunk = chunk && c.expr.symbols().all(|v| v == iters[0] || !iters.iter().any(|i| i == v));
        if !only_chunk && !implied(&flat.space, &flat.params, &context, c) {
            extras.push(c.clone());
        }
    }
    if extras.len() > 1 {
        return None;
    }

    let mut vx = Vectorizer::new(sp, ranges);
    let lhs = vx.read(&w.array, &w.index)?;
    let V::Arr { text: lhs_text, dims } = &lhs else { return None };
    if dims.len() != vdims.len() + w.locals.len() {
        return None;
    }
    let val = vx.vectorize(&value)?;
    let mut rhs = vx.align(&val, dims)?;
    if overlap {
        rhs = if rhs.contains(' ') { format!("({rhs}).copy()") } else { format!("{rhs}.copy()") };
    }
    let m = vx.module().to_string();
    let op = if accumulate { "+=" } else { "=" };
    let Some(extra) = extras.pop() else {
        return Some(Remap {
            lines: vec![format!("{lhs_text} {op} {rhs}")],
        });
    };

    // One triangular constraint between the two view axes.
    if dims.len() != 2 || extra.rel != Relation::NonNeg {
        return None;
    }
    let (a0, a1) = (&dims[0], &dims[1]);
    let (c0, c1) = (extra.expr.coeff(a0), extra.expr.coeff(a1));
    let dconst = -extra.expr.constant_term();
    if extra.expr.terms().count() != 2 || c0 != -c1 || c0.abs() != 1 {
        return None;
    }
    let range = |v: &str| vx.ranges.iter().find(|r| r.0 == v).cloned();
    let (_, lo0, hi0) = range(a0)?;
    let (_, lo1, hi1) = range(a1)?;
    // c1 * (a1 - a0) >= d; view offsets b - a >= d + lo0 - lo1 when c1 = 1.
    let k = lo0.sub(&lo1).scale(c1).add_const(dconst);
    let (tri, k) = if c1 == 1 { ("triu", k) } else { ("tril", k.scale(-1)) };
    let k = sp.affine(&k);
    let h0 = sp.affine(&hi0.sub(&lo0));
    let h1 = sp.affine(&hi1.sub(&lo1));
    let t = format!("__t{}", *temps);
    *temps += 1;
    let new = if accumulate { format!("{lhs_text} + {t}") } else { t.clone() };
    Some(Remap {
        lines: vec![
            format!("{t} = {rhs}"),
            format!("{lhs_text} = {m}.where({m}.{tri}({m}.ones(({h0}, {h1}), dtype=bool), k={k}), {new}, {lhs_text})"),
        ],
    })
}
