use std::collections::{BTreeMap, BTreeSet};

use super::deps::{carried_at, common_loops, conflict_set, is_black_box, nonempty, parallel_at, xv, yv, access_pairs, Dependence};
use super::{Node, Pfor, Remappable, Schedule, SchedulePolicy};
use crate::polyset::{AffineExpr, Constraint};
use crate::scop::{Scop, ScopStatement};

/// The source loop structure, with parallel marks.
pub fn original_schedule(scop: &Scop, ids: &[usize], depth: usize) -> Vec<Node> {
    let mut out = Vec::new();
    let mut k = 0;
    while k < ids.len() {
        let s = scop.statement(ids[k]);
        let Some(&lp) = s.loops.get(depth) else {
            out.push(Node::Stmt(ids[k]));
            k += 1;
            continue;
        };
        let mut end = k + 1;
        while end < ids.len() && scop.statement(ids[end]).loops.get(depth) == Some(&lp) {
            end += 1;
        }
        let group = &ids[k..end];
        if group.len() == 1 {
            out.push(Node::Stmt(group[0]));
        } else {
            out.push(Node::Loop {
                depth,
                parallel: parallel_at(scop, group, depth),
                body: original_schedule(scop, group, depth + 1),
            });
        }
        k = end;
    }
    out
}

fn sccs(ids: &[usize], edges: &BTreeSet<(usize, usize)>) -> Vec<Vec<usize>> {
    // Tarjan over a handful of nodes.
    struct T<'a> {
        edges: &'a BTreeSet<(usize, usize)>,
        index: BTreeMap<usize, usize>,
        low: BTreeMap<usize, usize>,
        stack: Vec<usize>,
        on: BTreeSet<usize>,
        out: Vec<Vec<usize>>,
    }
    fn visit(t: &mut T, v: usize) {
        let n = t.index.len();
        t.index.insert(v, n);
        t.low.insert(v, n);
        t.stack.push(v);
        t.on.insert(v);
        let succ: Vec<usize> = t.edges.iter().filter(|e| e.0 == v).map(|e| e.1).collect();
        for w in succ {
            if !t.index.contains_key(&w) {
                visit(t, w);
                let lw = t.low[&w];
                let lv = t.low.get_mut(&v).unwrap();
                *lv = (*lv).min(lw);
            } else if t.on.contains(&w) {
                let iw = t.index[&w];
                let lv = t.low.get_mut(&v).unwrap();
                *lv = (*lv).min(iw);
            }
        }
        if t.low[&v] == t.index[&v] {
            let mut comp = Vec::new();
            while let Some(w) = t.stack.pop() {
                t.on.remove(&w);
                comp.push(w);
                if w == v {
                    break;
                }
            }
            comp.sort();
            t.out.push(comp);
        }
    }
    let mut t = T {
        edges,
        index: BTreeMap::new(),
        low: BTreeMap::new(),
        stack: Vec::new(),
        on: BTreeSet::new(),
        out: Vec::new(),
    };
    for &v in ids {
        if !t.index.contains_key(&v) {
            visit(&mut t, v);
        }
    }
    t.out
}

/// Loop distribution around strongly connected components, starting at
/// dimension `depth` of statements that share their first `depth` loops.
pub fn intra_schedule(scop: &Scop, deps: &[Dependence], ids: &[usize], depth: usize) -> Vec<Node> {
    let set: BTreeSet<usize> = ids.iter().copied().collect();
    let edges: BTreeSet<(usize, usize)> = deps
        .iter()
        .filter(|d| d.src != d.dst && set.contains(&d.src) && set.contains(&d.dst))
        .filter(|d| d.level.is_none_or(|l| l > depth))
        .map(|d| (d.src, d.dst))
        .collect();
    let comps = sccs(ids, &edges);
    let comp_of: BTreeMap<usize, usize> = comps.iter().enumerate().flat_map(|(c, m)| m.iter().map(move |&s| (s, c))).collect();
    let mut indeg = vec![0usize; comps.len()];
    let mut succ: BTreeSet<(usize, usize)> = BTreeSet::new();
    for &(a, b) in &edges {
        let (ca, cb) = (comp_of[&a], comp_of[&b]);
        if ca != cb && succ.insert((ca, cb)) {
            indeg[cb] += 1;
        }
    }
    // Kahn, lowest textual position first.
    let mut ready: BTreeSet<(usize, usize)> = (0..comps.len()).filter(|&c| indeg[c] == 0).map(|c| (comps[c][0], c)).collect();
    let mut out = Vec::new();
    while let Some(first) = ready.pop_first() {
        let c = first.1;
        let members = &comps[c];
        let shared = members.iter().all(|&m| {
            let s = scop.statement(m);
            s.explicit > depth && common_loops(s, scop.statement(members[0])) > depth
        });
        if members.len() == 1 {
            out.push(Node::Stmt(members[0]));
        } else if shared {
            out.push(Node::Loop {
                depth,
                parallel: parallel_at(scop, members, depth),
                body: intra_schedule(scop, deps, members, depth + 1),
            });
        } else {
            out.extend(original_schedule(scop, members, depth));
        }
        for &(x, y) in &succ {
            if x == c {
                indeg[y] -= 1;
                if indeg[y] == 0 {
                    ready.insert((comps[y][0], y));
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug)]
enum Term {
    Const(i64),
    Dim { d: usize, parallel: bool },
}

fn vectors(nodes: &[Node], scop: &Scop, prefix: &[Term], covered: usize, out: &mut BTreeMap<usize, Vec<Term>>) {
    for (p, n) in nodes.iter().enumerate() {
        let mut v = prefix.to_vec();
        v.push(Term::Const(p as i64));
        match n {
            Node::Loop { depth, parallel, body } => {
                v.push(Term::Dim { d: *depth, parallel: *parallel });
                vectors(body, scop, &v, depth + 1, out);
            }
            Node::Pfor(pf) => {
                v.push(Term::Dim { d: 0, parallel: true });
                vectors(&pf.body, scop, &v, 1, out);
            }
            Node::Stmt(id) => {
                for d in covered..scop.statement(*id).explicit {
                    v.push(Term::Dim { d, parallel: false });
                    v.push(Term::Const(0));
                }
                out.insert(*id, v);
            }
        }
    }
}

/// Indices of the dependences a schedule does not respect.
pub fn violations(scop: &Scop, deps: &[Dependence], nodes: &[Node]) -> Vec<usize> {
    let mut vecs = BTreeMap::new();
    vectors(nodes, scop, &[], 0, &mut vecs);
    let mut bad = Vec::new();
    for (k, d) in deps.iter().enumerate() {
        let (Some(sx), Some(sy)) = (vecs.get(&d.src), vecs.get(&d.dst)) else {
            bad.push(k);
            continue;
        };
        let mut eq: Vec<Constraint> = Vec::new();
        let mut violated = None;
        for (tx, ty) in sx.iter().zip(sy) {
            match (*tx, *ty) {
                (Term::Const(a), Term::Const(b)) if a == b => continue,
                (Term::Const(a), Term::Const(b)) => {
                    violated = Some(a > b && nonempty(&d.set, &eq));
                    break;
                }
                (Term::Dim { d: i, parallel }, Term::Dim { d: j, .. }) if i == j => {
                    let mut later = eq.clone();
                    later.push(Constraint::lt(&yv(i), &xv(i)));
                    let mut earlier = eq.clone();
                    earlier.push(Constraint::lt(&xv(i), &yv(i)));
                    if nonempty(&d.set, &later) || (parallel && nonempty(&d.set, &earlier)) {
                        violated = Some(true);
                        break;
                    }
                    eq.push(Constraint::eq(&xv(i), &yv(i)));
                }
                _ => {
                    violated = Some(true);
                    break;
                }
            }
        }
        if violated.unwrap_or_else(|| nonempty(&d.set, &eq)) {
            bad.push(k);
        }
    }
    bad
}

/// Writes along dimension 0 land at `i0 + c`, so chunks write disjoint
/// leading slices.
fn chunkable(s: &ScopStatement) -> bool {
    let i0 = AffineExpr::var("i0");
    !s.writes.is_empty() && s.writes.iter().all(|w| !w.whole && w.index.first().is_some_and(|e| e.sub(&i0).is_constant()))
}

fn eligible(scop: &Scop, s: &ScopStatement, remappable: Remappable) -> bool {
    s.dims() >= 1 && chunkable(s) && (s.explicit >= 1 || remappable(s)) && parallel_at(scop, &[s.id], 0)
}

fn same_range(a: &ScopStatement, b: &ScopStatement) -> bool {
    let keep = vec!["i0".to_string()];
    let pa = a.domain.project_onto(&keep);
    let pb = b.domain.project_onto(&keep);
    let within = |x: &crate::polyset::AffineSet, y: &crate::polyset::AffineSet| {
        let [cons] = y.disjuncts.as_slice() else { return false };
        // Constraints on parameters alone only say whether the rest is empty.
        let on_i0 = cons.iter().filter(|c| c.expr.mentions("i0"));
        x.disjuncts.len() == 1 && on_i0.into_iter().all(|c| c.negate().into_iter().all(|n| !nonempty(x, &[n])))
    };
    within(&pa, &pb) && within(&pb, &pa)
}

fn no_cross_chunk_conflict(scop: &Scop, a: &ScopStatement, b: &ScopStatement) -> bool {
    [(a, b), (b, a)].iter().all(|(p, q)| {
        access_pairs(p, q)
            .iter()
            .all(|(x, y, _)| !nonempty(&conflict_set(scop, p, x, q, y), &carried_at(1)))
    })
}

fn fusable(scop: &Scop, band: &[usize], s: &ScopStatement) -> bool {
    let first = scop.statement(band[0]);
    let any_bb = is_black_box(s) || band.iter().any(|&m| is_black_box(scop.statement(m)));
    if any_bb && !band.iter().all(|&m| common_loops(scop.statement(m), s) >= 1) {
        return false;
    }
    same_range(first, s) && band.iter().all(|&m| no_cross_chunk_conflict(scop, scop.statement(m), s))
}

fn pfor(scop: &Scop, deps: &[Dependence], members: Vec<usize>) -> Pfor {
    let mut output = BTreeSet::new();
    let mut input = BTreeSet::new();
    for &m in &members {
        let s = scop.statement(m);
        output.extend(s.writes.iter().map(|w| w.array.clone()));
        input.extend(s.reads.iter().map(|r| r.array.clone()));
    }
    Pfor {
        transfer: !members.iter().any(|&m| is_black_box(scop.statement(m))),
        body: intra_schedule(scop, deps, &members, 1),
        members,
        output,
        input,
    }
}

/// Task bands at dimension 0, loop distribution below them and around
/// them.
fn two_level(scop: &Scop, deps: &[Dependence], remappable: Remappable) -> Vec<Node> {
    let mut bands: Vec<(Vec<usize>, bool)> = Vec::new();
    for s in &scop.statements {
        let ok = eligible(scop, s, remappable);
        match bands.last_mut() {
            Some((band, true)) if ok && fusable(scop, band, s) => band.push(s.id),
            _ => bands.push((vec![s.id], ok)),
        }
    }
    let mut out = Vec::new();
    let mut run: Vec<usize> = Vec::new();
    for (band, ok) in bands {
        let task = ok && (band.len() >= 2 || !remappable(scop.statement(band[0])));
        if task {
            out.extend(intra_schedule(scop, deps, &std::mem::take(&mut run), 0));
            out.push(Node::Pfor(pfor(scop, deps, band)));
        } else {
            run.extend(band);
        }
    }
    out.extend(intra_schedule(scop, deps, &run, 0));
    out
}

fn all_ids(scop: &Scop) -> Vec<usize> {
    (0..scop.statements.len()).collect()
}

fn checked(scop: &Scop, deps: &[Dependence], tries: Vec<(&str, Vec<Node>)>) -> Schedule {
    for (name, nodes) in tries {
        if violations(scop, deps, &nodes).is_empty() {
            return Schedule {
                policy: name.to_string(),
                nodes,
            };
        }
    }
    Schedule {
        policy: "sequential".into(),
        nodes: original_schedule(scop, &all_ids(scop), 0),
    }
}

pub struct TwoLevelPolicy;
pub struct IntraPolicy;
pub struct SequentialPolicy;

impl SchedulePolicy for TwoLevelPolicy {
    fn name(&self) -> &'static str {
        "two-level"
    }

    fn schedule(&self, scop: &Scop, deps: &[Dependence], remappable: Remappable) -> Schedule {
        let ids = all_ids(scop);
        checked(
            scop,
            deps,
            vec![
                ("two-level", two_level(scop, deps, remappable)),
                ("intra", intra_schedule(scop, deps, &ids, 0)),
            ],
        )
    }
}

impl SchedulePolicy for IntraPolicy {
    fn name(&self) -> &'static str {
        "intra"
    }

    fn schedule(&self, scop: &Scop, deps: &[Dependence], _: Remappable) -> Schedule {
        checked(scop, deps, vec![("intra", intra_schedule(scop, deps, &all_ids(scop), 0))])
    }
}

impl SchedulePolicy for SequentialPolicy {
    fn name(&self) -> &'static str {
        "sequential"
    }

    fn schedule(&self, scop: &Scop, _: &[Dependence], _: Remappable) -> Schedule {
        Schedule {
            policy: "sequential".into(),
            nodes: original_schedule(scop, &all_ids(scop), 0),
        }
    }
}
