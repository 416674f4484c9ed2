//! Checks computed dependences and parallel marks against a trace.

use std::collections::{BTreeMap, BTreeSet};

use loomc::codegen::{schedule_region, Options};
use loomc::frontend::ast::KernelFunction;
use loomc::kb::default_kb;
use loomc::polyset::AffineSet;
use loomc::scheduler::Node;
use loomc::scop::extract_function;
use loomc::typeinf::FunctionTypes;

use super::trace::{within, Trace};

#[derive(Debug, Default)]
pub struct DepReport {
    pub pairs: usize,
    pub parallel_marks: usize,
    pub uncovered: Vec<String>,
    pub bad_parallel: Vec<String>,
}

fn members(ns: &[Node], out: &mut BTreeSet<usize>) {
    for n in ns {
        match n {
            Node::Stmt(id) => {
                out.insert(*id);
            }
            Node::Loop { body, .. } => members(body, out),
            Node::Pfor(p) => {
                out.extend(p.members.iter().copied());
                members(&p.body, out);
            }
        }
    }
}

/// `(depth, statements)` of every parallel mark in a schedule.
fn marks(ns: &[Node], out: &mut Vec<(usize, BTreeSet<usize>)>) {
    for n in ns {
        match n {
            Node::Stmt(_) => {}
            Node::Loop { depth, parallel, body } => {
                if *parallel {
                    let mut m = BTreeSet::new();
                    members(body, &mut m);
                    out.push((*depth, m));
                }
                marks(body, out);
            }
            Node::Pfor(p) => {
                let mut m: BTreeSet<usize> = p.members.iter().copied().collect();
                members(&p.body, &mut m);
                out.push((0, m));
                marks(&p.body, out);
            }
        }
    }
}

pub fn check_function(f: &KernelFunction, t: &FunctionTypes, params: &BTreeMap<String, i64>, opts: &Options) -> DepReport {
    let kb = default_kb();
    let regions = extract_function(f, t, &kb);
    let scheds: Vec<_> = regions.iter().map(|r| schedule_region(&r.scop, opts)).collect();
    let trace = Trace::run(f, params);
    let lookup = |p: &str| params.get(p).copied();

    // (region, statement, iteration vector) of each instance.
    let place: Vec<Option<(usize, usize, Vec<i64>)>> = trace
        .instances
        .iter()
        .map(|i| {
            regions.iter().enumerate().find_map(|(r, reg)| {
                let s = reg.scop.statements.iter().find(|s| within(&s.original, i.leaf))?;
                assert_eq!(s.explicit, s.dims(), "oracle kernels have explicit loops only");
                Some((r, s.id, i.iters[..s.dims()].to_vec()))
            })
        })
        .collect();

    let projected: Vec<Vec<AffineSet>> = regions
        .iter()
        .zip(&scheds)
        .map(|(reg, (deps, _))| {
            deps.iter()
                .map(|d| {
                    let keep: Vec<String> = (0..reg.scop.statement(d.src).dims())
                        .map(|k| format!("x{k}"))
                        .chain((0..reg.scop.statement(d.dst).dims()).map(|k| format!("y{k}")))
                        .collect();
                    d.set.project_onto(&keep)
                })
                .collect()
        })
        .collect();
    let mut all_marks: Vec<Vec<(usize, BTreeSet<usize>)>> = Vec::new();
    for (_, sch) in &scheds {
        let mut m = Vec::new();
        marks(&sch.nodes, &mut m);
        all_marks.push(m);
    }

    let mut rep = DepReport {
        parallel_marks: all_marks.iter().map(Vec::len).sum(),
        ..DepReport::default()
    };
    for c in trace.conflicts() {
        let (Some((ra, sa, xa)), Some((rb, sb, xb))) = (&place[c.first], &place[c.second]) else { continue };
        if ra != rb {
            continue;
        }
        rep.pairs += 1;
        let (deps, _) = &scheds[*ra];
        let mut point = xa.clone();
        point.extend(xb);
        let covered = deps
            .iter()
            .zip(&projected[*ra])
            .any(|(d, set)| d.src == *sa && d.dst == *sb && set.contains(&point, &lookup));
        if !covered {
            rep.uncovered.push(format!("{}: S{sa}{xa:?} -> S{sb}{xb:?}", f.name));
        }
        for (depth, m) in &all_marks[*ra] {
            let d = *depth;
            let split = m.contains(sa) && m.contains(sb) && xa.len() > d && xb.len() > d && xa[..d] == xb[..d] && xa[d] != xb[d];
            if split {
                rep.bad_parallel.push(format!("{}: depth {d} separates S{sa}{xa:?} and S{sb}{xb:?}", f.name));
            }
        }
    }
    rep
}

/// Every binding of `names` to values from `values`.
pub fn grid(names: &[String], values: &[i64]) -> Vec<BTreeMap<String, i64>> {
    let mut out = vec![BTreeMap::new()];
    for n in names {
        out = out
            .into_iter()
            .flat_map(|m| {
                values.iter().map(move |v| {
                    let mut m = m.clone();
                    m.insert(n.clone(), *v);
                    m
                })
            })
            .collect();
    }
    out
}

/// Parameter values the dependence checks sweep; loop bounds stay <= 8.
pub const PARAM_VALUES: &[i64] = &[0, 1, 2, 3, 5, 8];

/// Checks every function of `src` over the parameter grid, merged per
/// function.
pub fn check_source(src: &str, opts: &Options) -> Vec<(String, DepReport)> {
    let (p, types) = super::typed(src);
    let kb = default_kb();
    super::functions(&p)
        .into_iter()
        .zip(&types)
        .map(|(f, t)| {
            let mut names = BTreeSet::new();
            for r in extract_function(f, t, &kb) {
                names.extend(r.scop.params.iter().cloned());
            }
            let names: Vec<String> = names.into_iter().collect();
            let mut total = DepReport::default();
            for params in grid(&names, PARAM_VALUES) {
                let r = check_function(f, t, &params, opts);
                total.pairs += r.pairs;
                total.parallel_marks = r.parallel_marks;
                total.uncovered.extend(r.uncovered);
                total.bad_parallel.extend(r.bad_parallel);
            }
            (f.name.clone(), total)
        })
        .collect()
}
