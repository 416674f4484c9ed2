//! Code generation: remapped library calls, loop nests, pfor tasks and
//! the multi-version guard tree around each optimized function.

mod guard;
mod loops;
mod lower;
mod py;
mod remap;
mod vector;

use std::collections::BTreeSet;

pub use guard::{header, is_docstring, type_checks};
pub use lower::{transferable, Emitter};
pub use py::Spelling;
pub use remap::{bounds_of, remap, Remap};
pub use vector::{matchers, Matcher, Vectorizer, V};

use crate::frontend::ast::{AnnotationKind, Item, KernelFunction, Program, RawText, StmtKind};
use crate::frontend::{emit_function, emit_stmts, Diagnostic};
use crate::kb::KnowledgeBase;
use crate::scheduler::{compute_deps, policies, policy, Dependence, Schedule};
use crate::scop::{extract_function, stmt_effects, Scop, ScopStatement};
use crate::typeinf::{FunctionTypes, SemType};
use loops::pad;

#[derive(Clone, Debug)]
pub struct Options {
    /// Fixed task count; the runtime's worker count when unset.
    pub ntasks: Option<usize>,
    /// Minimum trip count for distributing a pfor band.
    pub tpar: usize,
    pub enable_gpu: bool,
    /// Registered schedule policy name; the first registered when unset.
    pub policy: Option<String>,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            ntasks: None,
            tpar: 64,
            enable_gpu: false,
            policy: None,
        }
    }
}

pub struct RegionReport {
    pub scop: Scop,
    pub deps: Vec<Dependence>,
    pub schedule: Schedule,
}

pub struct FunctionReport {
    pub name: String,
    pub regions: Vec<RegionReport>,
    pub remaps: usize,
    pub pfors: usize,
    pub optimized: bool,
}

pub struct Generated {
    pub program: Program,
    pub diagnostics: Vec<Diagnostic>,
    pub functions: Vec<FunctionReport>,
}

impl Generated {
    pub fn optimized(&self) -> bool {
        self.functions.iter().any(|f| f.optimized)
    }
}

/// Whether a statement can be rewritten over its whole domain.
pub fn remappable(scop: &Scop, s: &ScopStatement) -> bool {
    remap(scop, s, 0, &Spelling::new(), false, &mut 0).is_some()
}

pub fn schedule_region(scop: &Scop, opts: &Options) -> (Vec<Dependence>, Schedule) {
    let deps = compute_deps(scop);
    let p = opts
        .policy
        .as_deref()
        .and_then(policy)
        .unwrap_or_else(|| policies().remove(0));
    let pred = |s: &ScopStatement| remappable(scop, s);
    let sch = p.schedule(scop, &deps, &pred);
    (deps, sch)
}

struct FnOut {
    text: Option<String>,
    tasks: Vec<String>,
    diags: Vec<Diagnostic>,
    report: FunctionReport,
}

/// Array-valued names a region touches, shape roots included.
fn region_names(scop: &Scop) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for s in &scop.statements {
        for a in s.writes.iter().chain(&s.reads) {
            out.insert(a.array.clone());
        }
    }
    for p in &scop.params {
        out.insert(p.split_once(".shape[").map_or(p.as_str(), |x| x.0).to_string());
    }
    out
}

fn compile_function(f: &KernelFunction, t: &FunctionTypes, kb: &KnowledgeBase, opts: &Options, indent: usize, task_base: usize) -> FnOut {
    let mut report = FunctionReport {
        name: t.name.clone(),
        regions: Vec::new(),
        remaps: 0,
        pfors: 0,
        optimized: false,
    };
    let unchanged = |report| FnOut {
        text: None,
        tasks: Vec::new(),
        diags: Vec::new(),
        report,
    };
    if !f.fully_annotated() {
        return unchanged(report);
    }
    let regions = extract_function(f, t, kb);
    for r in &regions {
        let (deps, schedule) = schedule_region(&r.scop, opts);
        report.regions.push(RegionReport {
            scop: r.scop.clone(),
            deps,
            schedule,
        });
    }
    let Some(last_end) = regions.iter().map(|r| r.end).max() else {
        return unchanged(report);
    };

    // Parameters the optimized version relies on.
    let mut used = BTreeSet::new();
    let mut written = BTreeSet::new();
    for r in &regions {
        used.extend(region_names(&r.scop));
        for s in &r.scop.statements {
            written.extend(s.writes.iter().map(|w| w.array.clone()));
        }
    }
    let mut lists = Vec::new();
    let mut ranks = Vec::new();
    for p in f.kernel_params().filter(|p| used.contains(&p.name)) {
        let ty: SemType = t.get(&p.name);
        match p.annotation.as_ref().map(|a| a.kind) {
            Some(AnnotationKind::List) => match ty.rank() {
                Some(r @ 1..=2) => {
                    lists.push((p.name.clone(), r));
                    ranks.push(guard::rank_check(&p.name, ty, true).unwrap_or_default());
                }
                _ => return unchanged(report),
            },
            Some(AnnotationKind::Ndarray) => match guard::rank_check(&p.name, ty, false) {
                Some(c) => ranks.push(c),
                None => return unchanged(report),
            },
            _ => {}
        }
    }
    // Lists are copied in once and written back after the last region, so
    // nothing in between may touch them or leave early.
    let doc = f.body.first().is_some_and(is_docstring);
    let in_region = |k: usize| regions.iter().any(|r| (r.start..r.end).contains(&k));
    if !lists.is_empty() {
        for (k, s) in f.body.iter().enumerate().take(last_end) {
            if in_region(k) || (doc && k == 0) {
                continue;
            }
            let fx = stmt_effects(s, kb);
            let touches = lists.iter().any(|(x, _)| fx.reads.contains(x) || fx.writes.contains(x));
            if touches || matches!(s.kind, StmtKind::Return(_)) || crate::scop::exits(s) {
                return unchanged(report);
            }
        }
    }

    let body_level = indent + 1;
    let opt_level = body_level + 1 + usize::from(!ranks.is_empty());
    let mut sp = Spelling::new();
    for (x, _) in &lists {
        sp.arrays.insert(x.clone(), guard::list_copy(x));
    }
    let mut optimized = String::new();
    let mut tasks = Vec::new();
    let mut diags = Vec::new();
    let mut temps = 0;
    let mut k = usize::from(doc);
    while k < f.body.len() {
        if let Some((ri, r)) = regions.iter().enumerate().find(|(_, r)| (r.start..r.end).contains(&k)) {
            let sch = &report.regions[ri].schedule;
            let mut em = Emitter::new(&r.scop, kb, opts, &t.name.replace('.', "_"), sp.clone());
            em.temps = temps;
            em.task_base = task_base + tasks.len();
            if doc {
                em.skip = r.scop.statements.iter().find(|s| s.original == f.body[0]).map(|s| s.id);
            }
            match em.nodes(&sch.nodes, 0, opt_level) {
                Some(()) => {
                    optimized.push_str(&em.out);
                    temps = em.temps;
                    tasks.extend(em.tasks);
                    report.remaps += em.remaps;
                    report.pfors += em.pfors;
                    diags.extend(em.diags);
                }
                None => {
                    let from = r.start.max(usize::from(doc));
                    optimized.push_str(&emit_stmts(&f.body[from..r.end], &pad(opt_level)));
                }
            }
            k = r.end.max(k + 1);
        } else {
            optimized.push_str(&emit_stmts(&f.body[k..k + 1], &pad(opt_level)));
            k += 1;
        }
        if k == last_end {
            for (x, r) in lists.iter().filter(|(x, _)| written.contains(x)) {
                for l in guard::list_writeback(x, *r, opt_level) {
                    optimized.push_str(&l);
                    optimized.push('\n');
                }
            }
        }
    }
    if report.remaps + report.pfors == 0 {
        return unchanged(report);
    }
    report.optimized = true;

    // Header line of the function, then the guard tree.
    let mut head = String::new();
    let mut bare = f.clone();
    bare.body.clear();
    emit_function(&bare, &pad(indent), &mut head);
    let mut text: Vec<String> = head.lines().map(str::to_string).collect();
    text.pop();
    let rest = &f.body[usize::from(doc)..];
    if doc {
        text.extend(emit_stmts(&f.body[..1], &pad(body_level)).lines().map(str::to_string));
    }
    let original = |level: usize| -> Vec<String> { emit_stmts(rest, &pad(level)).lines().map(str::to_string).collect() };
    let mut types = type_checks(f);
    if types.is_empty() {
        types.push("True".into());
    }
    text.push(format!("{}if {}:", pad(body_level), types.join(" and ")));
    for (x, _) in &lists {
        text.extend(guard::list_conversion(x, body_level + 1));
    }
    if !ranks.is_empty() {
        text.push(format!("{}if {}:", pad(body_level + 1), ranks.join(" and ")));
    }
    text.extend(optimized.lines().map(str::to_string));
    if !ranks.is_empty() {
        text.push(format!("{}else:", pad(body_level + 1)));
        text.extend(original(body_level + 2));
    }
    text.push(format!("{}else:", pad(body_level)));
    text.extend(original(body_level + 1));
    FnOut {
        text: Some(text.join("\n")),
        tasks,
        diags,
        report,
    }
}

fn as_item(text: &str) -> Item {
    let lines: Vec<String> = text.lines().map(str::to_string).collect();
    Item::Opaque(RawText {
        verbatim: vec![true; lines.len()],
        lines,
    })
}

struct Walk<'a> {
    types: &'a [FunctionTypes],
    next: usize,
    kb: &'a KnowledgeBase,
    opts: &'a Options,
    tasks: Vec<String>,
    diags: Vec<Diagnostic>,
    reports: Vec<FunctionReport>,
}

impl Walk<'_> {
    fn items(&mut self, items: &mut [Item], indent: usize) {
        for item in items {
            match item {
                Item::Function(f) => {
                    let Some(t) = self.types.get(self.next) else { return };
                    self.next += 1;
                    let out = compile_function(f, t, self.kb, self.opts, indent, self.tasks.len());
                    if let Some(text) = &out.text {
                        *item = as_item(text);
                    }
                    self.tasks.extend(out.tasks);
                    self.diags.extend(out.diags);
                    self.reports.push(out.report);
                }
                Item::Class(c) => self.items(&mut c.body, indent + 1),
                Item::Opaque(_) => {}
            }
        }
    }
}

/// Rewrites every fully annotated kernel of `prog`; `types` is in the
/// order produced by type inference.
pub fn generate(prog: &Program, types: &[FunctionTypes], kb: &KnowledgeBase, opts: &Options) -> Generated {
    let mut program = prog.clone();
    let mut w = Walk {
        types,
        next: 0,
        kb,
        opts,
        tasks: Vec::new(),
        diags: Vec::new(),
        reports: Vec::new(),
    };
    let mut items = Vec::new();
    for mut item in program.items.drain(..) {
        let before = w.tasks.len();
        w.items(std::slice::from_mut(&mut item), 0);
        items.extend(w.tasks[before..].iter().map(|t| as_item(t)));
        items.push(item);
    }
    program.items = items;
    if w.reports.iter().any(|r| r.optimized) {
        // After the leading imports and globals of the file.
        let at = prog.items.iter().take_while(|i| matches!(i, Item::Opaque(_))).count();
        let present: BTreeSet<&str> = program
            .items
            .iter()
            .filter_map(|i| match i {
                Item::Opaque(t) => Some(t.lines.iter().map(|l| l.as_str())),
                _ => None,
            })
            .flatten()
            .collect();
        // Imports the file already has at top level are not repeated.
        let mut h = header(opts.enable_gpu);
        for imp in ["import numpy as np", "import amphc_rt"] {
            if present.contains(imp) {
                h.retain(|l| l != imp);
            }
        }
        program.items.insert(at, as_item(&h.join("\n")));
    }
    Generated {
        program,
        diagnostics: w.diags,
        functions: w.reports,
    }
}
