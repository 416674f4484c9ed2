//! Dependence analysis and schedule construction.
//!
//! Policies are registered as trait objects; the default runs a coarse
//! pass that fuses consecutive statements into parallel task bands and a
//! fine pass that distributes loops around strongly connected components.

mod deps;
mod policy;

use std::collections::BTreeSet;
use std::fmt::Write;

pub use deps::{access_pairs, common_loops, compute_deps, conflict_set, parallel_at, DepKind, Dependence};
pub use policy::{intra_schedule, original_schedule, violations, IntraPolicy, SequentialPolicy, TwoLevelPolicy};

use crate::scop::{Scop, ScopStatement};

/// A parallel task band over dimension 0 of its members.
#[derive(Clone, Debug, PartialEq)]
pub struct Pfor {
    pub members: Vec<usize>,
    /// Schedule of one chunk, below dimension 0.
    pub body: Vec<Node>,
    pub output: BTreeSet<String>,
    pub input: BTreeSet<String>,
    pub transfer: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    /// Loop over dimension `depth` of every statement below.
    Loop { depth: usize, parallel: bool, body: Vec<Node> },
    /// A statement whose dimensions from the current nesting depth on run
    /// as its own nest.
    Stmt(usize),
    Pfor(Pfor),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub policy: String,
    pub nodes: Vec<Node>,
}

impl Schedule {
    pub fn pfors(&self) -> Vec<&Pfor> {
        fn walk<'a>(ns: &'a [Node], out: &mut Vec<&'a Pfor>) {
            for n in ns {
                match n {
                    Node::Loop { body, .. } => walk(body, out),
                    Node::Pfor(p) => out.push(p),
                    Node::Stmt(_) => {}
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.nodes, &mut out);
        out
    }

    pub fn dump(&self, scop: &Scop, deps: &[Dependence]) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "schedule {} (policy {})", scop.function, self.policy);
        dump_nodes(&self.nodes, scop, 1, &mut out);
        let _ = writeln!(out, "  deps:");
        for d in deps {
            let level = d.level.map_or("independent".to_string(), |l| format!("level {l}"));
            let relax = if d.relaxable { " relaxable" } else { "" };
            let _ = writeln!(out, "    S{} -> S{} {} {} {level}{relax}", d.src, d.dst, d.kind.name(), d.array);
        }
        out
    }
}

fn set_str(s: &BTreeSet<String>) -> String {
    format!("{{{}}}", s.iter().cloned().collect::<Vec<_>>().join(", "))
}

fn dump_nodes(ns: &[Node], scop: &Scop, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    for n in ns {
        match n {
            Node::Loop { depth, parallel, body } => {
                let _ = writeln!(out, "{pad}for i{depth}{}", if *parallel { " parallel" } else { "" });
                dump_nodes(body, scop, indent + 1, out);
            }
            Node::Stmt(id) => {
                let s = scop.statement(*id);
                let _ = writeln!(out, "{pad}{} {} {}", s.name(), s.kind.name(), s.domain.render(&s.name()));
            }
            Node::Pfor(p) => {
                let m: Vec<String> = p.members.iter().map(|i| format!("S{i}")).collect();
                let _ = writeln!(
                    out,
                    "{pad}pfor i0 [{}] output={} input={} transfer={}",
                    m.join(", "),
                    set_str(&p.output),
                    set_str(&p.input),
                    if p.transfer { "cupy" } else { "none" }
                );
                dump_nodes(&p.body, scop, indent + 1, out);
            }
        }
    }
}

/// Whether code generation can vectorize a statement over its whole
/// domain (or a chunk of it).
pub type Remappable<'a> = &'a dyn Fn(&ScopStatement) -> bool;

pub trait SchedulePolicy {
    fn name(&self) -> &'static str;
    fn schedule(&self, scop: &Scop, deps: &[Dependence], remappable: Remappable) -> Schedule;
}

/// Registered policies; the first is the default.
pub fn policies() -> Vec<Box<dyn SchedulePolicy>> {
    vec![Box::new(TwoLevelPolicy), Box::new(IntraPolicy), Box::new(SequentialPolicy)]
}

pub fn policy(name: &str) -> Option<Box<dyn SchedulePolicy>> {
    policies().into_iter().find(|p| p.name() == name)
}

#[cfg(test)]
mod tests;
