//! Extended static control parts: explicit loops become domains,
//! library calls contribute implicit dimensions, and anything else is a
//! black box with whole-array accesses.

mod effects;
mod extract;
mod lower;

use std::fmt::Write;

pub use effects::{live_reads, names_read, stmt_effects, Effects};
pub use extract::{exits, extract_function, extract_scop, region_split, Region};

use crate::frontend::ast::Stmt;
use crate::frontend::emit_stmts;
use crate::polyset::{AffineExpr, AffineSet};
use crate::sem::{Local, Sem};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScopKind {
    Compute,
    Library,
    BlackBox,
}

impl ScopKind {
    pub fn name(self) -> &'static str {
        match self {
            ScopKind::Compute => "compute",
            ScopKind::Library => "library",
            ScopKind::BlackBox => "black-box",
        }
    }
}

/// One array access. `index` is over the statement's dimensions plus
/// `locals`; a whole-array access leaves every element unconstrained.
#[derive(Clone, Debug, PartialEq)]
pub struct Access {
    pub array: String,
    pub index: Vec<AffineExpr>,
    pub locals: Vec<Local>,
    pub whole: bool,
}

impl Access {
    pub fn element(array: impl Into<String>, index: Vec<AffineExpr>, locals: Vec<Local>) -> Self {
        Access {
            array: array.into(),
            index,
            locals,
            whole: false,
        }
    }

    pub fn whole(array: impl Into<String>) -> Self {
        Access {
            array: array.into(),
            index: Vec::new(),
            locals: Vec::new(),
            whole: true,
        }
    }

    pub fn render(&self) -> String {
        if self.whole {
            return format!("{}[*]", self.array);
        }
        let mut s = self.array.clone();
        if !self.index.is_empty() {
            let ix: Vec<String> = self.index.iter().map(|e| e.to_string()).collect();
            s = format!("{s}[{}]", ix.join(", "));
        }
        for l in &self.locals {
            let _ = write!(s, " ({} in {}..{})", l.var, l.lo, l.hi);
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct ScopStatement {
    pub id: usize,
    pub kind: ScopKind,
    /// Space is `i0, i1, ...`; explicit loop dimensions come first.
    pub domain: AffineSet,
    /// Source names of explicit dimensions, generated names for implicit
    /// ones.
    pub names: Vec<String>,
    pub explicit: usize,
    /// Identity of the source loop behind each explicit dimension.
    pub loops: Vec<usize>,
    /// `lo <= i_d < hi` of each explicit dimension, as written in the loop.
    pub bounds: Vec<(AffineExpr, AffineExpr)>,
    pub writes: Vec<Access>,
    pub reads: Vec<Access>,
    /// Value stored by the (single) write, for compute and library
    /// statements.
    pub sem: Option<Sem>,
    /// `+=`-style accumulation over a dimension missing from the write.
    pub reduction: bool,
    /// Source statement, with original text.
    pub original: Stmt,
    /// Source position of the statement inside each enclosing block,
    /// outermost first (the 2d+1 schedule's constant parts).
    pub beta: Vec<usize>,
}

impl ScopStatement {
    pub fn name(&self) -> String {
        format!("S{}", self.id)
    }

    pub fn dims(&self) -> usize {
        self.domain.space.len()
    }

    pub fn iters(&self) -> &[String] {
        &self.domain.space
    }

    /// Original schedule `[b0, i0, b1, i1, ..., bd]`; implicit dimensions
    /// get constant 0 separators.
    pub fn original_schedule(&self) -> Vec<AffineExpr> {
        let mut out = Vec::new();
        for d in 0..self.dims() {
            out.push(AffineExpr::constant(self.beta.get(d).copied().unwrap_or(0) as i64));
            out.push(AffineExpr::var(self.domain.space[d].as_str()));
        }
        out.push(AffineExpr::constant(self.beta.get(self.dims()).copied().unwrap_or(0) as i64));
        out
    }
}

#[derive(Clone, Debug)]
pub struct Scop {
    pub function: String,
    pub params: Vec<String>,
    pub statements: Vec<ScopStatement>,
}

impl Scop {
    pub fn statement(&self, id: usize) -> &ScopStatement {
        &self.statements[id]
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scop {}", self.function);
        let _ = writeln!(out, "  params: [{}]", self.params.join(", "));
        for s in &self.statements {
            let _ = writeln!(out, "  {} {}", s.name(), s.kind.name());
            let _ = writeln!(out, "    domain: {}", s.domain.render(&s.name()));
            let w: Vec<String> = s.writes.iter().map(Access::render).collect();
            let r: Vec<String> = s.reads.iter().map(Access::render).collect();
            let _ = writeln!(out, "    writes: {}", w.join(", "));
            let _ = writeln!(out, "    reads: {}", r.join(", "));
            if let Some(sem) = &s.sem {
                let _ = writeln!(out, "    sem: {sem}{}", if s.reduction { " [reduction]" } else { "" });
            } else {
                let text = emit_stmts(std::slice::from_ref(&s.original), "");
                let first = text.lines().next().unwrap_or("");
                let _ = writeln!(out, "    text: {first}");
            }
        }
        out
    }
}
