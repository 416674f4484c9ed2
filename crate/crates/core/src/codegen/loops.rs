//! Explicit loop nests, used whenever a statement is not remapped.

use super::lower::Emitter;
use super::remap::bounds_of;
use crate::frontend::emit_stmts;
use crate::polyset::{AffineExpr, AffineSet, Constraint, Emptiness};
use crate::scop::ScopStatement;

pub fn pad(indent: usize) -> String {
    "    ".repeat(indent)
}

fn implied(s: &ScopStatement, by: &[Constraint], c: &Constraint) -> bool {
    c.negate().into_iter().all(|n| {
        let mut cs = by.to_vec();
        cs.push(n);
        AffineSet::from_constraints(s.domain.space.clone(), s.domain.params.clone(), cs).is_empty() == Emptiness::Empty
    })
}

impl Emitter<'_> {
    /// Bounds of dimension `d` as a loop: the source loop's for explicit
    /// dimensions, the chunk in task mode, the projection otherwise.
    pub fn dim_bounds(&self, s: &ScopStatement, d: usize) -> Option<(AffineExpr, AffineExpr)> {
        if self.chunk && d == 0 {
            return Some((AffineExpr::var("__lo"), AffineExpr::var("__hi")));
        }
        if d < s.explicit {
            return s.bounds.get(d).cloned();
        }
        let keep: Vec<String> = s.iters()[..=d].to_vec();
        let proj = s.domain.project_onto(&keep);
        let [cons] = &proj.disjuncts[..] else { return None };
        let outer = &s.iters()[..d];
        bounds_of(cons, &s.iters()[d], &|v| outer.iter().any(|o| o == v) || !s.iters().iter().any(|i| i == v))
    }

    /// Opens `for` loops over dimensions `from..to` of `s`; returns the new
    /// indentation.
    pub fn open_loops(&mut self, s: &ScopStatement, from: usize, to: usize, mut indent: usize) -> Option<usize> {
        for d in from..to {
            if d >= s.explicit {
                return None;
            }
            let (lo, hi) = self.dim_bounds(s, d)?;
            let line = format!("{}for {} in range({}, {}):", pad(indent), s.names[d], self.sp.affine(&lo), self.sp.affine(&hi));
            self.line(line);
            self.sp.iters.insert(s.iters()[d].clone(), s.names[d].clone());
            indent += 1;
        }
        Some(indent)
    }

    /// The statement as written, inside loops over `covered..explicit` and
    /// a guard for domain constraints the loops do not imply.
    pub fn stmt_loops(&mut self, s: &ScopStatement, covered: usize, indent: usize) -> Option<()> {
        if covered > s.explicit {
            return None;
        }
        let stmt = self.sp.stmt(&s.original)?;
        let mut indent = self.open_loops(s, covered, s.explicit, indent)?;
        let implicit = &s.iters()[s.explicit..];
        let mut by = Vec::new();
        for d in 0..s.explicit {
            let (lo, hi) = s.bounds.get(d)?;
            let v = AffineExpr::var(s.iters()[d].as_str());
            by.push(Constraint::le(lo, &v));
            by.push(Constraint::lt(&v, hi));
        }
        let mut alts = Vec::new();
        for dj in &s.domain.disjuncts {
            let mut conds = Vec::new();
            for c in dj {
                let on_chunk = self.chunk && c.expr.symbols().all(|v| v == s.iters()[0] || !s.iters().iter().any(|i| i == v));
                if c.expr.symbols().any(|v| implicit.iter().any(|i| i == v)) || on_chunk || implied(s, &by, c) {
                    continue;
                }
                conds.push(self.sp.condition(c));
            }
            if conds.is_empty() {
                alts.clear();
                break;
            }
            alts.push(conds.join(" and "));
        }
        if !alts.is_empty() {
            let cond = if alts.len() == 1 {
                alts.remove(0)
            } else {
                alts.iter().map(|a| format!("({a})")).collect::<Vec<_>>().join(" or ")
            };
            self.line(format!("{}if {cond}:", pad(indent)));
            indent += 1;
        }
        self.out.push_str(&emit_stmts(&[stmt], &pad(indent)));
        Some(())
    }
}
