//! Dataflow templates: `R[i0, i1] := sum(mult(A1[i0, :], A2[:, i1]))`.
//!
//! `R` is the result, `Ak` the k-th argument (1-based), `i*` the entry's
//! domain iterators and `:` a whole dimension consumed by the enclosing
//! `sum` (reduction) or row function such as `fft`.

use std::collections::BTreeSet;

use crate::frontend::affine::{to_affine, AffineEnv};
use crate::frontend::ast::{Expr, ExprKind, Index};
use crate::frontend::parse_expr;
use crate::polyset::AffineExpr;
use crate::sem::{Sem, SemOp};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TIdx {
    Aff(AffineExpr),
    Full,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tmpl {
    /// `Ak[...]`, or bare `Ak` for a scalar argument.
    Role { role: usize, index: Option<Vec<TIdx>> },
    Apply { func: String, args: Vec<Tmpl> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataflow {
    pub lhs: Vec<TIdx>,
    pub rhs: Tmpl,
}

/// Supplies argument elements and extents while a template is evaluated.
pub trait ArgSource {
    fn elem(&mut self, role: usize, idx: &[AffineExpr]) -> Result<Sem, String>;
    fn extent(&mut self, role: usize, dim: usize) -> Result<AffineExpr, String>;
    fn fresh(&mut self, prefix: &str) -> String;
}

fn index_list(indices: &[Index], env: &AffineEnv) -> Result<Vec<TIdx>, String> {
    indices
        .iter()
        .map(|ix| match ix {
            Index::Slice { lower: None, upper: None } => Ok(TIdx::Full),
            Index::Expr(e) => to_affine(e, env).map(TIdx::Aff).ok_or_else(|| "index is not affine".to_string()),
            Index::Slice { .. } => Err("only `:` slices are allowed in templates".into()),
        })
        .collect()
}

fn role_of(name: &str) -> Option<usize> {
    name.strip_prefix('A')?.parse().ok().filter(|k| *k >= 1)
}

impl Dataflow {
    pub fn parse(text: &str) -> Result<Dataflow, String> {
        let (l, r) = text.split_once(":=").ok_or("missing `:=`")?;
        let lhs = parse_expr(l.trim()).ok_or("unparsable result side")?;
        let rhs = parse_expr(r.trim()).ok_or("unparsable template body")?;
        // Any name may appear as an index symbol; unknown ones are caught
        // by validation against the domain.
        let mut names = BTreeSet::new();
        for e in [&lhs, &rhs] {
            e.walk(&mut |x| {
                if let ExprKind::Name(n) = &x.kind {
                    names.insert(n.clone());
                }
            });
        }
        let env = AffineEnv {
            iters: names.into_iter().filter(|n| role_of(n).is_none() && n != "R").collect(),
            params: BTreeSet::new(),
        };
        let lhs = match &lhs.kind {
            ExprKind::Name(n) if n == "R" => Vec::new(),
            ExprKind::Subscript { base, indices } if matches!(&base.kind, ExprKind::Name(n) if n == "R") => {
                index_list(indices, &env)?
            }
            _ => return Err("result side must be `R` or `R[...]`".into()),
        };
        Ok(Dataflow {
            lhs,
            rhs: Self::body(&rhs, &env)?,
        })
    }

    fn body(e: &Expr, env: &AffineEnv) -> Result<Tmpl, String> {
        match &e.kind {
            ExprKind::Name(n) => role_of(n)
                .map(|role| Tmpl::Role { role, index: None })
                .ok_or_else(|| format!("unknown name `{n}`")),
            ExprKind::Subscript { base, indices } => {
                let role = base.dotted().as_deref().and_then(role_of).ok_or("subscript of a non-argument")?;
                Ok(Tmpl::Role {
                    role,
                    index: Some(index_list(indices, env)?),
                })
            }
            ExprKind::Call { func, args, kwargs } if kwargs.is_empty() => {
                let func = func.dotted().ok_or("bad function")?;
                let args = args.iter().map(|a| Self::body(a, env)).collect::<Result<_, _>>()?;
                Ok(Tmpl::Apply { func, args })
            }
            _ => Err("unsupported template construct".into()),
        }
    }

    /// All iterator symbols used on either side.
    pub fn iterators(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut add = |ix: &[TIdx]| {
            for t in ix {
                if let TIdx::Aff(a) = t {
                    out.extend(a.symbols().map(str::to_string));
                }
            }
        };
        add(&self.lhs);
        fn walk(t: &Tmpl, add: &mut dyn FnMut(&[TIdx])) {
            match t {
                Tmpl::Role { index: Some(ix), .. } => add(ix),
                Tmpl::Role { .. } => {}
                Tmpl::Apply { args, .. } => args.iter().for_each(|a| walk(a, add)),
            }
        }
        walk(&self.rhs, &mut add);
        out
    }

    pub fn roles(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        fn walk(t: &Tmpl, out: &mut BTreeSet<usize>) {
            match t {
                Tmpl::Role { role, .. } => {
                    out.insert(*role);
                }
                Tmpl::Apply { args, .. } => args.iter().for_each(|a| walk(a, out)),
            }
        }
        walk(&self.rhs, &mut out);
        out
    }

    pub fn has_reduction(&self) -> bool {
        fn walk(t: &Tmpl) -> bool {
            match t {
                Tmpl::Apply { func, args } => func == "sum" || args.iter().any(walk),
                _ => false,
            }
        }
        walk(&self.rhs)
    }

    pub fn has_full_lhs(&self) -> bool {
        self.lhs.contains(&TIdx::Full)
    }

    /// Evaluates the template at result element `idx`.
    pub fn eval(&self, idx: &[AffineExpr], src: &mut dyn ArgSource) -> Result<Sem, String> {
        if idx.len() != self.lhs.len() {
            return Err(format!("template expects {} indices, got {}", self.lhs.len(), idx.len()));
        }
        let mut binds: Vec<(String, AffineExpr)> = Vec::new();
        let mut row_pos = None;
        for (t, e) in self.lhs.iter().zip(idx) {
            match t {
                TIdx::Aff(a) => {
                    let mut syms = a.symbols();
                    let (Some(v), None) = (syms.next(), syms.next()) else {
                        return Err("result indices must be plain iterators".into());
                    };
                    if a.coeff(v) != 1 || a.constant_term() != 0 {
                        return Err("result indices must be plain iterators".into());
                    }
                    binds.push((v.to_string(), e.clone()));
                }
                TIdx::Full => row_pos = Some(e.clone()),
            }
        }
        let ctx = EvalCtx { binds, row_pos };
        ctx.eval(&self.rhs, None, src)
    }

    /// Extent of the whole dimension consumed inside `t`, as (role, dim).
    pub fn full_dim(t: &Tmpl) -> Option<(usize, usize)> {
        match t {
            Tmpl::Role { role, index: Some(ix) } => ix.iter().position(|x| *x == TIdx::Full).map(|d| (*role, d)),
            Tmpl::Role { .. } => None,
            Tmpl::Apply { args, .. } => args.iter().find_map(Self::full_dim),
        }
    }
}

struct EvalCtx {
    binds: Vec<(String, AffineExpr)>,
    row_pos: Option<AffineExpr>,
}

impl EvalCtx {
    fn bind(&self, a: &AffineExpr) -> AffineExpr {
        // Simultaneous substitution, so template iterators may share names
        // with the statement's own iterators.
        let mut out = AffineExpr::constant(a.constant_term());
        for (s, c) in a.terms() {
            let v = self
                .binds
                .iter()
                .find(|(n, _)| n == s)
                .map(|(_, e)| e.clone())
                .unwrap_or_else(|| AffineExpr::var(s));
            out = out.add(&v.scale(c));
        }
        out
    }

    fn eval(&self, t: &Tmpl, full: Option<&AffineExpr>, src: &mut dyn ArgSource) -> Result<Sem, String> {
        match t {
            Tmpl::Role { role, index: None } => src.elem(*role, &[]),
            Tmpl::Role { role, index: Some(ix) } => {
                let mut idx = Vec::new();
                for x in ix {
                    idx.push(match x {
                        TIdx::Aff(a) => self.bind(a),
                        TIdx::Full => full.cloned().ok_or("`:` outside a reduction or row function")?,
                    });
                }
                src.elem(*role, &idx)
            }
            Tmpl::Apply { func, args } => {
                if let Some(op) = SemOp::from_name(func) {
                    let args = args.iter().map(|a| self.eval(a, full, src)).collect::<Result<Vec<_>, _>>()?;
                    return Ok(Sem::Op { op, args });
                }
                let [arg] = args.as_slice() else {
                    return Err(format!("`{func}` takes one argument"));
                };
                let (role, dim) = Dataflow::full_dim(arg).ok_or_else(|| format!("`{func}` needs a `:` dimension"))?;
                let hi = src.extent(role, dim)?;
                if func == "sum" {
                    let var = src.fresh("k");
                    let body = self.eval(arg, Some(&AffineExpr::var(var.clone())), src)?;
                    Ok(Sem::Reduce {
                        var,
                        lo: AffineExpr::zero(),
                        hi,
                        body: Box::new(body),
                    })
                } else {
                    let pos = self.row_pos.clone().ok_or_else(|| format!("`{func}` result must be a whole row"))?;
                    let var = src.fresh("r");
                    let body = self.eval(arg, Some(&AffineExpr::var(var.clone())), src)?;
                    Ok(Sem::Row {
                        func: func.clone(),
                        var,
                        lo: AffineExpr::zero(),
                        hi,
                        pos,
                        body: Box::new(body),
                    })
                }
            }
        }
    }
}
