//! Lowering of one assignment to element-wise semantics.
//!
//! A target with slice dimensions gets one implicit iterator per slice,
//! appended after the explicit loop iterators. The value is evaluated
//! element-wise at the matching position, going through knowledge-base
//! templates for every library call or array operator.

use std::collections::BTreeMap;

use super::{Access, ScopKind};
use crate::frontend::affine::{to_affine, AffineEnv};
use crate::frontend::ast::{BinOp, Expr, ExprKind, Index};
use crate::kb::{resolve_call, ArgSource, KBEntry, KnowledgeBase};
use crate::polyset::{AffineExpr, Constraint};
use crate::sem::{Local, Sem, SemOp};

pub(super) struct Leaf {
    pub kind: ScopKind,
    /// Bounds of the implicit dimensions, in order.
    pub implicit: Vec<Constraint>,
    pub implicit_dims: usize,
    pub write: Access,
    pub reads: Vec<Access>,
    pub sem: Sem,
    pub reduction: bool,
}

pub(super) struct Lowerer<'a> {
    pub env: &'a AffineEnv,
    /// Source iterator name to canonical `i<d>`.
    pub rename: &'a BTreeMap<String, String>,
    pub kb: &'a KnowledgeBase,
    /// Number of explicit dimensions around the statement.
    pub depth: usize,
    fresh: BTreeMap<String, usize>,
    used_kb: bool,
}

enum RootIx {
    Fixed(AffineExpr),
    Free { lo: AffineExpr, hi: AffineExpr },
}

type R<T> = Result<T, String>;

fn sem_op(op: BinOp) -> SemOp {
    match op {
        BinOp::Add => SemOp::Add,
        BinOp::Sub => SemOp::Sub,
        BinOp::Mul => SemOp::Mul,
        BinOp::Div => SemOp::Div,
        BinOp::Pow => SemOp::Pow,
    }
}

fn shape_sym(array: &str, d: usize) -> AffineExpr {
    AffineExpr::var(format!("{array}.shape[{d}]"))
}

impl<'a> Lowerer<'a> {
    pub fn new(env: &'a AffineEnv, rename: &'a BTreeMap<String, String>, kb: &'a KnowledgeBase, depth: usize) -> Self {
        Lowerer {
            env,
            rename,
            kb,
            depth,
            fresh: BTreeMap::new(),
            used_kb: false,
        }
    }

    fn aff(&self, e: &Expr) -> R<AffineExpr> {
        let a = to_affine(e, self.env).ok_or("non-affine index")?;
        let a = a.rename(&|s| self.rename.get(s).cloned().unwrap_or_else(|| s.to_string()));
        // Negative constants wrap around in the source language.
        match a.as_constant() {
            Some(c) if c < 0 => Err("negative constant index".into()),
            _ => Ok(a),
        }
    }

    fn rank(e: &Expr) -> R<usize> {
        e.ty.rank().map(|r| r as usize).ok_or_else(|| "unknown rank".to_string())
    }

    fn next_fresh(&mut self, prefix: &str) -> String {
        let n = self.fresh.entry(prefix.to_string()).or_insert(0);
        *n += 1;
        format!("{prefix}{}", *n - 1)
    }

    fn entry(&self, e: &'a Expr) -> R<(&'a KBEntry, Vec<&'a Expr>)> {
        let site = resolve_call(e).ok_or("not a library operation")?;
        let types: Vec<_> = site.args.iter().map(|a| a.ty).collect();
        let entry = self.kb.lookup_site(&site, &types).ok_or_else(|| format!("no entry for `{}`", site.function_id))?;
        Ok((entry, site.args))
    }

    pub fn shape(&mut self, e: &'a Expr) -> R<Vec<AffineExpr>> {
        let rank = Self::rank(e)?;
        if rank == 0 {
            return Ok(Vec::new());
        }
        match &e.kind {
            ExprKind::Name(n) => Ok((0..rank).map(|d| shape_sym(n, d)).collect()),
            ExprKind::Subscript { base, indices } => {
                let bs = self.shape(base)?;
                if indices.len() > bs.len() {
                    return Err("too many indices".into());
                }
                let mut out = Vec::new();
                for (d, ix) in indices.iter().enumerate() {
                    if let Index::Slice { lower, upper } = ix {
                        let lo = match lower {
                            Some(l) => self.aff(l)?,
                            None => AffineExpr::zero(),
                        };
                        let hi = match upper {
                            Some(u) => self.aff(u)?,
                            None => bs[d].clone(),
                        };
                        out.push(hi.sub(&lo));
                    }
                }
                out.extend(bs[indices.len()..].iter().cloned());
                Ok(out)
            }
            ExprKind::Neg(x) => self.shape(x),
            _ => {
                let (entry, args) = self.entry(e)?;
                let mut src = Args { lw: self, args };
                entry.result_shape(&mut src)
            }
        }
    }

    pub fn elem(&mut self, e: &'a Expr, idx: &[AffineExpr]) -> R<Sem> {
        let rank = Self::rank(e)?;
        if idx.len() != rank {
            return Err(format!("rank {rank} indexed with {}", idx.len()));
        }
        if rank == 0 {
            if let Ok(a) = self.aff(e) {
                return Ok(Sem::Affine(a));
            }
        }
        match &e.kind {
            ExprKind::Float(t) => Ok(Sem::Const(t.clone())),
            ExprKind::Name(n) => Ok(Sem::read(n.clone(), idx.to_vec())),
            ExprKind::Subscript { base, indices } => {
                let brank = Self::rank(base)?;
                if indices.len() > brank {
                    return Err("too many indices".into());
                }
                let mut it = idx.iter();
                let mut bidx = Vec::new();
                for d in 0..brank {
                    let next = |it: &mut std::slice::Iter<AffineExpr>| it.next().cloned().ok_or("index arity");
                    match indices.get(d) {
                        Some(Index::Expr(x)) => bidx.push(self.aff(x)?),
                        Some(Index::Slice { lower, .. }) => {
                            let lo = match lower {
                                Some(l) => self.aff(l)?,
                                None => AffineExpr::zero(),
                            };
                            bidx.push(next(&mut it)?.add(&lo));
                        }
                        None => bidx.push(next(&mut it)?),
                    }
                }
                self.elem(base, &bidx)
            }
            ExprKind::Neg(x) => Ok(Sem::Op {
                op: SemOp::Neg,
                args: vec![self.elem(x, idx)?],
            }),
            ExprKind::BinOp { op, lhs, rhs } if rank == 0 && lhs.ty.is_scalar() && rhs.ty.is_scalar() => Ok(Sem::Op {
                op: sem_op(*op),
                args: vec![self.elem(lhs, &[])?, self.elem(rhs, &[])?],
            }),
            _ => {
                let (entry, args) = self.entry(e)?;
                self.used_kb = true;
                let mut src = Args { lw: self, args };
                entry.flow.eval(idx, &mut src)
            }
        }
    }

    fn view(&mut self, e: &'a Expr) -> R<(String, Vec<RootIx>)> {
        match &e.kind {
            ExprKind::Name(n) if e.ty.is_container() => {
                let r = Self::rank(e)?;
                Ok((
                    n.clone(),
                    (0..r)
                        .map(|d| RootIx::Free {
                            lo: AffineExpr::zero(),
                            hi: shape_sym(n, d),
                        })
                        .collect(),
                ))
            }
            ExprKind::Subscript { base, indices } => {
                let (name, mut entries) = self.view(base)?;
                let mut free = entries
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| matches!(r, RootIx::Free { .. }))
                    .map(|(k, _)| k)
                    .collect::<Vec<_>>()
                    .into_iter();
                for ix in indices {
                    let k = free.next().ok_or("too many indices")?;
                    let RootIx::Free { lo, hi } = &entries[k] else { unreachable!() };
                    entries[k] = match ix {
                        Index::Expr(x) => RootIx::Fixed(lo.add(&self.aff(x)?)),
                        Index::Slice { lower, upper } => {
                            let l = match lower {
                                Some(l) => self.aff(l)?,
                                None => AffineExpr::zero(),
                            };
                            let h = match upper {
                                Some(u) => lo.add(&self.aff(u)?),
                                None => hi.clone(),
                            };
                            RootIx::Free { lo: lo.add(&l), hi: h }
                        }
                    };
                }
                Ok((name, entries))
            }
            _ => Err("unsupported assignment target".into()),
        }
    }

    pub fn assign(&mut self, target: &'a Expr, value: &'a Expr, aug: Option<BinOp>) -> R<Leaf> {
        Self::rank(value)?;
        let (array, entries) = match &target.kind {
            ExprKind::Name(n) => {
                if !target.ty.is_scalar() || !value.ty.is_scalar() {
                    return Err("array rebinding".into());
                }
                if self.env.params.contains(n) || self.env.iters.contains(n) {
                    return Err("assignment to a loop bound symbol".into());
                }
                (n.clone(), Vec::new())
            }
            _ => self.view(target)?,
        };
        let mut write_idx = Vec::new();
        let mut implicit = Vec::new();
        let mut value_idx = Vec::new();
        let mut last_free = None;
        for e in &entries {
            match e {
                RootIx::Fixed(a) => write_idx.push(a.clone()),
                RootIx::Free { lo, hi } => {
                    let it = AffineExpr::var(format!("i{}", self.depth + value_idx.len()));
                    implicit.push(Constraint::le(lo, &it));
                    implicit.push(Constraint::lt(&it, hi));
                    last_free = Some((write_idx.len(), lo.clone()));
                    write_idx.push(it.clone());
                    value_idx.push(it.sub(lo));
                }
            }
        }
        let vrank = Self::rank(value)?;
        let mut sem = if vrank == value_idx.len() {
            self.elem(value, &value_idx)?
        } else if vrank == 0 {
            self.elem(value, &[])?
        } else {
            return Err("value rank differs from target".into());
        };
        let mut implicit_dims = value_idx.len();
        let mut write_locals = Vec::new();
        // A whole-row function on the innermost slice: the row becomes a
        // local of the write and the dimension disappears.
        if let (Sem::Row { pos, hi, .. }, Some((k, lo))) = (&mut sem, &last_free) {
            if implicit_dims > 0 && value_idx.last() == Some(pos) {
                let w = self.next_fresh("w");
                let wv = AffineExpr::var(w.as_str());
                write_locals.push(Local {
                    var: w.clone(),
                    lo: AffineExpr::zero(),
                    hi: hi.clone(),
                });
                *pos = wv.clone();
                write_idx[*k] = lo.add(&wv);
                implicit.truncate(implicit.len() - 2);
                implicit_dims -= 1;
            }
        }
        if let Some(op) = aug {
            sem = Sem::Op {
                op: sem_op(op),
                args: vec![Sem::read(array.clone(), write_idx.clone()), sem],
            };
        }
        let all_dims = self.depth + implicit_dims;
        let covered = |d: usize| write_idx.iter().any(|e| e.mentions(&format!("i{d}")));
        let reduction = matches!(aug, Some(BinOp::Add | BinOp::Mul)) && (0..all_dims).any(|d| !covered(d));
        let reads = sem
            .reads()
            .into_iter()
            .map(|(a, ix, mut locals)| {
                // `+=` on a collapsed row reads the accumulator at `w`.
                for w in &write_locals {
                    if ix.iter().any(|e| e.mentions(&w.var)) && !locals.iter().any(|l| l.var == w.var) {
                        locals.push(w.clone());
                    }
                }
                Access::element(a, ix, locals)
            })
            .collect();
        let kind = if self.used_kb || implicit_dims > 0 || !write_locals.is_empty() {
            ScopKind::Library
        } else {
            ScopKind::Compute
        };
        Ok(Leaf {
            kind,
            implicit,
            implicit_dims,
            write: Access::element(array, write_idx, write_locals),
            reads,
            sem,
            reduction,
        })
    }
}

struct Args<'l, 'a> {
    lw: &'l mut Lowerer<'a>,
    args: Vec<&'a Expr>,
}

impl<'a> ArgSource for Args<'_, 'a> {
    fn elem(&mut self, role: usize, idx: &[AffineExpr]) -> R<Sem> {
        let a = *self.args.get(role - 1).ok_or("missing argument")?;
        self.lw.elem(a, idx)
    }

    fn extent(&mut self, role: usize, dim: usize) -> R<AffineExpr> {
        let a = *self.args.get(role - 1).ok_or("missing argument")?;
        self.lw.shape(a)?.get(dim).cloned().ok_or_else(|| "dimension out of range".into())
    }

    fn fresh(&mut self, prefix: &str) -> String {
        self.lw.next_fresh(prefix)
    }
}
