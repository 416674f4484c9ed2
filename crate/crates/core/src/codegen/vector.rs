//! Vectorization of element-wise semantics over a box of iterators.
//!
//! Every value is a scalar or an array whose axes are named by the
//! iterators they range over. Library calls are chosen by the matchers in
//! `matchers()`: at each node the match covering the most iteration
//! dimensions wins, ties going to the earlier matcher.

use std::collections::BTreeMap;

use super::py::Spelling;
use crate::polyset::AffineExpr;
use crate::sem::{Sem, SemOp};

#[derive(Clone, Debug, PartialEq)]
pub enum V {
    Scalar(String),
    Arr { text: String, dims: Vec<String> },
}

impl V {
    pub fn dims(&self) -> &[String] {
        match self {
            V::Scalar(_) => &[],
            V::Arr { dims, .. } => dims,
        }
    }

    pub fn text(&self) -> &str {
        match self {
            V::Scalar(t) | V::Arr { text: t, .. } => t,
        }
    }
}

/// Parenthesized unless `t` is a name, call, subscript or literal.
pub fn atom(t: &str) -> String {
    let mut depth = 0i32;
    let mut bare = true;
    for (k, c) in t.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ' ' | '+' | '*' | '/' | '<' | '>' | '=' | ',' if depth == 0 => bare = false,
            '-' if depth == 0 && k > 0 => bare = false,
            _ => {}
        }
    }
    if bare && !t.starts_with('-') {
        t.to_string()
    } else {
        format!("({t})")
    }
}

pub struct Vectorizer<'a> {
    pub sp: &'a Spelling,
    /// Range of every axis variable, in canonical axis order.
    pub ranges: Vec<(String, AffineExpr, AffineExpr)>,
    /// Matcher hit counts, for diagnostics.
    pub used: BTreeMap<&'static str, usize>,
}

impl<'a> Vectorizer<'a> {
    pub fn new(sp: &'a Spelling, axes: Vec<(String, AffineExpr, AffineExpr)>) -> Self {
        Vectorizer {
            sp,
            ranges: axes,
            used: BTreeMap::new(),
        }
    }

    fn range(&self, v: &str) -> Option<&(String, AffineExpr, AffineExpr)> {
        self.ranges.iter().find(|r| r.0 == v)
    }

    fn order(&self, v: &str) -> usize {
        self.ranges.iter().position(|r| r.0 == v).unwrap_or(usize::MAX)
    }

    fn axis_vars<'e>(&self, e: &'e AffineExpr) -> Vec<&'e str> {
        e.symbols().filter(|s| self.range(s).is_some()).collect()
    }

    pub fn module(&self) -> &str {
        &self.sp.module
    }

    /// `A[...]` over the axes its index expressions range over.
    pub fn read(&self, array: &str, index: &[AffineExpr]) -> Option<V> {
        let name = self.sp.array(array);
        if index.is_empty() {
            return Some(V::Scalar(name));
        }
        let mut parts = Vec::new();
        let mut dims: Vec<String> = Vec::new();
        for (k, e) in index.iter().enumerate() {
            match self.axis_vars(e)[..] {
                [] => parts.push(self.sp.affine(e)),
                [v] if e.coeff(v) == 1 && !dims.iter().any(|d| d == v) => {
                    let (_, lo, hi) = self.range(v)?;
                    let off = e.sub(&AffineExpr::var(v));
                    let (lo, hi) = (lo.add(&off), hi.add(&off));
                    let full = AffineExpr::var(format!("{array}.shape[{k}]"));
                    parts.push(match (lo.as_constant(), hi == full) {
                        (Some(0), true) => ":".to_string(),
                        _ => format!("{}:{}", self.sp.affine(&lo), self.sp.affine(&hi)),
                    });
                    dims.push(v.to_string());
                }
                _ => return None,
            }
        }
        let text = format!("{name}[{}]", parts.join(", "));
        Some(if dims.is_empty() { V::Scalar(text) } else { V::Arr { text, dims } })
    }

    /// Text of `v` with axes laid out as `want` (a superset of its axes),
    /// inserting new axes where missing.
    pub fn align(&self, v: &V, want: &[String]) -> Option<String> {
        let V::Arr { text, dims } = v else {
            return Some(v.text().to_string());
        };
        let pos: Vec<usize> = dims.iter().map(|d| want.iter().position(|w| w == d)).collect::<Option<_>>()?;
        let mut sorted: Vec<usize> = (0..dims.len()).collect();
        sorted.sort_by_key(|&k| pos[k]);
        let mut t = text.clone();
        if sorted.iter().enumerate().any(|(a, b)| a != *b) {
            t = if dims.len() == 2 {
                format!("{}.T", atom(&t))
            } else {
                let perm: Vec<String> = sorted.iter().map(|k| k.to_string()).collect();
                format!("{}.transpose(({}))", atom(&t), perm.join(", "))
            };
        }
        if dims.len() < want.len() {
            let present: Vec<&String> = sorted.iter().map(|&k| &dims[k]).collect();
            let ix: Vec<&str> = want.iter().map(|w| if present.contains(&w) { ":" } else { "None" }).collect();
            // Leading missing axes broadcast on their own.
            let first = ix.iter().position(|s| *s == ":").unwrap_or(ix.len());
            if ix[first..].contains(&"None") {
                t = format!("{}[{}]", atom(&t), ix[first..].join(", "));
            }
        }
        Some(t)
    }

    pub fn union(&self, vs: &[&V]) -> Vec<String> {
        let mut all: Vec<String> = Vec::new();
        for v in vs {
            for d in v.dims() {
                if !all.contains(d) {
                    all.push(d.clone());
                }
            }
        }
        all.sort_by_key(|d| self.order(d));
        all
    }

    pub fn vectorize(&mut self, s: &Sem) -> Option<V> {
        match s {
            Sem::Const(t) => Some(V::Scalar(t.clone())),
            Sem::Affine(e) => self.axis_vars(e).is_empty().then(|| V::Scalar(self.sp.affine(e))),
            Sem::Read { array, index } => self.read(array, index),
            Sem::Op { args, .. } => {
                let vs = args.iter().map(|a| self.vectorize(a)).collect::<Option<Vec<_>>>()?;
                self.best(&Site { sem: s, args: vs })
            }
            Sem::Reduce { var, lo, hi, body } | Sem::Row { var, lo, hi, body, .. } => {
                if !self.axis_vars(lo).is_empty() || !self.axis_vars(hi).is_empty() {
                    return None;
                }
                self.ranges.push((var.clone(), lo.clone(), hi.clone()));
                let b = self.vectorize(body);
                let out = b.and_then(|b| {
                    let mut args = vec![b];
                    if let Sem::Op { op: SemOp::Mul, args: f } = body.as_ref() {
                        if f.len() == 2 {
                            let fa = self.vectorize(&f[0]);
                            let fb = self.vectorize(&f[1]);
                            args.extend(fa.into_iter().chain(fb));
                        }
                    }
                    self.best(&Site { sem: s, args })
                });
                self.ranges.retain(|r| &r.0 != var);
                out
            }
        }
    }

    fn best(&mut self, site: &Site) -> Option<V> {
        let mut best: Option<(usize, &'static str, V)> = None;
        for m in matchers() {
            if let Some((covered, v)) = m.apply(site, self) {
                if best.as_ref().is_none_or(|b| covered > b.0) {
                    best = Some((covered, m.name(), v));
                }
            }
        }
        let (_, name, v) = best?;
        *self.used.entry(name).or_default() += 1;
        Some(v)
    }
}

/// A semantics node with its vectorized operands: the arguments of an
/// operator, or the body of a reduction or row node followed by the two
/// factors when the body is a product.
pub struct Site<'s> {
    pub sem: &'s Sem,
    pub args: Vec<V>,
}

pub trait Matcher {
    fn name(&self) -> &'static str;
    /// Covered iteration dimensions and the resulting value.
    fn apply(&self, site: &Site, vx: &Vectorizer) -> Option<(usize, V)>;
}

pub fn matchers() -> Vec<Box<dyn Matcher>> {
    vec![Box::new(Dot), Box::new(AxisSum), Box::new(Sum), Box::new(RowFft), Box::new(Elementwise)]
}

struct Dot;
struct AxisSum;
struct Sum;
struct RowFft;
struct Elementwise;

fn reduce_var<'s>(site: &Site<'s>) -> Option<&'s str> {
    match site.sem {
        Sem::Reduce { var, .. } => Some(var),
        _ => None,
    }
}

impl Matcher for Dot {
    fn name(&self) -> &'static str {
        "dot"
    }

    /// `sum_k a[p, k] * b[k, q]` in any axis order, with `p` or `q` absent.
    fn apply(&self, site: &Site, vx: &Vectorizer) -> Option<(usize, V)> {
        let k = reduce_var(site)?.to_string();
        let [_, a, b] = &site.args[..] else { return None };
        let (da, db) = (a.dims(), b.dims());
        if da.len() > 2 || db.len() > 2 || !da.contains(&k) || !db.contains(&k) {
            return None;
        }
        let p: Vec<String> = da.iter().filter(|d| **d != k).cloned().collect();
        let q: Vec<String> = db.iter().filter(|d| **d != k).cloned().collect();
        if p.iter().any(|d| q.contains(d)) {
            return None;
        }
        let mut left = p.clone();
        left.push(k.clone());
        let mut right = vec![k.clone()];
        right.extend(q.iter().cloned());
        let ta = vx.align(a, &left)?;
        let tb = vx.align(b, &right)?;
        let text = format!("{}.dot({ta}, {tb})", vx.module());
        let mut dims = p;
        dims.extend(q);
        let covered = dims.len() + 1;
        Some((covered, if dims.is_empty() { V::Scalar(text) } else { V::Arr { text, dims } }))
    }
}

impl Matcher for AxisSum {
    fn name(&self) -> &'static str {
        "axis-sum"
    }

    fn apply(&self, site: &Site, vx: &Vectorizer) -> Option<(usize, V)> {
        let k = reduce_var(site)?;
        let body = site.args.first()?;
        let dims = body.dims();
        let axis = dims.iter().position(|d| d == k)?;
        if dims.len() < 2 {
            return None;
        }
        let rest: Vec<String> = dims.iter().filter(|d| *d != k).cloned().collect();
        let _ = vx;
        Some((
            dims.len(),
            V::Arr {
                text: format!("{}.sum(axis={axis})", atom(body.text())),
                dims: rest,
            },
        ))
    }
}

impl Matcher for Sum {
    fn name(&self) -> &'static str {
        "sum"
    }

    fn apply(&self, site: &Site, vx: &Vectorizer) -> Option<(usize, V)> {
        let k = reduce_var(site)?;
        let body = site.args.first()?;
        (body.dims() == [k.to_string()]).then(|| (1, V::Scalar(format!("{}.sum({})", vx.module(), body.text()))))
    }
}

impl Matcher for RowFft {
    fn name(&self) -> &'static str {
        "row-fft"
    }

    /// Element `pos` of `fft(row)`, where `pos` is an axis spanning the
    /// whole row.
    fn apply(&self, site: &Site, vx: &Vectorizer) -> Option<(usize, V)> {
        let Sem::Row { func, var, lo, hi, pos, .. } = site.sem else { return None };
        if func != "fft" {
            return None;
        }
        let body = site.args.first()?;
        if !body.dims().contains(var) {
            return None;
        }
        let [u] = pos.symbols().collect::<Vec<_>>()[..] else { return None };
        let (_, ulo, uhi) = vx.range(u)?;
        let extent = hi.sub(lo);
        if *pos != AffineExpr::var(u) || ulo.as_constant() != Some(0) || *uhi != extent {
            return None;
        }
        let mut order: Vec<String> = body.dims().iter().filter(|d| *d != var).cloned().collect();
        order.push(var.clone());
        let t = vx.align(body, &order)?;
        let mut dims = order;
        *dims.last_mut()? = u.to_string();
        Some((dims.len(), V::Arr {
            text: format!("{}.fft.fft({t}, axis=-1)", vx.module()),
            dims,
        }))
    }
}

impl Matcher for Elementwise {
    fn name(&self) -> &'static str {
        "elementwise"
    }

    fn apply(&self, site: &Site, vx: &Vectorizer) -> Option<(usize, V)> {
        let Sem::Op { op, .. } = site.sem else { return None };
        let refs: Vec<&V> = site.args.iter().collect();
        let dims = vx.union(&refs);
        let ts = site.args.iter().map(|a| vx.align(a, &dims).map(|t| atom(&t))).collect::<Option<Vec<_>>>()?;
        let text = match (op, &ts[..]) {
            (SemOp::Neg, [a]) => format!("-{a}"),
            (_, [a, b]) => format!("{a} {} {b}", op.symbol()),
            _ => return None,
        };
        Some((dims.len(), if dims.is_empty() { V::Scalar(text) } else { V::Arr { text, dims } }))
    }
}
