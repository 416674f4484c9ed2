//! Library knowledge base: type rules and element-wise dataflow templates
//! that turn array-library calls into implicit loop nests.
//!
//! The on-disk format is JSON; the README documents the schema.

mod template;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use template::{ArgSource, Dataflow, TIdx, Tmpl};

use crate::frontend::affine::{to_affine, AffineEnv};
use crate::frontend::ast::{BinOp, Expr, ExprKind};
use crate::frontend::parse_expr;
use crate::polyset::{AffineExpr, AffineSet, Constraint};
use crate::sem::{Local, Sem};
use crate::typeinf::{Elem, SemType};

pub const DEFAULT_KB: &str = include_str!("default_kb.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElemPattern {
    Num,
    Any,
    Int,
    Float,
    Bool,
}

impl ElemPattern {
    pub fn matches(self, e: Elem) -> bool {
        match self {
            ElemPattern::Any => true,
            // Containers of unknown element kind are assumed numeric.
            ElemPattern::Num => true,
            ElemPattern::Int => e == Elem::Int,
            ElemPattern::Float => e == Elem::Float,
            ElemPattern::Bool => e == Elem::Bool,
        }
    }

    fn overlaps(self, other: ElemPattern) -> bool {
        [Elem::Bool, Elem::Int, Elem::Float, Elem::Complex, Elem::Unknown]
            .into_iter()
            .any(|e| self.matches(e) && other.matches(e))
    }
}

fn default_elem() -> ElemPattern {
    ElemPattern::Num
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgPattern {
    pub rank: u32,
    #[serde(default = "default_elem")]
    pub elem: ElemPattern,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResultElem {
    /// Standard numeric promotion over all arguments.
    Promote,
    /// Element kind of the first argument.
    First,
    Int,
    Float,
    Bool,
    Complex,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultRule {
    pub rank: u32,
    pub elem: ResultElem,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainDim {
    pub iter: String,
    /// Affine in `Ak.shape[d]` symbols.
    pub extent: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComputeKind {
    Elementwise,
    Reduction,
    OpaquePerRow,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducedDim {
    /// 1-based argument role.
    pub arg: usize,
    pub dim: usize,
}

/// One entry as written in the JSON file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryDef {
    pub function_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub args: Vec<ArgPattern>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub keywords: BTreeMap<String, i64>,
    pub result: ResultRule,
    pub domain: Vec<DomainDim>,
    pub dataflow: String,
    pub compute_kind: ComputeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduced: Option<ReducedDim>,
    #[serde(default = "default_true")]
    pub backend_transferable: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum KbFile {
    Object { entries: Vec<EntryDef> },
    List(Vec<EntryDef>),
}

/// A validated entry.
#[derive(Clone, Debug, PartialEq)]
pub struct KBEntry {
    pub def: EntryDef,
    pub flow: Dataflow,
    pub extents: Vec<AffineExpr>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct KnowledgeBase {
    pub entries: Vec<KBEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KbError {
    #[error("cannot read knowledge base: {0}")]
    Io(String),
    #[error("malformed knowledge base JSON: {msg}")]
    Json { line: usize, col: usize, msg: String },
    #[error("entry {index} (`{name}`): {rule}")]
    Invalid { index: usize, name: String, rule: String },
    #[error("entries {first} and {second} (`{name}`) have overlapping signatures")]
    Overlap { first: usize, second: usize, name: String },
}

impl KbError {
    /// Source position for diagnostics (1:1 when not tied to JSON text).
    pub fn position(&self) -> (usize, usize) {
        match self {
            KbError::Json { line, col, .. } => (*line, *col),
            _ => (1, 1),
        }
    }
}

pub fn load_kb(path: &Path) -> Result<KnowledgeBase, KbError> {
    let text = std::fs::read_to_string(path).map_err(|e| KbError::Io(format!("{}: {e}", path.display())))?;
    parse_kb(&text)
}

pub fn default_kb() -> KnowledgeBase {
    parse_kb(DEFAULT_KB).expect("embedded knowledge base is valid")
}

pub fn parse_kb(text: &str) -> Result<KnowledgeBase, KbError> {
    if text.trim().is_empty() {
        return Ok(KnowledgeBase::default());
    }
    let file: KbFile = serde_json::from_str(text).map_err(|e| KbError::Json {
        line: e.line(),
        col: e.column(),
        msg: e.to_string(),
    })?;
    let defs = match file {
        KbFile::Object { entries } | KbFile::List(entries) => entries,
    };
    let mut entries = Vec::new();
    for (index, def) in defs.into_iter().enumerate() {
        let name = def.label.clone().unwrap_or_else(|| def.function_id.clone());
        let invalid = |rule: String| KbError::Invalid {
            index,
            name: name.clone(),
            rule,
        };
        entries.push(validate(def).map_err(invalid)?);
    }
    for (a, ea) in entries.iter().enumerate() {
        for (b, eb) in entries.iter().enumerate().skip(a + 1) {
            if overlapping(&ea.def, &eb.def) {
                return Err(KbError::Overlap {
                    first: a,
                    second: b,
                    name: ea.def.function_id.clone(),
                });
            }
        }
    }
    Ok(KnowledgeBase { entries })
}

fn overlapping(a: &EntryDef, b: &EntryDef) -> bool {
    a.function_id == b.function_id
        && a.keywords == b.keywords
        && a.args.len() == b.args.len()
        && a.args.iter().zip(&b.args).all(|(x, y)| x.rank == y.rank && x.elem.overlaps(y.elem))
}

fn shape_symbol(s: &str) -> Option<(usize, usize)> {
    let rest = s.strip_prefix('A')?;
    let (role, dim) = rest.split_once(".shape[")?;
    Some((role.parse().ok()?, dim.strip_suffix(']')?.parse().ok()?))
}

fn validate(def: EntryDef) -> Result<KBEntry, String> {
    if def.function_id.is_empty() {
        return Err("empty function_id".into());
    }
    let flow = Dataflow::parse(&def.dataflow).map_err(|e| format!("bad dataflow template: {e}"))?;
    let iters: Vec<&str> = def.domain.iter().map(|d| d.iter.as_str()).collect();
    if iters.iter().collect::<BTreeSet<_>>().len() != iters.len() {
        return Err("duplicate domain iterator".into());
    }
    for it in flow.iterators() {
        if !iters.contains(&it.as_str()) {
            return Err(format!("template iterator `{it}` is not in the domain"));
        }
    }
    let roles = flow.roles();
    let expected: BTreeSet<usize> = (1..=def.args.len()).collect();
    if roles != expected {
        return Err(format!("template uses roles {roles:?} but the entry has {} arguments", def.args.len()));
    }
    if flow.lhs.len() != def.result.rank as usize {
        return Err("result index count differs from result rank".into());
    }
    for it in &iters {
        let bound = flow.lhs.iter().any(|t| matches!(t, TIdx::Aff(a) if a == &AffineExpr::var(*it)));
        if !bound {
            return Err(format!("domain iterator `{it}` is not a result index"));
        }
    }
    let mut extents = Vec::new();
    for d in &def.domain {
        let e = parse_expr(&d.extent)
            .and_then(|e| to_affine(&e, &AffineEnv::default()))
            .ok_or_else(|| format!("extent `{}` is not affine in argument shapes", d.extent))?;
        for s in e.symbols() {
            let (role, dim) = shape_symbol(s).ok_or_else(|| format!("extent symbol `{s}` is not an argument shape"))?;
            let ok = role >= 1 && role <= def.args.len() && dim < def.args[role - 1].rank as usize;
            if !ok {
                return Err(format!("extent symbol `{s}` is out of range"));
            }
        }
        extents.push(e);
    }
    match def.compute_kind {
        ComputeKind::Reduction => {
            let Some(r) = &def.reduced else {
                return Err("reduction entries must name the reduced dimension".into());
            };
            if r.arg == 0 || r.arg > def.args.len() || r.dim >= def.args[r.arg - 1].rank as usize {
                return Err("reduced dimension is out of range".into());
            }
            if !flow.has_reduction() {
                return Err("reduction entry without `sum` in its template".into());
            }
        }
        ComputeKind::OpaquePerRow if !flow.has_full_lhs() => {
            return Err("per-row entries must write whole rows (`R[i0, :]`)".into());
        }
        ComputeKind::Elementwise if flow.has_reduction() || flow.has_full_lhs() => {
            return Err("elementwise entry with a reduction or row template".into());
        }
        _ => {}
    }
    Ok(KBEntry { def, flow, extents })
}

impl KBEntry {
    pub fn name(&self) -> &str {
        self.def.label.as_deref().unwrap_or(&self.def.function_id)
    }

    pub fn result_type(&self, args: &[SemType]) -> SemType {
        let elem = match self.def.result.elem {
            ResultElem::Promote => args.iter().map(|t| t.elem()).reduce(Elem::promote).unwrap_or(Elem::Unknown),
            ResultElem::First => args.first().map(|t| t.elem()).unwrap_or(Elem::Unknown),
            ResultElem::Int => Elem::Int,
            ResultElem::Float => Elem::Float,
            ResultElem::Bool => Elem::Bool,
            ResultElem::Complex => Elem::Complex,
        };
        match self.def.result.rank {
            0 => SemType::scalar(elem),
            r => SemType::array(elem, r),
        }
    }

    fn subst_shapes(&self, e: &AffineExpr, src: &mut dyn ArgSource) -> Result<AffineExpr, String> {
        let mut out = AffineExpr::constant(e.constant_term());
        for (s, c) in e.terms() {
            let (role, dim) = shape_symbol(s).ok_or("bad extent")?;
            out = out.add(&src.extent(role, dim)?.scale(c));
        }
        Ok(out)
    }

    /// Shape of the result in terms of the actual arguments.
    pub fn result_shape(&self, src: &mut dyn ArgSource) -> Result<Vec<AffineExpr>, String> {
        let mut out = Vec::new();
        for t in &self.flow.lhs {
            match t {
                TIdx::Aff(a) => {
                    let pos = self
                        .def
                        .domain
                        .iter()
                        .position(|d| a == &AffineExpr::var(d.iter.as_str()))
                        .ok_or("result index is not a domain iterator")?;
                    out.push(self.subst_shapes(&self.extents[pos], src)?);
                }
                TIdx::Full => {
                    let (role, dim) = Dataflow::full_dim(&self.flow.rhs).ok_or("row entry without `:`")?;
                    out.push(src.extent(role, dim)?);
                }
            }
        }
        Ok(out)
    }
}

fn kw_value(e: &Expr) -> Option<i64> {
    match &e.kind {
        ExprKind::Int(v) => Some(*v),
        ExprKind::Neg(inner) => kw_value(inner).map(|v| -v),
        _ => None,
    }
}

impl KnowledgeBase {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The unique entry matching a concrete call, if any.
    pub fn lookup(&self, function_id: &str, args: &[SemType], keywords: &[(String, i64)]) -> Option<&KBEntry> {
        let kw: BTreeMap<String, i64> = keywords.iter().cloned().collect();
        self.entries.iter().find(|e| {
            e.def.function_id == function_id
                && e.def.args.len() == args.len()
                && e.def.keywords == kw
                && e.def.args.iter().zip(args).all(|(p, t)| t.rank() == Some(p.rank) && p.elem.matches(t.elem()))
        })
    }

    /// Looks up a resolved call site; keyword values must be integer
    /// literals.
    pub fn lookup_site(&self, site: &CallSite<'_>, args: &[SemType]) -> Option<&KBEntry> {
        let mut kws = Vec::new();
        for (k, v) in &site.keywords {
            kws.push((k.clone(), kw_value(v)?));
        }
        self.lookup(&site.function_id, args, &kws)
    }
}

/// A library operation found in source: a call, a method call, `.T`, or
/// an arithmetic operator.
#[derive(Clone, Debug)]
pub struct CallSite<'e> {
    pub function_id: String,
    pub args: Vec<&'e Expr>,
    pub keywords: Vec<(String, &'e Expr)>,
}

const MODULES: &[&str] = &["np", "numpy", "np.fft", "numpy.fft"];

fn alias(name: &str) -> &str {
    match name {
        "multiply" => "mult",
        "subtract" => "sub",
        "divide" | "true_divide" => "div",
        "matmul" => "dot",
        other => other,
    }
}

pub fn resolve_call(e: &Expr) -> Option<CallSite<'_>> {
    match &e.kind {
        ExprKind::BinOp { op, lhs, rhs } if *op != BinOp::Pow => Some(CallSite {
            function_id: op.kb_name().to_string(),
            args: vec![lhs, rhs],
            keywords: Vec::new(),
        }),
        ExprKind::Attribute { base, attr } if attr == "T" => Some(CallSite {
            function_id: "transpose".into(),
            args: vec![base],
            keywords: Vec::new(),
        }),
        ExprKind::Call { func, args, kwargs } => {
            let keywords = kwargs.iter().map(|(k, v)| (k.clone(), v)).collect();
            if let ExprKind::Attribute { base, attr } = &func.kind {
                let module = base.dotted().is_some_and(|d| MODULES.contains(&d.as_str()));
                if !module {
                    let mut all = vec![&**base];
                    all.extend(args.iter());
                    return Some(CallSite {
                        function_id: alias(attr).to_string(),
                        args: all,
                        keywords,
                    });
                }
                return Some(CallSite {
                    function_id: alias(attr).to_string(),
                    args: args.iter().collect(),
                    keywords,
                });
            }
            None
        }
        _ => None,
    }
}

/// Result of instantiating an entry on whole-array arguments.
#[derive(Clone, Debug)]
pub struct Instance {
    pub iters: Vec<String>,
    pub domain: AffineSet,
    /// Value of result element `R[iters]` (row positions use `p`).
    pub sem: Sem,
    pub reads: Vec<(String, Vec<AffineExpr>, Vec<Local>)>,
    /// Result index per dimension; `None` marks a whole row.
    pub write: Vec<Option<AffineExpr>>,
}

struct WholeArgs<'a> {
    names: &'a [&'a str],
    shapes: &'a [Vec<AffineExpr>],
    fresh: usize,
}

impl ArgSource for WholeArgs<'_> {
    fn elem(&mut self, role: usize, idx: &[AffineExpr]) -> Result<Sem, String> {
        let rank = self.shapes.get(role - 1).ok_or("missing argument")?.len();
        if rank != idx.len() {
            return Err(format!("argument {role} has rank {rank}, indexed with {}", idx.len()));
        }
        Ok(Sem::read(self.names[role - 1], idx.to_vec()))
    }

    fn extent(&mut self, role: usize, dim: usize) -> Result<AffineExpr, String> {
        self.shapes
            .get(role - 1)
            .and_then(|s| s.get(dim))
            .cloned()
            .ok_or_else(|| "argument rank mismatch".to_string())
    }

    fn fresh(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{prefix}{}", self.fresh - 1)
    }
}

/// Binds an entry to concrete arguments: domain over the entry's
/// iterators with extents from the argument shapes, element semantics
/// and read accesses.
pub fn instantiate_dataflow(entry: &KBEntry, names: &[&str], shapes: &[Vec<AffineExpr>]) -> Result<Instance, String> {
    for (p, s) in entry.def.args.iter().zip(shapes) {
        if p.rank as usize != s.len() {
            return Err("argument rank mismatch".into());
        }
    }
    let mut src = WholeArgs { names, shapes, fresh: 0 };
    let iters: Vec<String> = entry.def.domain.iter().map(|d| d.iter.clone()).collect();
    let mut cons = Vec::new();
    let mut params = BTreeSet::new();
    for (it, ext) in iters.iter().zip(&entry.extents) {
        let hi = entry.subst_shapes(ext, &mut src)?;
        params.extend(hi.symbols().map(str::to_string));
        cons.push(Constraint::le(&AffineExpr::zero(), &AffineExpr::var(it.as_str())));
        cons.push(Constraint::lt(&AffineExpr::var(it.as_str()), &hi));
    }
    let idx: Vec<AffineExpr> = entry
        .flow
        .lhs
        .iter()
        .map(|t| match t {
            TIdx::Aff(a) => a.clone(),
            TIdx::Full => AffineExpr::var("p"),
        })
        .collect();
    let sem = entry.flow.eval(&idx, &mut src)?;
    let write = entry
        .flow
        .lhs
        .iter()
        .map(|t| match t {
            TIdx::Aff(a) => Some(a.clone()),
            TIdx::Full => None,
        })
        .collect();
    let domain = AffineSet::from_constraints(iters.clone(), params.into_iter().collect(), cons);
    Ok(Instance {
        iters,
        domain,
        reads: sem.reads(),
        sem,
        write,
    })
}

#[cfg(test)]
mod tests;
