//! Text of the multi-version guard tree and the module header.

use super::loops::pad;
use crate::frontend::ast::{AnnotationKind, KernelFunction, Stmt, StmtKind};
use crate::typeinf::{Elem, SemType};

/// Array copy of a list parameter inside the optimized version.
pub fn list_copy(x: &str) -> String {
    format!("__a_{x}")
}

pub fn is_docstring(s: &Stmt) -> bool {
    let StmtKind::BlackBox(bb) = &s.kind else { return false };
    let first = bb.text.lines.first().map(|l| l.trim_start()).unwrap_or("");
    let body = first.trim_start_matches(['r', 'R', 'u', 'U', 'b', 'B']);
    body.starts_with('"') || body.starts_with('\'')
}

/// `type(p) == T` for every parameter with a checkable annotation.
pub fn type_checks(f: &KernelFunction) -> Vec<String> {
    f.kernel_params()
        .filter_map(|p| {
            let t = match p.annotation.as_ref()?.kind {
                AnnotationKind::Int => "int",
                AnnotationKind::Float => "float",
                AnnotationKind::Bool => "bool",
                AnnotationKind::List => "list",
                AnnotationKind::Ndarray => "np.ndarray",
                AnnotationKind::Other => return None,
            };
            Some(format!("type({}) == {t}", p.name))
        })
        .collect()
}

fn dtype_kind(e: Elem) -> char {
    match e {
        Elem::Int => 'i',
        Elem::Bool => 'b',
        Elem::Complex => 'c',
        // Untyped lists are assumed to hold floats.
        Elem::Float | Elem::Unknown => 'f',
    }
}

pub fn rank_check(x: &str, t: SemType, list: bool) -> Option<String> {
    let r = t.rank()?;
    Some(if list {
        let a = list_copy(x);
        format!("{a} is not None and {a}.ndim == {r} and {a}.dtype.kind == '{}'", dtype_kind(t.elem()))
    } else {
        format!("{x}.ndim == {r}")
    })
}

pub fn list_conversion(x: &str, indent: usize) -> Vec<String> {
    let (p, q) = (pad(indent), pad(indent + 1));
    let a = list_copy(x);
    vec![
        format!("{p}try:"),
        format!("{q}{a} = np.array({x})"),
        format!("{p}except ValueError:"),
        format!("{q}{a} = None"),
    ]
}

/// Copies an optimized list back into the caller's (possibly nested) list.
pub fn list_writeback(x: &str, rank: u32, indent: usize) -> Vec<String> {
    let (p, q) = (pad(indent), pad(indent + 1));
    let a = list_copy(x);
    match rank {
        1 => vec![format!("{p}{x}[:] = {a}.tolist()")],
        _ => vec![
            format!("{p}for __r, __v in zip({x}, {a}.tolist()):"),
            format!("{q}__r[:] = __v"),
        ],
    }
}

pub fn header(enable_gpu: bool) -> Vec<String> {
    let mut h = vec!["import numpy as np".to_string()];
    if enable_gpu {
        h.extend(["try:", "    import cupy as cp", "except ImportError:", "    cp = None"].map(String::from));
    }
    h.push("import amphc_rt".into());
    h
}
