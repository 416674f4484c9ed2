//! Conservative read/write sets for black-box statements, computed from
//! tokens alone.

use std::collections::BTreeSet;

use super::expr::KEYWORDS;
use crate::frontend::ast::{BlackBox, RawText};
use crate::frontend::lexer::{Tok, Token};

fn name(t: Option<&Token>) -> Option<&str> {
    match t.map(|t| &t.tok) {
        Some(Tok::Name(n)) if !KEYWORDS.contains(&n.as_str()) => Some(n),
        _ => None,
    }
}

fn op(t: Option<&Token>, s: &str) -> bool {
    matches!(t.map(|t| &t.tok), Some(Tok::Op(o)) if o == s)
}

fn kw(t: Option<&Token>, s: &str) -> bool {
    matches!(t.map(|t| &t.tok), Some(Tok::Name(n)) if n == s)
}

/// Root name of the access starting at `k`, plus its `self.x` form.
fn roots(toks: &[Token], k: usize) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(n) = name(toks.get(k)) {
        out.push(n.to_string());
        if n == "self" && op(toks.get(k + 1), ".") {
            if let Some(attr) = name(toks.get(k + 2)) {
                out.push(format!("self.{attr}"));
            }
        }
    }
    out
}

pub(super) fn black_box(toks: &[Token], text: RawText) -> BlackBox {
    let mut reads = BTreeSet::new();
    let mut writes = BTreeSet::new();
    let mut assigns = BTreeSet::new();
    let mut has_call = false;

    for k in 0..toks.len() {
        if name(toks.get(k)).is_some() {
            reads.extend(roots(toks, k));
        }
    }

    // Assignment targets, one logical line at a time.
    let mut line_start = 0;
    for k in 0..=toks.len() {
        let end_of_line = k == toks.len() || matches!(toks[k].tok, Tok::Newline | Tok::Indent | Tok::Dedent);
        if !end_of_line {
            continue;
        }
        let line = &toks[line_start..k];
        line_start = k + 1;
        let mut depth = 0;
        let mut seg_start = 0;
        for (j, t) in line.iter().enumerate() {
            match &t.tok {
                Tok::Op(o) if o == "(" || o == "[" || o == "{" => depth += 1,
                Tok::Op(o) if o == ")" || o == "]" || o == "}" => depth -= 1,
                Tok::Op(o)
                    if depth == 0
                        && o.ends_with('=')
                        && !["==", "!=", "<=", ">="].contains(&o.as_str()) =>
                {
                    target_roots(&line[seg_start..j], &mut assigns);
                    seg_start = j + 1;
                }
                _ => {}
            }
        }
        // `for x, y in ...`, `with ... as x`, `def f`, `class C`, `del x`
        for (j, t) in line.iter().enumerate() {
            if kw(Some(t), "for") {
                let stop = (j + 1..line.len()).find(|&m| kw(line.get(m), "in")).unwrap_or(line.len());
                target_roots(&line[j + 1..stop], &mut assigns);
            } else if kw(Some(t), "as") || kw(Some(t), "def") || kw(Some(t), "class") || kw(Some(t), "del") {
                assigns.extend(roots(line, j + 1));
            }
        }
    }
    writes.extend(assigns.iter().cloned());

    // Calls: receivers and argument roots may be mutated.
    for k in 0..toks.len() {
        if !op(toks.get(k), "(") || k == 0 {
            continue;
        }
        let callee = name(toks.get(k - 1)).is_some() || op(toks.get(k - 1), ")") || op(toks.get(k - 1), "]");
        if !callee {
            continue;
        }
        has_call = true;
        // Walk back over a dotted callee `a.b.c(`.
        let mut r = k - 1;
        while r >= 2 && op(toks.get(r - 1), ".") && name(toks.get(r - 2)).is_some() {
            r -= 2;
        }
        if r < k - 1 {
            writes.extend(roots(toks, r));
        }
        let mut depth = 0;
        let mut arg_start = true;
        let mut m = k + 1;
        while m < toks.len() {
            match &toks[m].tok {
                Tok::Op(o) if o == "(" || o == "[" || o == "{" => depth += 1,
                Tok::Op(o) if o == ")" && depth == 0 => break,
                Tok::Op(o) if o == ")" || o == "]" || o == "}" => depth -= 1,
                Tok::Op(o) if o == "," && depth == 0 => {
                    arg_start = true;
                    m += 1;
                    continue;
                }
                _ => {}
            }
            if arg_start && depth == 0 {
                let mut a = m;
                if name(toks.get(a)).is_some() && op(toks.get(a + 1), "=") {
                    a += 2;
                }
                while op(toks.get(a), "*") || op(toks.get(a), "**") {
                    a += 1;
                }
                writes.extend(roots(toks, a));
            }
            arg_start = false;
            m += 1;
        }
    }

    BlackBox {
        text,
        reads,
        writes,
        assigns,
        has_call,
    }
}

fn target_roots(seg: &[Token], out: &mut BTreeSet<String>) {
    // Each open bracket records whether it groups targets (`(a, b) = ...`)
    // or belongs to an access (`x[i, j] = ...`).
    let mut stack: Vec<bool> = Vec::new();
    let mut start = true;
    for (j, t) in seg.iter().enumerate() {
        let grouping = stack.iter().all(|g| *g);
        match &t.tok {
            Tok::Op(o) if o == "(" || o == "[" || o == "{" => {
                stack.push(start && grouping);
                start = start && grouping;
            }
            Tok::Op(o) if o == ")" || o == "]" || o == "}" => {
                stack.pop();
                start = false;
            }
            Tok::Op(o) if o == "," => start = grouping,
            Tok::Op(o) if o == "*" => {}
            Tok::Name(_) => {
                if start && grouping {
                    out.extend(roots(seg, j));
                }
                start = false;
            }
            _ => start = false,
        }
    }
}
