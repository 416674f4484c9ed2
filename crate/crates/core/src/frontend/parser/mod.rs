//! Statement-level parser.
//!
//! Works on the token stream but keeps source line ranges so that leaf
//! statements, black boxes and top-level opaque text can be reproduced
//! exactly by the emitter.

mod effects;
mod expr;

use std::collections::{BTreeSet, HashMap};

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::Diagnostic;
use expr::ExprParser;

const COMPOUND: &[&str] = &["if", "for", "while", "with", "try", "def", "class", "async"];
const CLAUSES: &[&str] = &["elif", "else", "except", "finally"];

/// Parses a whole file. Syntax errors and duplicate kernel names are the
/// only failures; everything else outside the subset becomes black-box or
/// opaque text.
pub fn parse_kernels(src: &str) -> Result<Program, Vec<Diagnostic>> {
    let lexed = tokenize(src).map_err(|d| vec![d])?;
    let mut p = Parser {
        src,
        lines: src.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l)).collect(),
        toks: lexed.tokens,
        pos: 0,
        string_lines: lexed.string_lines,
        cursor_line: 0,
    };
    let items = p.items(0, true).map_err(|d| vec![d])?;
    let program = Program { items };
    let diags = duplicate_names(&program.items);
    if diags.is_empty() {
        Ok(program)
    } else {
        Err(diags)
    }
}

/// Parses a standalone expression (used for KB templates and tests).
pub fn parse_expr(src: &str) -> Option<Expr> {
    let lexed = tokenize(src).ok()?;
    let toks: Vec<Token> = lexed
        .tokens
        .into_iter()
        .filter(|t| !matches!(t.tok, Tok::Newline | Tok::End | Tok::Indent | Tok::Dedent))
        .collect();
    ExprParser::parse_all(&toks)
}

fn duplicate_names(items: &[Item]) -> Vec<Diagnostic> {
    let mut seen: HashMap<&str, usize> = HashMap::new();
    let mut out = Vec::new();
    for item in items {
        match item {
            Item::Function(f) => {
                if let Some(first) = seen.insert(&f.name, f.origin.line) {
                    out.push(Diagnostic::error(
                        f.origin.line,
                        f.origin.col,
                        format!("duplicate function `{}` (first defined on line {first})", f.name),
                    ));
                }
            }
            Item::Class(c) => out.extend(duplicate_names(&c.body)),
            Item::Opaque(_) => {}
        }
    }
    out
}

enum Header {
    /// Index of the trailing `:`.
    Block(usize),
    OneLine,
}

struct Parser<'a> {
    src: &'a str,
    lines: Vec<&'a str>,
    toks: Vec<Token>,
    pos: usize,
    string_lines: BTreeSet<usize>,
    /// Last source line already attributed to a statement or item.
    cursor_line: usize,
}

impl<'a> Parser<'a> {
    fn tok(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn is_name(&self, i: usize, s: &str) -> bool {
        matches!(self.toks.get(i).map(|t| &t.tok), Some(Tok::Name(n)) if n == s)
    }

    fn is_op(&self, i: usize, s: &str) -> bool {
        matches!(self.toks.get(i).map(|t| &t.tok), Some(Tok::Op(o)) if o == s)
    }

    fn name_in(&self, i: usize, set: &[&str]) -> bool {
        matches!(self.toks.get(i).map(|t| &t.tok), Some(Tok::Name(n)) if set.contains(&n.as_str()))
    }

    fn end_line(&self, t: &Token) -> usize {
        t.line + self.src[t.start..t.end].matches('\n').count()
    }

    /// Index of the NEWLINE ending the logical line that starts at `i`.
    fn newline_after(&self, mut i: usize) -> usize {
        while !matches!(self.toks[i].tok, Tok::Newline | Tok::End) {
            i += 1;
        }
        i
    }

    /// Last source line covered by content tokens before `self.pos`.
    fn prev_content_line(&self) -> usize {
        let mut i = self.pos;
        while i > 0 {
            i -= 1;
            if !matches!(self.toks[i].tok, Tok::Newline | Tok::Indent | Tok::Dedent | Tok::End) {
                return self.end_line(&self.toks[i]);
            }
        }
        0
    }

    fn raw(&self, first: usize, last: usize, base: usize) -> RawText {
        let mut lines = Vec::new();
        let mut verbatim = Vec::new();
        for l in first..=last.min(self.lines.len()) {
            let line = self.lines[l - 1];
            let keep = self.string_lines.contains(&l);
            if keep {
                lines.push(line.to_string());
            } else {
                let ws = line.len() - line.trim_start_matches([' ', '\t']).len();
                lines.push(line[ws.min(base)..].trim_end().to_string());
            }
            verbatim.push(keep);
        }
        RawText { lines, verbatim }
    }

    fn take_comments(&mut self, first_line: usize) -> Vec<String> {
        let from = self.cursor_line + 1;
        let out = (from..first_line)
            .filter_map(|l| self.lines.get(l - 1))
            .map(|l| l.trim())
            .filter(|l| l.starts_with('#'))
            .map(str::to_string)
            .collect();
        self.cursor_line = first_line.saturating_sub(1).max(self.cursor_line);
        out
    }

    fn header(&self, start: usize, nl: usize) -> Result<Header, Diagnostic> {
        let mut depth = 0i32;
        let mut colon = None;
        for i in start..nl {
            match &self.toks[i].tok {
                Tok::Op(o) if o == "(" || o == "[" || o == "{" => depth += 1,
                Tok::Op(o) if o == ")" || o == "]" || o == "}" => depth -= 1,
                Tok::Op(o) if o == ":" && depth == 0 && colon.is_none() => {
                    // `lambda x: ...` inside a header is not the block colon.
                    if !(start..i).any(|k| self.is_name(k, "lambda")) {
                        colon = Some(i);
                    }
                }
                _ => {}
            }
        }
        match colon {
            Some(c) if c + 1 == nl => Ok(Header::Block(c)),
            Some(_) => Ok(Header::OneLine),
            None => {
                let last = &self.toks[nl - 1];
                Err(Diagnostic::error(
                    self.end_line(last),
                    last.col + (last.end - last.start),
                    "expected ':'",
                ))
            }
        }
    }

    fn expect_block_start(&mut self) -> Result<(), Diagnostic> {
        // self.pos is at the NEWLINE after a header colon.
        let nl = &self.toks[self.pos];
        if !matches!(nl.tok, Tok::Newline) || !matches!(self.toks.get(self.pos + 1).map(|t| &t.tok), Some(Tok::Indent)) {
            let t = self.toks.get(self.pos + 1).unwrap_or(nl);
            return Err(Diagnostic::error(t.line, t.col, "expected an indented block"));
        }
        self.pos += 2;
        Ok(())
    }

    // ---- skipping (for black boxes and opaque items) ----

    fn skip_statement(&mut self) -> Result<(), Diagnostic> {
        if self.name_in(self.pos, COMPOUND) && !self.is_op(self.pos + 1, "=") {
            return self.skip_compound();
        }
        if self.name_in(self.pos, CLAUSES) {
            let t = self.tok();
            return Err(Diagnostic::error(t.line, t.col, "invalid syntax"));
        }
        self.pos = self.newline_after(self.pos) + 1;
        Ok(())
    }

    fn skip_compound(&mut self) -> Result<(), Diagnostic> {
        loop {
            let nl = self.newline_after(self.pos);
            match self.header(self.pos, nl)? {
                Header::OneLine => self.pos = nl + 1,
                Header::Block(_) => {
                    self.pos = nl;
                    self.skip_block()?;
                }
            }
            if !self.name_in(self.pos, CLAUSES) {
                return Ok(());
            }
        }
    }

    fn skip_block(&mut self) -> Result<(), Diagnostic> {
        self.expect_block_start()?;
        while !matches!(self.tok().tok, Tok::Dedent | Tok::End) {
            self.skip_statement()?;
        }
        if matches!(self.tok().tok, Tok::Dedent) {
            self.pos += 1;
        }
        Ok(())
    }

    // ---- items ----

    fn items(&mut self, base: usize, top: bool) -> Result<Vec<Item>, Diagnostic> {
        let mut items = Vec::new();
        let mut opaque_from: Option<usize> = None;
        let mut gap_start = self.cursor_line + 1;
        let mut decorated = false;
        let mut last_end = self.cursor_line;
        while !matches!(self.tok().tok, Tok::Dedent | Tok::End) {
            let first = self.tok().line;
            let start = self.pos;
            let mut item = None;
            if !decorated && self.is_name(start, "def") {
                self.cursor_line = first.saturating_sub(1);
                if let Some(f) = self.function()? {
                    item = Some(Item::Function(f));
                } else {
                    self.pos = start;
                }
            } else if !decorated && self.is_name(start, "class") {
                self.cursor_line = first.saturating_sub(1);
                item = self.class(base)?.map(Item::Class);
                if item.is_none() {
                    self.pos = start;
                }
            }
            match item {
                Some(item) => {
                    if let Some(text) = self.opaque(opaque_from.unwrap_or(gap_start), first - 1, base) {
                        items.push(Item::Opaque(text));
                    }
                    opaque_from = None;
                    items.push(item);
                }
                None => {
                    decorated = self.is_op(start, "@");
                    self.skip_statement()?;
                    opaque_from.get_or_insert(gap_start);
                }
            }
            last_end = self.prev_content_line();
            gap_start = last_end + 1;
            self.cursor_line = last_end;
        }
        let end = if top { self.lines.len() } else { last_end };
        if let Some(text) = self.opaque(opaque_from.unwrap_or(gap_start), end, base) {
            items.push(Item::Opaque(text));
        }
        Ok(items)
    }

    fn opaque(&self, first: usize, last: usize, base: usize) -> Option<RawText> {
        let blank = |l: usize| self.lines.get(l - 1).is_none_or(|s| s.trim().is_empty()) && !self.string_lines.contains(&l);
        let mut a = first.max(1);
        let mut b = last.min(self.lines.len());
        while a <= b && blank(a) {
            a += 1;
        }
        while b >= a && blank(b) {
            b -= 1;
        }
        (a <= b).then(|| self.raw(a, b, base))
    }

    fn class(&mut self, _outer: usize) -> Result<Option<ClassDef>, Diagnostic> {
        let t = self.tok().clone();
        let nl = self.newline_after(self.pos);
        let Header::Block(_) = self.header(self.pos, nl)? else {
            return Ok(None);
        };
        let header = self.raw(t.line, self.end_line(&self.toks[nl - 1]), t.col - 1);
        if header.lines.len() != 1 {
            return Ok(None);
        }
        self.pos = nl;
        self.expect_block_start()?;
        self.cursor_line = self.end_line(&self.toks[nl - 1]);
        let inner = self.tok().col - 1;
        let body = self.items(inner, false)?;
        if matches!(self.tok().tok, Tok::Dedent) {
            self.pos += 1;
        }
        Ok(Some(ClassDef {
            header: header.lines[0].clone(),
            body,
            origin: Origin::at(t.line, t.col),
        }))
    }

    fn function(&mut self) -> Result<Option<KernelFunction>, Diagnostic> {
        let t = self.tok().clone();
        let nl = self.newline_after(self.pos);
        let Header::Block(colon) = self.header(self.pos, nl)? else {
            return Ok(None);
        };
        let Some((name, params, ret)) = self.def_header(self.pos + 1, colon) else {
            return Ok(None);
        };
        let header_end = self.end_line(&self.toks[colon]);
        let mut origin = Origin::at(t.line, t.col);
        origin.text = Some(self.raw(t.line, header_end, t.col - 1));
        self.pos = nl;
        self.cursor_line = header_end;
        let body = self.block()?;
        Ok(Some(KernelFunction {
            name,
            params,
            return_annotation: ret,
            body,
            origin,
        }))
    }

    fn def_header(&self, mut i: usize, colon: usize) -> Option<(String, Vec<Param>, Option<TypeAnnotation>)> {
        let Tok::Name(name) = &self.toks[i].tok else { return None };
        i += 1;
        if !self.is_op(i, "(") {
            return None;
        }
        i += 1;
        let mut params = Vec::new();
        while !self.is_op(i, ")") {
            let Tok::Name(pname) = &self.toks[i].tok else { return None };
            i += 1;
            let mut param = Param {
                name: pname.clone(),
                annotation: None,
                default: None,
            };
            let item_end = self.item_end(i, colon)?;
            let eq = (i..item_end).find(|&k| self.is_op(k, "="));
            if self.is_op(i, ":") {
                let ann_end = eq.unwrap_or(item_end);
                param.annotation = Some(TypeAnnotation::from_text(&self.slice_text(i + 1, ann_end)?));
            } else if eq != Some(i) && i != item_end {
                return None;
            }
            if let Some(eq) = eq {
                param.default = Some(ExprParser::parse_all(&self.toks[eq + 1..item_end])?);
            }
            params.push(param);
            i = item_end;
            if self.is_op(i, ",") {
                i += 1;
            }
        }
        i += 1;
        let ret = if self.is_op(i, "->") {
            Some(TypeAnnotation::from_text(&self.slice_text(i + 1, colon)?))
        } else if i == colon {
            None
        } else {
            return None;
        };
        Some((name.clone(), params, ret))
    }

    /// End of one parameter: the next depth-0 `,` or the closing `)`.
    fn item_end(&self, mut i: usize, limit: usize) -> Option<usize> {
        let mut depth = 0;
        while i < limit {
            match &self.toks[i].tok {
                Tok::Op(o) if o == "(" || o == "[" || o == "{" => depth += 1,
                Tok::Op(o) if (o == ")" || o == ",") && depth == 0 => return Some(i),
                Tok::Op(o) if o == ")" || o == "]" || o == "}" => depth -= 1,
                _ => {}
            }
            i += 1;
        }
        None
    }

    fn slice_text(&self, a: usize, b: usize) -> Option<String> {
        if a >= b {
            return None;
        }
        let text = &self.src[self.toks[a].start..self.toks[b - 1].end];
        Some(text.split_whitespace().collect::<Vec<_>>().join(" "))
    }

    // ---- statements ----

    fn block(&mut self) -> Result<Vec<Stmt>, Diagnostic> {
        self.expect_block_start()?;
        let mut out = Vec::new();
        while !matches!(self.tok().tok, Tok::Dedent | Tok::End) {
            out.push(self.statement()?);
        }
        if matches!(self.tok().tok, Tok::Dedent) {
            self.pos += 1;
        }
        Ok(out)
    }

    fn statement(&mut self) -> Result<Stmt, Diagnostic> {
        let t = self.tok().clone();
        let comments = self.take_comments(t.line);
        let start = self.pos;
        let saved_cursor = self.cursor_line;
        let structured = if self.is_name(start, "for") {
            self.for_stmt()?
        } else if self.is_name(start, "if") {
            self.if_stmt()?
        } else if self.name_in(start, CLAUSES) {
            return Err(Diagnostic::error(t.line, t.col, "invalid syntax"));
        } else if self.name_in(start, COMPOUND) {
            None
        } else {
            let nl = self.newline_after(start);
            let kind = self.simple(start, nl);
            kind.map(|k| {
                self.pos = nl + 1;
                let mut origin = Origin::at(t.line, t.col);
                origin.text = Some(self.raw(t.line, self.end_line(&self.toks[nl - 1]), t.col - 1));
                Stmt { kind: k, origin }
            })
        };
        let mut stmt = match structured {
            Some(s) => s,
            None => {
                self.pos = start;
                self.cursor_line = saved_cursor;
                self.skip_statement()?;
                let end = self.prev_content_line();
                let text = self.raw(t.line, end, t.col - 1);
                let bb = effects::black_box(&self.toks[start..self.pos], text);
                Stmt {
                    kind: StmtKind::BlackBox(bb),
                    origin: Origin::at(t.line, t.col),
                }
            }
        };
        stmt.origin.comments = comments;
        self.cursor_line = self.prev_content_line();
        Ok(stmt)
    }

    fn for_stmt(&mut self) -> Result<Option<Stmt>, Diagnostic> {
        let t = self.tok().clone();
        let nl = self.newline_after(self.pos);
        let Header::Block(colon) = self.header(self.pos, nl)? else {
            return Ok(None);
        };
        let parsed = (|| {
            let Tok::Name(var) = &self.toks.get(self.pos + 1)?.tok else { return None };
            if expr::KEYWORDS.contains(&var.as_str()) || !self.is_name(self.pos + 2, "in") {
                return None;
            }
            let range = ExprParser::parse_all(&self.toks[self.pos + 3..colon])?;
            let ExprKind::Call { func, args, kwargs } = range.kind else { return None };
            if func.dotted().as_deref() != Some("range") || !kwargs.is_empty() {
                return None;
            }
            let mut args = args.into_iter();
            let (lower, upper, step) = match args.len() {
                1 => (None, args.next()?, None),
                2 => (args.next(), args.next()?, None),
                3 => (args.next(), args.next()?, args.next()),
                _ => return None,
            };
            if let Some(s) = &step {
                if s.kind != ExprKind::Int(1) {
                    return None;
                }
            }
            Some((var.clone(), lower, upper, step))
        })();
        let Some((var, lower, upper, step)) = parsed else {
            return Ok(None);
        };
        let header_end = self.end_line(&self.toks[colon]);
        self.pos = nl;
        self.cursor_line = header_end;
        let body = self.block()?;
        if self.name_in(self.pos, CLAUSES) {
            return Ok(None);
        }
        let mut origin = Origin::at(t.line, t.col);
        origin.text = Some(self.raw(t.line, header_end, t.col - 1));
        Ok(Some(Stmt {
            kind: StmtKind::For {
                var,
                lower,
                upper,
                step,
                body,
            },
            origin,
        }))
    }

    fn if_stmt(&mut self) -> Result<Option<Stmt>, Diagnostic> {
        let t = self.tok().clone();
        let nl = self.newline_after(self.pos);
        let Header::Block(colon) = self.header(self.pos, nl)? else {
            return Ok(None);
        };
        let Some(cond) = ExprParser::parse_all(&self.toks[self.pos + 1..colon]) else {
            return Ok(None);
        };
        let header_end = self.end_line(&self.toks[colon]);
        self.pos = nl;
        self.cursor_line = header_end;
        let body = self.block()?;
        let mut orelse = Vec::new();
        if self.is_name(self.pos, "else") {
            let nl = self.newline_after(self.pos);
            match self.header(self.pos, nl)? {
                Header::Block(c) if c == self.pos + 1 => {}
                _ => return Ok(None),
            }
            self.cursor_line = self.end_line(&self.toks[nl - 1]);
            self.pos = nl;
            orelse = self.block()?;
        } else if self.name_in(self.pos, CLAUSES) {
            return Ok(None);
        }
        let mut origin = Origin::at(t.line, t.col);
        origin.text = Some(self.raw(t.line, header_end, t.col - 1));
        Ok(Some(Stmt {
            kind: StmtKind::If { cond, body, orelse },
            origin,
        }))
    }

    /// Structured form of a simple statement, or `None` for a black box.
    fn simple(&self, a: usize, b: usize) -> Option<StmtKind> {
        let toks = &self.toks[a..b];
        let mut depth = 0;
        let mut assign_at = Vec::new();
        let mut aug_at = None;
        for (k, t) in toks.iter().enumerate() {
            match &t.tok {
                Tok::Op(o) if o == "(" || o == "[" || o == "{" => depth += 1,
                Tok::Op(o) if o == ")" || o == "]" || o == "}" => depth -= 1,
                Tok::Op(o) if depth == 0 && o == ";" => return None,
                Tok::Op(o) if depth == 0 && o == "=" => assign_at.push(k),
                Tok::Op(o) if depth == 0 && o.len() >= 2 && o.ends_with('=') && !["==", "!=", "<=", ">="].contains(&o.as_str()) => {
                    aug_at = Some((k, o.clone()))
                }
                _ => {}
            }
        }
        if let Tok::Name(first) = &toks[0].tok {
            if first == "return" {
                if toks.len() == 1 {
                    return Some(StmtKind::Return(None));
                }
                return ExprParser::parse_all(&toks[1..]).map(|e| StmtKind::Return(Some(e)));
            }
            if expr::KEYWORDS.contains(&first.as_str()) && !matches!(first.as_str(), "True" | "False" | "None" | "not") {
                return None;
            }
        }
        let target_ok = |e: &Expr| matches!(e.kind, ExprKind::Name(_) | ExprKind::Subscript { .. } | ExprKind::Attribute { .. });
        match (assign_at.as_slice(), aug_at) {
            ([k], None) => {
                let target = ExprParser::parse_all(&toks[..*k])?;
                let value = ExprParser::parse_all(&toks[k + 1..])?;
                target_ok(&target).then_some(StmtKind::Assign { target, value })
            }
            ([], Some((k, op))) => {
                let op = match op.as_str() {
                    "+=" => BinOp::Add,
                    "-=" => BinOp::Sub,
                    "*=" => BinOp::Mul,
                    "/=" => BinOp::Div,
                    "**=" => BinOp::Pow,
                    _ => return None,
                };
                let target = ExprParser::parse_all(&toks[..k])?;
                let value = ExprParser::parse_all(&toks[k + 1..])?;
                target_ok(&target).then_some(StmtKind::AugAssign { target, op, value })
            }
            ([], None) => {
                let e = ExprParser::parse_all(toks)?;
                matches!(e.kind, ExprKind::Call { .. }).then_some(StmtKind::ExprCall(e))
            }
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests;
