use super::ast::*;

const INDENT: &str = "    ";

pub fn emit_program(p: &Program) -> String {
    let mut out = String::new();
    emit_items(&p.items, "", &mut out);
    while out.ends_with("\n\n") {
        out.pop();
    }
    if !out.is_empty() && !out.ends_with('\n') {
        out.push('\n');
    }
    out
}

fn emit_items(items: &[Item], indent: &str, out: &mut String) {
    let sep = if indent.is_empty() { "\n\n" } else { "\n" };
    for (k, item) in items.iter().enumerate() {
        if k > 0 {
            out.push_str(sep);
        }
        match item {
            Item::Opaque(text) => {
                out.push_str(&text.render(indent));
                out.push('\n');
            }
            Item::Function(f) => emit_function(f, indent, out),
            Item::Class(c) => {
                out.push_str(indent);
                out.push_str(&c.header);
                out.push('\n');
                emit_items(&c.body, &format!("{indent}{INDENT}"), out);
            }
        }
    }
}

pub fn emit_function(f: &KernelFunction, indent: &str, out: &mut String) {
    match &f.origin.text {
        Some(text) => out.push_str(&text.render(indent)),
        None => {
            let params: Vec<String> = f
                .params
                .iter()
                .map(|p| {
                    let mut s = p.name.clone();
                    if let Some(a) = &p.annotation {
                        s.push_str(": ");
                        s.push_str(&a.text);
                    }
                    if let Some(d) = &p.default {
                        s.push_str(if p.annotation.is_some() { " = " } else { "=" });
                        s.push_str(&emit_expr(d));
                    }
                    s
                })
                .collect();
            out.push_str(indent);
            out.push_str(&format!("def {}({})", f.name, params.join(", ")));
            if let Some(r) = &f.return_annotation {
                out.push_str(&format!(" -> {}", r.text));
            }
            out.push(':');
        }
    }
    out.push('\n');
    emit_block(&f.body, &format!("{indent}{INDENT}"), out);
}

pub fn emit_stmts(stmts: &[Stmt], indent: &str) -> String {
    let mut out = String::new();
    emit_block(stmts, indent, &mut out);
    out
}

fn emit_block(stmts: &[Stmt], indent: &str, out: &mut String) {
    if stmts.is_empty() {
        out.push_str(indent);
        out.push_str("pass\n");
        return;
    }
    for s in stmts {
        emit_stmt(s, indent, out);
    }
}

fn emit_stmt(s: &Stmt, indent: &str, out: &mut String) {
    for c in &s.origin.comments {
        out.push_str(indent);
        out.push_str(c);
        out.push('\n');
    }
    let inner = format!("{indent}{INDENT}");
    if let StmtKind::BlackBox(bb) = &s.kind {
        out.push_str(&bb.text.render(indent));
        out.push('\n');
        return;
    }
    if let Some(text) = &s.origin.text {
        out.push_str(&text.render(indent));
        out.push('\n');
        match &s.kind {
            StmtKind::For { body, .. } => emit_block(body, &inner, out),
            StmtKind::If { body, orelse, .. } => emit_if_tail(body, orelse, indent, out),
            _ => {}
        }
        return;
    }
    out.push_str(indent);
    match &s.kind {
        StmtKind::For {
            var,
            lower,
            upper,
            step,
            body,
        } => {
            let mut args = Vec::new();
            if let Some(l) = lower {
                args.push(emit_expr(l));
            } else if step.is_some() {
                args.push("0".to_string());
            }
            args.push(emit_expr(upper));
            if let Some(st) = step {
                args.push(emit_expr(st));
            }
            out.push_str(&format!("for {var} in range({}):\n", args.join(", ")));
            emit_block(body, &inner, out);
        }
        StmtKind::If { cond, body, orelse } => {
            out.push_str(&format!("if {}:\n", emit_expr(cond)));
            emit_if_tail(body, orelse, indent, out);
        }
        StmtKind::Assign { target, value } => {
            out.push_str(&format!("{} = {}\n", emit_expr(target), emit_top(value)));
        }
        StmtKind::AugAssign { target, op, value } => {
            out.push_str(&format!("{} {}= {}\n", emit_expr(target), op.symbol(), emit_top(value)));
        }
        StmtKind::ExprCall(e) => {
            out.push_str(&emit_expr(e));
            out.push('\n');
        }
        StmtKind::Return(None) => out.push_str("return\n"),
        StmtKind::Return(Some(e)) => out.push_str(&format!("return {}\n", emit_top(e))),
        StmtKind::Comment(c) => out.push_str(&format!("# {c}\n")),
        StmtKind::BlackBox(_) => unreachable!(),
    }
}

fn emit_if_tail(body: &[Stmt], orelse: &[Stmt], indent: &str, out: &mut String) {
    let inner = format!("{indent}{INDENT}");
    emit_block(body, &inner, out);
    if !orelse.is_empty() {
        out.push_str(indent);
        out.push_str("else:\n");
        emit_block(orelse, &inner, out);
    }
}

/// Top-level tuples (`return a, b`) print without parentheses.
fn emit_top(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Tuple(items) if items.len() > 1 => items.iter().map(emit_expr).collect::<Vec<_>>().join(", "),
        _ => emit_expr(e),
    }
}

const P_OR: u8 = 1;
const P_AND: u8 = 2;
const P_NOT: u8 = 3;
const P_CMP: u8 = 4;
const P_ADD: u8 = 5;
const P_MUL: u8 = 6;
const P_UNARY: u8 = 7;
const P_POW: u8 = 8;
const P_ATOM: u8 = 9;

fn prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::BoolOp { op: BoolOp::Or, .. } => P_OR,
        ExprKind::BoolOp { op: BoolOp::And, .. } => P_AND,
        ExprKind::Not(_) => P_NOT,
        ExprKind::Compare { .. } => P_CMP,
        ExprKind::BinOp { op, .. } => match op {
            BinOp::Add | BinOp::Sub => P_ADD,
            BinOp::Mul | BinOp::Div => P_MUL,
            BinOp::Pow => P_POW,
        },
        ExprKind::Neg(_) => P_UNARY,
        _ => P_ATOM,
    }
}

fn wrap(e: &Expr, min: u8) -> String {
    let s = emit_expr(e);
    if prec(e) < min {
        format!("({s})")
    } else {
        s
    }
}

pub fn emit_expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Int(v) => v.to_string(),
        ExprKind::Float(t) => t.clone(),
        ExprKind::Name(n) => n.clone(),
        ExprKind::BinOp { op, lhs, rhs } => {
            let p = prec(e);
            let (l, r) = if *op == BinOp::Pow {
                (wrap(lhs, P_ATOM), wrap(rhs, P_UNARY))
            } else {
                (wrap(lhs, p), wrap(rhs, p + 1))
            };
            format!("{l} {} {r}", op.symbol())
        }
        ExprKind::Neg(inner) => format!("-{}", wrap(inner, P_UNARY)),
        ExprKind::Not(inner) => format!("not {}", wrap(inner, P_NOT)),
        ExprKind::Compare { op, lhs, rhs } => {
            format!("{} {} {}", wrap(lhs, P_ADD), op.symbol(), wrap(rhs, P_ADD))
        }
        ExprKind::BoolOp { op, values } => {
            let p = prec(e);
            let word = if *op == BoolOp::And { " and " } else { " or " };
            values.iter().map(|v| wrap(v, p + 1)).collect::<Vec<_>>().join(word)
        }
        ExprKind::Subscript { base, indices } => {
            let idx: Vec<String> = indices
                .iter()
                .map(|ix| match ix {
                    Index::Expr(t @ Expr { kind: ExprKind::Tuple(_), .. }) => {
                        format!("({})", emit_top(t))
                    }
                    Index::Expr(x) => emit_expr(x),
                    Index::Slice { lower, upper } => format!(
                        "{}:{}",
                        lower.as_ref().map(emit_expr).unwrap_or_default(),
                        upper.as_ref().map(emit_expr).unwrap_or_default()
                    ),
                })
                .collect();
            format!("{}[{}]", wrap(base, P_ATOM), idx.join(", "))
        }
        ExprKind::Attribute { base, attr } => {
            let b = match base.kind {
                // `1 .real` would need a space; parenthesize numbers.
                ExprKind::Int(_) | ExprKind::Float(_) => format!("({})", emit_expr(base)),
                _ => wrap(base, P_ATOM),
            };
            format!("{b}.{attr}")
        }
        ExprKind::Call { func, args, kwargs } => {
            let mut parts: Vec<String> = args.iter().map(emit_expr).collect();
            parts.extend(kwargs.iter().map(|(k, v)| format!("{k}={}", emit_expr(v))));
            format!("{}({})", wrap(func, P_ATOM), parts.join(", "))
        }
        ExprKind::Tuple(items) => match items.len() {
            0 => "()".to_string(),
            1 => format!("({},)", emit_expr(&items[0])),
            _ => format!("({})", items.iter().map(emit_expr).collect::<Vec<_>>().join(", ")),
        },
    }
}
