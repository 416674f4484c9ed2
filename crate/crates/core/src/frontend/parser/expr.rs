use crate::frontend::ast::{BinOp, BoolOp, CmpOp, Expr, ExprKind, Index};
use crate::frontend::lexer::{Tok, Token};

pub(super) const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue", "def", "del",
    "elif", "else", "except", "finally", "for", "from", "global", "if", "import", "in", "is", "lambda", "nonlocal",
    "not", "or", "pass", "raise", "return", "try", "while", "with", "yield",
];

/// Recursive-descent expression parser over a token slice. Every method
/// returns `None` for constructs outside the subset; the caller then
/// demotes the statement to a black box.
pub(super) struct ExprParser<'t> {
    toks: &'t [Token],
    pos: usize,
}

impl<'t> ExprParser<'t> {
    pub fn new(toks: &'t [Token]) -> Self {
        ExprParser { toks, pos: 0 }
    }

    /// Parses the whole slice as one expression (bare tuples allowed).
    pub fn parse_all(toks: &'t [Token]) -> Option<Expr> {
        if toks.is_empty() {
            return None;
        }
        let mut p = ExprParser::new(toks);
        let first = p.expr()?;
        let e = if p.op(",") {
            let mut items = vec![first];
            while p.pos < toks.len() {
                p.expect(",")?;
                if p.pos == toks.len() {
                    break;
                }
                items.push(p.expr()?);
            }
            Expr::new(ExprKind::Tuple(items))
        } else {
            first
        };
        (p.pos == toks.len()).then_some(e)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn op(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Op(o)) if o == s)
    }

    fn kw(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Name(n)) if n == s)
    }

    fn expect(&mut self, s: &str) -> Option<()> {
        if self.op(s) {
            self.pos += 1;
            Some(())
        } else {
            None
        }
    }

    pub fn expr(&mut self) -> Option<Expr> {
        self.or_test()
    }

    fn bool_chain(&mut self, word: &str, op: BoolOp, next: fn(&mut Self) -> Option<Expr>) -> Option<Expr> {
        let first = next(self)?;
        if !self.kw(word) {
            return Some(first);
        }
        let mut values = vec![first];
        while self.kw(word) {
            self.pos += 1;
            values.push(next(self)?);
        }
        Some(Expr::new(ExprKind::BoolOp { op, values }))
    }

    fn or_test(&mut self) -> Option<Expr> {
        self.bool_chain("or", BoolOp::Or, Self::and_test)
    }

    fn and_test(&mut self) -> Option<Expr> {
        self.bool_chain("and", BoolOp::And, Self::not_test)
    }

    fn not_test(&mut self) -> Option<Expr> {
        if self.kw("not") {
            self.pos += 1;
            let inner = self.not_test()?;
            return Some(Expr::new(ExprKind::Not(Box::new(inner))));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Option<Expr> {
        let lhs = self.arith()?;
        let op = match self.peek() {
            Some(Tok::Op(o)) => match o.as_str() {
                "==" => CmpOp::Eq,
                "!=" => CmpOp::Ne,
                "<" => CmpOp::Lt,
                "<=" => CmpOp::Le,
                ">" => CmpOp::Gt,
                ">=" => CmpOp::Ge,
                _ => return Some(lhs),
            },
            _ => return Some(lhs),
        };
        self.pos += 1;
        let rhs = self.arith()?;
        // Chained comparisons are outside the subset.
        if matches!(self.peek(), Some(Tok::Op(o)) if ["==", "!=", "<", "<=", ">", ">="].contains(&o.as_str())) {
            return None;
        }
        Some(Expr::cmp(op, lhs, rhs))
    }

    fn arith(&mut self) -> Option<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.op("+") {
                BinOp::Add
            } else if self.op("-") {
                BinOp::Sub
            } else {
                return Some(lhs);
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Option<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = if self.op("*") {
                BinOp::Mul
            } else if self.op("/") {
                BinOp::Div
            } else {
                return Some(lhs);
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn factor(&mut self) -> Option<Expr> {
        if self.op("-") {
            self.pos += 1;
            return Some(Expr::neg(self.factor()?));
        }
        if self.op("+") {
            self.pos += 1;
            return self.factor();
        }
        self.power()
    }

    fn power(&mut self) -> Option<Expr> {
        let base = self.primary()?;
        if self.op("**") {
            self.pos += 1;
            let exp = self.factor()?;
            return Some(Expr::bin(BinOp::Pow, base, exp));
        }
        Some(base)
    }

    fn primary(&mut self) -> Option<Expr> {
        let mut e = self.atom()?;
        loop {
            if self.op(".") {
                self.pos += 1;
                match self.peek() {
                    Some(Tok::Name(n)) if !KEYWORDS.contains(&n.as_str()) => {
                        let n = n.clone();
                        self.pos += 1;
                        e = Expr::attr(e, n);
                    }
                    _ => return None,
                }
            } else if self.op("(") {
                self.pos += 1;
                let (args, kwargs) = self.call_args()?;
                e = Expr::call(e, args, kwargs);
            } else if self.op("[") {
                self.pos += 1;
                let indices = self.subscript_list()?;
                e = Expr::subscript(e, indices);
            } else {
                return Some(e);
            }
        }
    }

    fn call_args(&mut self) -> Option<(Vec<Expr>, Vec<(String, Expr)>)> {
        let mut args = Vec::new();
        let mut kwargs = Vec::new();
        while !self.op(")") {
            let is_kw = matches!(self.peek(), Some(Tok::Name(_)))
                && matches!(self.toks.get(self.pos + 1).map(|t| &t.tok), Some(Tok::Op(o)) if o == "=");
            if is_kw {
                let Some(Tok::Name(n)) = self.peek() else { unreachable!() };
                let n = n.clone();
                self.pos += 2;
                kwargs.push((n, self.expr()?));
            } else {
                if !kwargs.is_empty() {
                    return None;
                }
                args.push(self.expr()?);
            }
            if !self.op(")") {
                self.expect(",")?;
            }
        }
        self.pos += 1;
        Some((args, kwargs))
    }

    fn subscript_list(&mut self) -> Option<Vec<Index>> {
        let mut out = Vec::new();
        while !self.op("]") {
            let lower = if self.op(":") { None } else { Some(self.expr()?) };
            if self.op(":") {
                self.pos += 1;
                let upper = if self.op(",") || self.op("]") { None } else { Some(self.expr()?) };
                if self.op(":") {
                    return None;
                }
                out.push(Index::Slice { lower, upper });
            } else {
                out.push(Index::Expr(lower?));
            }
            if !self.op("]") {
                self.expect(",")?;
            }
        }
        self.pos += 1;
        (!out.is_empty()).then_some(out)
    }

    fn atom(&mut self) -> Option<Expr> {
        let tok = self.peek()?.clone();
        self.pos += 1;
        match tok {
            Tok::Name(n) => {
                if KEYWORDS.contains(&n.as_str()) && !matches!(n.as_str(), "True" | "False" | "None") {
                    return None;
                }
                Some(Expr::name(n))
            }
            Tok::Number(text) => number(&text),
            Tok::Op(o) if o == "(" => {
                if self.op(")") {
                    self.pos += 1;
                    return Some(Expr::new(ExprKind::Tuple(Vec::new())));
                }
                let first = self.expr()?;
                if self.op(")") {
                    self.pos += 1;
                    return Some(first);
                }
                let mut items = vec![first];
                while self.op(",") {
                    self.pos += 1;
                    if self.op(")") {
                        break;
                    }
                    items.push(self.expr()?);
                }
                self.expect(")")?;
                Some(Expr::new(ExprKind::Tuple(items)))
            }
            _ => None,
        }
    }
}

fn number(text: &str) -> Option<Expr> {
    let plain = text.replace('_', "");
    if plain.bytes().all(|b| b.is_ascii_digit()) {
        return plain.parse::<i64>().ok().map(|v| Expr::new(ExprKind::Int(v)));
    }
    let lower = plain.to_ascii_lowercase();
    if lower.starts_with("0x") || lower.starts_with("0o") || lower.starts_with("0b") || lower.ends_with('j') {
        return None;
    }
    plain.parse::<f64>().ok().map(|_| Expr::float(text))
}
