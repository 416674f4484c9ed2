//! Line-oriented tokenizer for the accepted Python subset.
//!
//! Produces INDENT/DEDENT/NEWLINE tokens the way CPython's tokenizer does,
//! suppressing newlines inside brackets and after backslash continuations.
//! Anything it cannot tokenize is a syntax error; anything it can tokenize
//! but the parser does not understand becomes a black-box statement.

use std::collections::BTreeSet;

use super::Diagnostic;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Name(String),
    Number(String),
    Str(String),
    Op(String),
    Newline,
    Indent,
    Dedent,
    End,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug)]
pub struct Lexed {
    pub tokens: Vec<Token>,
    /// 1-based line numbers that begin inside a multi-line string literal.
    pub string_lines: BTreeSet<usize>,
}

const THREE: [&str; 3] = ["**=", "//=", "..."];
const TWO: [&str; 18] = [
    "**", "//", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=", "->", "<<", ">>", "&=", "|=", "^=", "@=",
];
const ONE: &str = "+-*/%@<>=()[]{},:.;&|^~";

pub fn tokenize(src: &str) -> Result<Lexed, Diagnostic> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut string_lines = BTreeSet::new();
    let mut indents: Vec<usize> = vec![0];
    let mut depth: Vec<(char, usize, usize)> = Vec::new();
    let mut pos = 0usize;
    let mut line = 1usize;
    let mut line_start = 0usize;
    let mut at_line_start = true;

    let push = |tokens: &mut Vec<Token>, tok: Tok, line: usize, col: usize, start: usize, end: usize| {
        tokens.push(Token {
            tok,
            line,
            col,
            start,
            end,
        });
    };

    while pos < bytes.len() {
        if at_line_start && depth.is_empty() {
            // Measure indentation; skip blank and comment-only lines.
            let mut p = pos;
            let mut width = 0usize;
            while p < bytes.len() && (bytes[p] == b' ' || bytes[p] == b'\t') {
                width += if bytes[p] == b'\t' { 8 - width % 8 } else { 1 };
                p += 1;
            }
            if p >= bytes.len() {
                break;
            }
            if bytes[p] == b'\n' || bytes[p] == b'\r' || bytes[p] == b'#' {
                while p < bytes.len() && bytes[p] != b'\n' {
                    p += 1;
                }
                pos = p + 1;
                line += 1;
                line_start = pos;
                continue;
            }
            let cur = *indents.last().unwrap();
            if width > cur {
                indents.push(width);
                push(&mut tokens, Tok::Indent, line, width + 1, p, p);
            } else {
                while width < *indents.last().unwrap() {
                    indents.pop();
                    push(&mut tokens, Tok::Dedent, line, width + 1, p, p);
                }
                if width != *indents.last().unwrap() {
                    return Err(Diagnostic::error(line, width + 1, "unindent does not match any outer indentation level"));
                }
            }
            pos = p;
            at_line_start = false;
            continue;
        }
        let c = bytes[pos];
        let col = pos - line_start + 1;
        match c {
            b' ' | b'\t' | b'\x0c' => pos += 1,
            b'\r' => pos += 1,
            b'#' => {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            }
            b'\\' if bytes.get(pos + 1) == Some(&b'\n') => {
                pos += 2;
                line += 1;
                line_start = pos;
            }
            b'\n' => {
                if depth.is_empty() {
                    push(&mut tokens, Tok::Newline, line, col, pos, pos);
                    at_line_start = true;
                }
                pos += 1;
                line += 1;
                line_start = pos;
            }
            b'0'..=b'9' => {
                let start = pos;
                pos = scan_number(bytes, pos);
                push(&mut tokens, Tok::Number(src[start..pos].to_string()), line, col, start, pos);
            }
            b'.' if bytes.get(pos + 1).is_some_and(|b| b.is_ascii_digit()) => {
                let start = pos;
                pos = scan_number(bytes, pos);
                push(&mut tokens, Tok::Number(src[start..pos].to_string()), line, col, start, pos);
            }
            _ if c == b'_' || c.is_ascii_alphabetic() || c >= 0x80 => {
                let start = pos;
                while pos < bytes.len() && (bytes[pos] == b'_' || bytes[pos].is_ascii_alphanumeric() || bytes[pos] >= 0x80) {
                    pos += 1;
                }
                let word = &src[start..pos];
                let is_prefix = word.len() <= 2
                    && word.chars().all(|ch| "rRbBuUfF".contains(ch))
                    && matches!(bytes.get(pos), Some(b'\'') | Some(b'"'));
                if is_prefix {
                    let (end, nl) = scan_string(src, pos).ok_or_else(|| Diagnostic::error(line, col, "unterminated string literal"))?;
                    for k in 1..=nl {
                        string_lines.insert(line + k);
                    }
                    push(&mut tokens, Tok::Str(src[start..end].to_string()), line, col, start, end);
                    line += nl;
                    if nl > 0 {
                        line_start = src[..end].rfind('\n').map(|i| i + 1).unwrap_or(0);
                    }
                    pos = end;
                } else {
                    push(&mut tokens, Tok::Name(word.to_string()), line, col, start, pos);
                }
            }
            b'\'' | b'"' => {
                let start = pos;
                let (end, nl) = scan_string(src, pos).ok_or_else(|| Diagnostic::error(line, col, "unterminated string literal"))?;
                for k in 1..=nl {
                    string_lines.insert(line + k);
                }
                push(&mut tokens, Tok::Str(src[start..end].to_string()), line, col, start, end);
                line += nl;
                if nl > 0 {
                    line_start = src[..end].rfind('\n').map(|i| i + 1).unwrap_or(0);
                }
                pos = end;
            }
            _ => {
                let rest = &src[pos..];
                let op = THREE
                    .iter()
                    .chain(TWO.iter())
                    .find(|o| rest.starts_with(**o))
                    .map(|o| o.to_string())
                    .or_else(|| ONE.contains(c as char).then(|| (c as char).to_string()));
                let Some(op) = op else {
                    return Err(Diagnostic::error(line, col, format!("invalid character `{}`", rest.chars().next().unwrap())));
                };
                match op.as_str() {
                    "(" | "[" | "{" => depth.push((op.chars().next().unwrap(), line, col)),
                    ")" | "]" | "}" => {
                        let want = match op.as_str() {
                            ")" => '(',
                            "]" => '[',
                            _ => '{',
                        };
                        match depth.pop() {
                            Some((open, _, _)) if open == want => {}
                            _ => return Err(Diagnostic::error(line, col, format!("unmatched `{op}`"))),
                        }
                    }
                    _ => {}
                }
                let len = op.len();
                push(&mut tokens, Tok::Op(op), line, col, pos, pos + len);
                pos += len;
            }
        }
    }
    if let Some((open, l, c)) = depth.pop() {
        return Err(Diagnostic::error(l, c, format!("`{open}` was never closed")));
    }
    let end = bytes.len();
    if !matches!(tokens.last().map(|t| &t.tok), None | Some(Tok::Newline) | Some(Tok::Dedent)) {
        push(&mut tokens, Tok::Newline, line, 1, end, end);
    }
    while indents.len() > 1 {
        indents.pop();
        push(&mut tokens, Tok::Dedent, line, 1, end, end);
    }
    push(&mut tokens, Tok::End, line, 1, end, end);
    Ok(Lexed { tokens, string_lines })
}

fn scan_number(bytes: &[u8], mut pos: usize) -> usize {
    while pos < bytes.len() {
        let b = bytes[pos];
        if b.is_ascii_alphanumeric() || b == b'.' || b == b'_' {
            if (b == b'e' || b == b'E') && matches!(bytes.get(pos + 1), Some(b'+') | Some(b'-')) {
                pos += 2;
                continue;
            }
            pos += 1;
        } else {
            break;
        }
    }
    pos
}

/// Returns the end offset of the string literal starting at `pos` and the
/// number of newlines it spans.
fn scan_string(src: &str, pos: usize) -> Option<(usize, usize)> {
    let bytes = src.as_bytes();
    let q = bytes[pos];
    let triple = bytes.get(pos + 1) == Some(&q) && bytes.get(pos + 2) == Some(&q);
    let mut p = if triple { pos + 3 } else { pos + 1 };
    let mut nl = 0;
    while p < bytes.len() {
        let b = bytes[p];
        if b == b'\\' {
            if bytes.get(p + 1) == Some(&b'\n') {
                nl += 1;
            }
            p += 2;
            continue;
        }
        if b == b'\n' {
            if !triple {
                return None;
            }
            nl += 1;
        }
        if b == q {
            if !triple {
                return Some((p + 1, nl));
            }
            if bytes.get(p + 1) == Some(&q) && bytes.get(p + 2) == Some(&q) {
                return Some((p + 3, nl));
            }
        }
        p += 1;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().tokens.into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn indentation_tokens() {
        let toks = kinds("for i in x:\n    a = 1\nb = 2\n");
        assert!(toks.contains(&Tok::Indent));
        assert!(toks.contains(&Tok::Dedent));
        assert_eq!(toks.last(), Some(&Tok::End));
    }

    #[test]
    fn brackets_suppress_newlines() {
        let toks = kinds("a = f(1,\n      2)\n");
        assert_eq!(toks.iter().filter(|t| **t == Tok::Newline).count(), 1);
    }

    #[test]
    fn triple_string_lines_recorded() {
        let lx = tokenize("x = '''a\nb\nc'''\ny = 1\n").unwrap();
        assert_eq!(lx.string_lines.into_iter().collect::<Vec<_>>(), vec![2, 3]);
    }

    #[test]
    fn errors_are_positioned() {
        let e = tokenize("a = (1,\n").unwrap_err();
        assert_eq!((e.line, e.col), (1, 5));
        let e = tokenize("if x:\n        a = 1\n    b = 2\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(tokenize("s = 'abc\n").is_err());
        assert!(tokenize("a = 1 $ 2\n").is_err());
    }

    #[test]
    fn operators_longest_match() {
        let toks = kinds("a **= b // c\n");
        assert!(toks.contains(&Tok::Op("**=".into())));
        assert!(toks.contains(&Tok::Op("//".into())));
    }
}
