use std::collections::BTreeSet;

use crate::typeinf::SemType;

/// Source position and, for leaf statements, the original text.
///
/// Never participates in equality: two trees are structurally equal
/// regardless of where they came from.
#[derive(Clone, Debug, Default)]
pub struct Origin {
    pub line: usize,
    pub col: usize,
    pub text: Option<RawText>,
    /// Comment lines directly above the statement, without indentation.
    pub comments: Vec<String>,
}

impl PartialEq for Origin {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Origin {
    pub fn at(line: usize, col: usize) -> Self {
        Origin {
            line,
            col,
            text: None,
            comments: Vec::new(),
        }
    }
}

/// Source text of a statement with its base indentation removed.
///
/// Lines flagged `verbatim` start inside a multi-line string literal and
/// are reproduced without re-indentation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawText {
    pub lines: Vec<String>,
    pub verbatim: Vec<bool>,
}

impl RawText {
    pub fn single(line: impl Into<String>) -> Self {
        RawText {
            lines: vec![line.into()],
            verbatim: vec![false],
        }
    }

    pub fn render(&self, indent: &str) -> String {
        let mut out = String::new();
        for (k, (line, verbatim)) in self.lines.iter().zip(&self.verbatim).enumerate() {
            if k > 0 {
                out.push('\n');
            }
            if *verbatim || line.is_empty() {
                out.push_str(line);
            } else {
                out.push_str(indent);
                out.push_str(line);
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    pub items: Vec<Item>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Item {
    Function(KernelFunction),
    Class(ClassDef),
    /// Top-level text outside any kernel (imports, globals, comments).
    Opaque(RawText),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassDef {
    pub header: String,
    pub body: Vec<Item>,
    pub origin: Origin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnnotationKind {
    Int,
    Float,
    Bool,
    List,
    Ndarray,
    Other,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeAnnotation {
    pub kind: AnnotationKind,
    pub text: String,
}

impl TypeAnnotation {
    pub fn from_text(text: &str) -> Self {
        let last = text.rsplit('.').next().unwrap_or(text);
        let kind = match (text, last) {
            ("int", _) => AnnotationKind::Int,
            ("float", _) => AnnotationKind::Float,
            ("bool", _) => AnnotationKind::Bool,
            ("list", _) | ("List", _) => AnnotationKind::List,
            (_, "ndarray") => AnnotationKind::Ndarray,
            _ => AnnotationKind::Other,
        };
        TypeAnnotation {
            kind,
            text: text.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: String,
    pub annotation: Option<TypeAnnotation>,
    pub default: Option<Expr>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelFunction {
    pub name: String,
    pub params: Vec<Param>,
    pub return_annotation: Option<TypeAnnotation>,
    pub body: Vec<Stmt>,
    pub origin: Origin,
}

impl KernelFunction {
    /// A leading `self` is the method receiver, not a kernel parameter.
    pub fn has_receiver(&self) -> bool {
        self.params.first().is_some_and(|p| p.name == "self" && p.annotation.is_none())
    }

    pub fn kernel_params(&self) -> impl Iterator<Item = &Param> {
        self.params.iter().skip(usize::from(self.has_receiver()))
    }

    /// Functions with an unannotated parameter are compiled as-is.
    pub fn fully_annotated(&self) -> bool {
        self.kernel_params().all(|p| p.annotation.is_some())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub origin: Origin,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StmtKind {
    For {
        var: String,
        lower: Option<Expr>,
        upper: Expr,
        step: Option<Expr>,
        body: Vec<Stmt>,
    },
    If {
        cond: Expr,
        body: Vec<Stmt>,
        orelse: Vec<Stmt>,
    },
    Assign {
        target: Expr,
        value: Expr,
    },
    AugAssign {
        target: Expr,
        op: BinOp,
        value: Expr,
    },
    ExprCall(Expr),
    Return(Option<Expr>),
    BlackBox(BlackBox),
    /// Only produced by code generation.
    Comment(String),
}

/// Unanalyzable statement kept as opaque text with conservative effects.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlackBox {
    pub text: RawText,
    /// Every identifier (and `self.x` path) occurring in the text.
    pub reads: BTreeSet<String>,
    /// Names assigned, passed to calls, or used as method receivers.
    pub writes: BTreeSet<String>,
    /// Names rebound by assignment, a subset of `writes`.
    pub assigns: BTreeSet<String>,
    pub has_call: bool,
}

impl Stmt {
    pub fn new(kind: StmtKind) -> Self {
        Stmt {
            kind,
            origin: Origin::default(),
        }
    }

    /// Drops the recorded source text so the statement is re-emitted from
    /// its tree (required after any rewrite).
    pub fn strip_text(&mut self) {
        if !matches!(self.kind, StmtKind::BlackBox(_)) {
            self.origin.text = None;
        }
        match &mut self.kind {
            StmtKind::For { body, .. } => body.iter_mut().for_each(Stmt::strip_text),
            StmtKind::If { body, orelse, .. } => {
                body.iter_mut().for_each(Stmt::strip_text);
                orelse.iter_mut().for_each(Stmt::strip_text);
            }
            _ => {}
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "**",
        }
    }

    /// Name of the knowledge-base entry implementing this operator.
    pub fn kb_name(self) -> &'static str {
        match self {
            BinOp::Add => "add",
            BinOp::Sub => "sub",
            BinOp::Mul => "mult",
            BinOp::Div => "div",
            BinOp::Pow => "pow",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoolOp {
    And,
    Or,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub ty: SemType,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Int(i64),
    /// Kept as written so emission is exact.
    Float(String),
    Name(String),
    BinOp {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Neg(Box<Expr>),
    Not(Box<Expr>),
    Compare {
        op: CmpOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    BoolOp {
        op: BoolOp,
        values: Vec<Expr>,
    },
    Subscript {
        base: Box<Expr>,
        indices: Vec<Index>,
    },
    Attribute {
        base: Box<Expr>,
        attr: String,
    },
    Call {
        func: Box<Expr>,
        args: Vec<Expr>,
        kwargs: Vec<(String, Expr)>,
    },
    Tuple(Vec<Expr>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Index {
    Expr(Expr),
    Slice { lower: Option<Expr>, upper: Option<Expr> },
}

impl Expr {
    pub fn new(kind: ExprKind) -> Self {
        Expr {
            kind,
            ty: SemType::Unknown,
        }
    }

    pub fn int(v: i64) -> Self {
        if v < 0 {
            Expr::neg(Expr::new(ExprKind::Int(-v)))
        } else {
            Expr::new(ExprKind::Int(v))
        }
    }

    pub fn float(text: impl Into<String>) -> Self {
        Expr::new(ExprKind::Float(text.into()))
    }

    pub fn name(n: impl Into<String>) -> Self {
        Expr::new(ExprKind::Name(n.into()))
    }

    pub fn neg(e: Expr) -> Self {
        Expr::new(ExprKind::Neg(Box::new(e)))
    }

    pub fn bin(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::new(ExprKind::BinOp {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        })
    }

    pub fn cmp(op: CmpOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::new(ExprKind::Compare {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        })
    }

    pub fn and(values: Vec<Expr>) -> Self {
        if values.len() == 1 {
            return values.into_iter().next().unwrap();
        }
        Expr::new(ExprKind::BoolOp { op: BoolOp::And, values })
    }

    pub fn attr(base: Expr, attr: impl Into<String>) -> Self {
        Expr::new(ExprKind::Attribute {
            base: Box::new(base),
            attr: attr.into(),
        })
    }

    pub fn call(func: Expr, args: Vec<Expr>, kwargs: Vec<(String, Expr)>) -> Self {
        Expr::new(ExprKind::Call {
            func: Box::new(func),
            args,
            kwargs,
        })
    }

    pub fn subscript(base: Expr, indices: Vec<Index>) -> Self {
        Expr::new(ExprKind::Subscript {
            base: Box::new(base),
            indices,
        })
    }

    /// Dotted path for names and attribute chains (`np.fft.fft`).
    pub fn dotted(&self) -> Option<String> {
        match &self.kind {
            ExprKind::Name(n) => Some(n.clone()),
            ExprKind::Attribute { base, attr } => Some(format!("{}.{}", base.dotted()?, attr)),
            _ => None,
        }
    }

    pub fn walk(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        match &self.kind {
            ExprKind::BinOp { lhs, rhs, .. } | ExprKind::Compare { lhs, rhs, .. } => {
                lhs.walk(f);
                rhs.walk(f);
            }
            ExprKind::Neg(e) | ExprKind::Not(e) => e.walk(f),
            ExprKind::BoolOp { values, .. } | ExprKind::Tuple(values) => values.iter().for_each(|v| v.walk(f)),
            ExprKind::Subscript { base, indices } => {
                base.walk(f);
                for ix in indices {
                    match ix {
                        Index::Expr(e) => e.walk(f),
                        Index::Slice { lower, upper } => {
                            if let Some(e) = lower {
                                e.walk(f);
                            }
                            if let Some(e) = upper {
                                e.walk(f);
                            }
                        }
                    }
                }
            }
            ExprKind::Attribute { base, .. } => base.walk(f),
            ExprKind::Call { func, args, kwargs } => {
                func.walk(f);
                args.iter().for_each(|a| a.walk(f));
                kwargs.iter().for_each(|(_, v)| v.walk(f));
            }
            ExprKind::Int(_) | ExprKind::Float(_) | ExprKind::Name(_) => {}
        }
    }

    pub fn map_names(&self, f: &dyn Fn(&str) -> Option<Expr>) -> Expr {
        let kind = match &self.kind {
            ExprKind::Name(n) => match f(n) {
                Some(e) => return e,
                None => ExprKind::Name(n.clone()),
            },
            ExprKind::Int(_) | ExprKind::Float(_) => self.kind.clone(),
            ExprKind::BinOp { op, lhs, rhs } => ExprKind::BinOp {
                op: *op,
                lhs: Box::new(lhs.map_names(f)),
                rhs: Box::new(rhs.map_names(f)),
            },
            ExprKind::Compare { op, lhs, rhs } => ExprKind::Compare {
                op: *op,
                lhs: Box::new(lhs.map_names(f)),
                rhs: Box::new(rhs.map_names(f)),
            },
            ExprKind::Neg(e) => ExprKind::Neg(Box::new(e.map_names(f))),
            ExprKind::Not(e) => ExprKind::Not(Box::new(e.map_names(f))),
            ExprKind::BoolOp { op, values } => ExprKind::BoolOp {
                op: *op,
                values: values.iter().map(|v| v.map_names(f)).collect(),
            },
            ExprKind::Tuple(values) => ExprKind::Tuple(values.iter().map(|v| v.map_names(f)).collect()),
            ExprKind::Subscript { base, indices } => ExprKind::Subscript {
                base: Box::new(base.map_names(f)),
                indices: indices
                    .iter()
                    .map(|ix| match ix {
                        Index::Expr(e) => Index::Expr(e.map_names(f)),
                        Index::Slice { lower, upper } => Index::Slice {
                            lower: lower.as_ref().map(|e| e.map_names(f)),
                            upper: upper.as_ref().map(|e| e.map_names(f)),
                        },
                    })
                    .collect(),
            },
            ExprKind::Attribute { base, attr } => ExprKind::Attribute {
                base: Box::new(base.map_names(f)),
                attr: attr.clone(),
            },
            ExprKind::Call { func, args, kwargs } => ExprKind::Call {
                func: Box::new(func.map_names(f)),
                args: args.iter().map(|a| a.map_names(f)).collect(),
                kwargs: kwargs.iter().map(|(k, v)| (k.clone(), v.map_names(f))).collect(),
            },
        };
        Expr { kind, ty: self.ty }
    }
}
