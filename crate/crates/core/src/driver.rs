//! The compile pipeline behind the command line: parse, infer, extract,
//! schedule, generate, then check the result parses again.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use crate::codegen::{generate, Generated, Options};
use crate::frontend::{emit_program, parse_kernels, Diagnostic};
use crate::kb::{default_kb, load_kb, KnowledgeBase};
use crate::typeinf::{dump_types, infer, FunctionTypes};

/// Environment variable naming a knowledge base when `--kb` is absent.
pub const KB_ENV: &str = "LOOMC_KB";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Dumps {
    pub types: bool,
    pub scop: bool,
    pub schedule: bool,
}

#[derive(Clone, Debug)]
pub struct CompileConfig {
    pub input: PathBuf,
    pub output: PathBuf,
    pub kb: Option<PathBuf>,
    pub options: Options,
    pub dumps: Dumps,
    pub fail_on_no_opt: bool,
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub code: i32,
    /// Requested dumps, for standard output.
    pub dump: String,
    /// `file:line:col: severity: message` lines, for standard error.
    pub messages: Vec<String>,
}

pub struct Compiled {
    pub text: String,
    pub types: Vec<FunctionTypes>,
    pub generated: Generated,
}

/// Runs the pipeline on source text. Errors are parse diagnostics.
pub fn compile_source(src: &str, kb: &KnowledgeBase, opts: &Options) -> Result<Compiled, Vec<Diagnostic>> {
    let mut prog = parse_kernels(src)?;
    let types = infer(&mut prog, kb);
    let generated = generate(&prog, &types, kb, opts);
    let text = emit_program(&generated.program);
    Ok(Compiled { text, types, generated })
}

pub fn render_dumps(c: &Compiled, d: Dumps) -> String {
    let mut out = String::new();
    if d.types {
        out.push_str(&dump_types(&c.types));
    }
    for f in &c.generated.functions {
        for r in &f.regions {
            if d.scop {
                out.push_str(&r.scop.dump());
            }
            if d.schedule {
                out.push_str(&r.schedule.dump(&r.scop, &r.deps));
            }
        }
    }
    out
}

fn resolve_kb(cfg: &CompileConfig) -> Result<KnowledgeBase, (PathBuf, crate::kb::KbError)> {
    let path = cfg.kb.clone().or_else(|| std::env::var_os(KB_ENV).filter(|v| !v.is_empty()).map(PathBuf::from));
    match path {
        Some(p) => load_kb(&p).map_err(|e| (p, e)),
        None => Ok(default_kb()),
    }
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

pub fn compile(cfg: &CompileConfig) -> Outcome {
    let mut out = Outcome::default();
    let name = cfg.input.display().to_string();
    let fail = |out: &mut Outcome, file: &str, line: usize, col: usize, msg: String, code: i32| {
        out.messages.push(format!("{file}:{line}:{col}: error: {msg}"));
        out.code = code;
    };
    if same_file(&cfg.input, &cfg.output) {
        fail(&mut out, &name, 1, 1, "output path must differ from the input path".into(), 1);
        return out;
    }
    let src = match std::fs::read_to_string(&cfg.input) {
        Ok(s) => s,
        Err(e) => {
            fail(&mut out, &name, 1, 1, format!("cannot read input: {e}"), 1);
            return out;
        }
    };
    let kb = match resolve_kb(cfg) {
        Ok(kb) => kb,
        Err((p, e)) => {
            let (l, c) = e.position();
            fail(&mut out, &p.display().to_string(), l, c, e.to_string(), 1);
            return out;
        }
    };
    let run = catch_unwind(AssertUnwindSafe(|| compile_source(&src, &kb, &cfg.options)));
    let compiled = match run {
        Ok(Ok(c)) => c,
        Ok(Err(diags)) => {
            for d in diags {
                out.messages.push(format!("{name}:{d}"));
            }
            out.code = 1;
            return out;
        }
        Err(_) => {
            fail(&mut out, &name, 1, 1, "internal error during compilation".into(), 2);
            return out;
        }
    };
    if let Err(d) = parse_kernels(&compiled.text) {
        let first = d.first().map(|d| d.to_string()).unwrap_or_default();
        fail(&mut out, &name, 1, 1, format!("internal error: generated code does not parse ({first})"), 2);
        return out;
    }
    out.dump = render_dumps(&compiled, cfg.dumps);
    for d in &compiled.generated.diagnostics {
        out.messages.push(format!("{name}:{d}"));
    }
    if cfg.fail_on_no_opt && !compiled.generated.optimized() {
        fail(&mut out, &name, 1, 1, "no optimization applied".into(), 1);
        return out;
    }
    if let Err(e) = std::fs::write(&cfg.output, &compiled.text) {
        fail(&mut out, &cfg.output.display().to_string(), 1, 1, format!("cannot write output: {e}"), 1);
        return out;
    }
    out
}
