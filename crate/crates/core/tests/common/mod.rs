//! Shared helpers for the integration tests: corpus access and the
//! trace oracle.
#![allow(dead_code)]

pub mod deps;
pub mod gen;
pub mod sets;
pub mod trace;

use std::path::PathBuf;

use loomc::codegen::Options;
use loomc::driver::{compile_source, Compiled};
use loomc::frontend::ast::{Item, KernelFunction, Program};
use loomc::frontend::parse_kernels;
use loomc::kb::default_kb;
use loomc::typeinf::{infer, FunctionTypes};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/corpus")
}

pub fn corpus(name: &str) -> String {
    std::fs::read_to_string(corpus_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Every corpus file, sorted by name.
pub fn corpus_files() -> Vec<(String, String)> {
    let mut names: Vec<String> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".py"))
        .collect();
    names.sort();
    names.into_iter().map(|n| (corpus(&n), n)).map(|(src, n)| (n, src)).collect()
}

pub fn compile_with(src: &str, opts: &Options) -> Compiled {
    compile_source(src, &default_kb(), opts).unwrap_or_else(|d| panic!("{d:?}"))
}

pub fn compile(src: &str) -> Compiled {
    compile_with(src, &Options::default())
}

/// Parsed and typed program with its functions in inference order.
pub fn typed(src: &str) -> (Program, Vec<FunctionTypes>) {
    let mut p = parse_kernels(src).unwrap();
    let t = infer(&mut p, &default_kb());
    (p, t)
}

/// Functions of a program in the order type inference visits them.
pub fn functions(p: &Program) -> Vec<&KernelFunction> {
    fn walk<'a>(items: &'a [Item], out: &mut Vec<&'a KernelFunction>) {
        for i in items {
            match i {
                Item::Function(f) => out.push(f),
                Item::Class(c) => walk(&c.body, out),
                Item::Opaque(_) => {}
            }
        }
    }
    let mut out = Vec::new();
    walk(&p.items, &mut out);
    out
}

/// Lines of the top-level (or method) `def name` block, header included.
pub fn function_block(text: &str, name: &str) -> Vec<String> {
    let lines: Vec<&str> = text.lines().collect();
    let start = lines
        .iter()
        .position(|l| l.trim_start().starts_with(&format!("def {name}(")))
        .unwrap_or_else(|| panic!("no def {name}"));
    let indent = lines[start].len() - lines[start].trim_start().len();
    let mut out = vec![lines[start].to_string()];
    for l in &lines[start + 1..] {
        let ind = l.len() - l.trim_start().len();
        if !l.trim().is_empty() && ind <= indent {
            break;
        }
        out.push(l.to_string());
    }
    while out.last().is_some_and(|l| l.trim().is_empty()) {
        out.pop();
    }
    out
}

/// Body of a function block with one level (four spaces) removed per
/// `levels`.
pub fn dedent(lines: &[String], levels: usize) -> Vec<String> {
    let pad = " ".repeat(4 * levels);
    lines.iter().map(|l| l.strip_prefix(&pad).unwrap_or(l.trim_start()).to_string()).collect()
}

/// Statements under the last `else:` at the function's body level.
pub fn final_else(block: &[String]) -> Vec<String> {
    let body_indent = block[1].len() - block[1].trim_start().len();
    let at = block
        .iter()
        .rposition(|l| l.trim() == "else:" && l.len() - l.trim_start().len() == body_indent)
        .expect("final else");
    block[at + 1..].to_vec()
}

/// Compares with a stored golden file; `LOOMC_BLESS=1` rewrites it.
pub fn golden(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("LOOMC_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e} (run with LOOMC_BLESS=1)", path.display()));
    assert!(want == actual, "{name} differs from the golden file\n--- got ---\n{actual}");
}

/// Problems with repeatability: recompiles that differ and sources where
/// parse, emit, parse is not a fixpoint. Covers the corpus and each
/// compiled output.
pub fn determinism_failures() -> Vec<String> {
    use loomc::frontend::emit_program;
    let mut out = Vec::new();
    let bin = env!("CARGO_BIN_EXE_loomc");
    let dir = tempfile::tempdir().unwrap();
    for (name, src) in corpus_files() {
        let a = compile(&src).text;
        if compile(&src).text != a {
            out.push(format!("{name}: in-process recompile differs"));
        }
        let input = corpus_dir().join(&name);
        let runs: Vec<Vec<u8>> = (0..2)
            .map(|k| {
                let o = dir.path().join(format!("{k}_{name}"));
                let st = std::process::Command::new(bin).arg("compile").arg(&input).arg("-o").arg(&o).env_remove("LOOMC_KB").status().unwrap();
                assert!(st.success(), "{name}");
                std::fs::read(&o).unwrap()
            })
            .collect();
        if runs[0] != runs[1] || runs[0] != a.as_bytes() {
            out.push(format!("{name}: command-line recompile differs"));
        }
        for (what, text) in [("source", &src), ("output", &a)] {
            let p1 = match parse_kernels(text) {
                Ok(p) => p,
                Err(d) => {
                    out.push(format!("{name} {what}: does not parse: {d:?}"));
                    continue;
                }
            };
            let e1 = emit_program(&p1);
            let p2 = parse_kernels(&e1).expect("emitted text parses");
            if emit_program(&p2) != e1 || p1 != p2 {
                out.push(format!("{name} {what}: parse-emit-parse is not a fixpoint"));
            }
        }
    }
    out
}
