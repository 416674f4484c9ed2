//! One line per acceptance criterion, written straight to stderr so it
//! shows even when the harness captures output.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use common::deps::check_source;
use common::sets::{check_case, sample, SetViolations};
use common::{compile, corpus, dedent, final_else, function_block};
use loomc::codegen::Options;
use loomc::scheduler::policies;

struct Line {
    ok: bool,
    name: &'static str,
    detail: String,
}

fn set_algebra() -> Line {
    let t = Instant::now();
    let mut v = SetViolations::default();
    let cases = sample(1000);
    for (a, b, keep, p) in &cases {
        check_case(a, b, keep, *p, &mut v);
    }
    let el = t.elapsed();
    Line {
        ok: v.total() == 0 && el < Duration::from_secs(30),
        name: "set algebra",
        detail: format!(
            "{} random sets; violations: emptiness {}, projection {}, intersection {}; {:.1}s (limit 30s)",
            cases.len(),
            v.empty.len(),
            v.projection.len(),
            v.intersection.len(),
            el.as_secs_f64()
        ),
    }
}

fn dependence() -> Line {
    let t = Instant::now();
    let src = corpus("micro.py");
    let (mut kernels, mut pairs, mut marks, mut bad) = (0, 0, 0, Vec::new());
    for p in policies() {
        let opts = Options {
            policy: Some(p.name().to_string()),
            ..Options::default()
        };
        let r = check_source(&src, &opts);
        kernels = r.len();
        for (_, r) in r {
            pairs += r.pairs;
            marks += r.parallel_marks;
            bad.extend(r.uncovered);
            bad.extend(r.bad_parallel);
        }
    }
    let el = t.elapsed();
    Line {
        ok: bad.is_empty() && kernels >= 10 && el < Duration::from_secs(60),
        name: "dependence",
        detail: format!(
            "{kernels} kernels x {} policies; {pairs} conflicting pairs, {marks} parallel marks, {} violations{}; {:.1}s (limit 60s)",
            policies().len(),
            bad.len(),
            bad.first().map(|b| format!(" (first: {b})")).unwrap_or_default(),
            el.as_secs_f64()
        ),
    }
}

fn correlation() -> Line {
    let src = corpus("correlation_numpy.py");
    let out = compile(&src).text;
    let dot = out.contains("= np.dot(data[0:self.N, 0:self.M - 1].T, data[0:self.N, 1:self.M])");
    let triu = out.contains("corr[0:self.M - 1, 1:self.M] = np.where(np.triu(");
    let block = function_block(&out, "kernel");
    let verbatim = dedent(&final_else(&block), 2) == dedent(&function_block(&src, "kernel")[1..], 1);
    let guards = block[1].trim_start().starts_with("if type(") && block[2].trim_start().starts_with("if data.ndim == 2");
    Line {
        ok: dot && triu && verbatim && guards,
        name: "correlation golden",
        detail: format!("np.dot of transpose {dot}, np.triu copy-out {triu}, guard tree {guards}, final else verbatim {verbatim}"),
    }
}

fn stap() -> Line {
    let c = compile(&corpus("stap.py"));
    let f = &c.generated.functions[0];
    let pfors: Vec<_> = f.regions.iter().flat_map(|r| r.schedule.pfors()).cloned().collect();
    let one = pfors.len() == 1;
    let p = &pfors[0];
    let stu = p.members == [0, 1, 2];
    let sets = !p.output.is_empty() && !p.input.is_empty();
    let code = c.text.matches("amphc_rt.submit(").count() == 1 && c.text.contains("transfer=cupy)");
    Line {
        ok: one && stu && sets && p.transfer && code,
        name: "STAP golden",
        detail: format!(
            "{} pfor band(s), members {:?}, output {:?}, input {:?}, transfer {}",
            pfors.len(),
            p.members,
            p.output,
            p.input,
            p.transfer
        ),
    }
}

fn determinism() -> Line {
    let f = common::determinism_failures();
    Line {
        ok: f.is_empty(),
        name: "determinism",
        detail: format!(
            "{} corpus files recompiled in and out of process, parse-emit-parse checked; {} failures{}",
            common::corpus_files().len(),
            f.len(),
            f.first().map(|x| format!(" (first: {x})")).unwrap_or_default()
        ),
    }
}

#[test]
fn acceptance() {
    let lines = [set_algebra(), dependence(), correlation(), stap(), determinism()];
    let mut err = std::io::stderr().lock();
    for l in &lines {
        let _ = writeln!(err, "acceptance: {} {}: {}", if l.ok { "PASS" } else { "FAIL" }, l.name, l.detail);
    }
    let failed: Vec<&str> = lines.iter().filter(|l| !l.ok).map(|l| l.name).collect();
    assert!(failed.is_empty(), "failed: {failed:?}");
}
