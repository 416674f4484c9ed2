use super::*;
use crate::frontend::parse_expr;

fn arr(rank: u32) -> SemType {
    SemType::array(Elem::Float, rank)
}

#[test]
fn shipped_kb_loads_without_overlap() {
    let kb = default_kb();
    assert!(kb.entries.len() >= 30);
    // Independent pairwise check: two entries may share a name only if
    // their keywords or argument ranks tell them apart.
    for (a, x) in kb.entries.iter().enumerate() {
        for y in &kb.entries[a + 1..] {
            let same = x.def.function_id == y.def.function_id
                && x.def.keywords == y.def.keywords
                && x.def.args.iter().map(|p| p.rank).collect::<Vec<_>>()
                    == y.def.args.iter().map(|p| p.rank).collect::<Vec<_>>();
            assert!(!same, "{} vs {}", x.name(), y.name());
        }
    }
}

#[test]
fn table_rows_are_present() {
    let kb = default_kb();
    let dot = kb.lookup("dot", &[arr(2), arr(2)], &[]).unwrap();
    assert_eq!(dot.name(), "dot_2D2D");
    assert_eq!(dot.def.compute_kind, ComputeKind::Reduction);
    let s = kb.lookup("sum", &[arr(2)], &[("axis".into(), 1)]).unwrap();
    assert_eq!(s.name(), "sum_2D_axis1");
    assert_eq!(s.result_type(&[arr(2)]), arr(1));
    let f = kb.lookup("fft", &[arr(2)], &[("axis".into(), 1)]).unwrap();
    assert_eq!(f.def.compute_kind, ComputeKind::OpaquePerRow);
    assert_eq!(f.result_type(&[arr(2)]), SemType::array(Elem::Complex, 2));
    assert!(kb.lookup("transpose", &[arr(2)], &[]).is_some());
    assert!(kb.lookup("mult", &[arr(1), arr(2)], &[]).is_some());
    assert!(kb.lookup("sum", &[arr(1)], &[]).is_some());
    assert!(kb.lookup("sum", &[arr(2)], &[("axis".into(), 0)]).is_none());
    assert!(kb.lookup("dot", &[arr(3), arr(2)], &[]).is_none());
}

#[test]
fn dot_instance_reads_rows_and_columns() {
    let kb = default_kb();
    let dot = kb.lookup("dot", &[arr(2), arr(2)], &[]).unwrap();
    let sh = |a: &str| vec![AffineExpr::var(format!("{a}.shape[0]")), AffineExpr::var(format!("{a}.shape[1]"))];
    let inst = instantiate_dataflow(dot, &["x", "y"], &[sh("x"), sh("y")]).unwrap();
    assert_eq!(inst.iters, vec!["i0", "i1"]);
    assert_eq!(inst.sem.to_string(), "sum(k0 in 0..x.shape[1]: mult(x[i0, k0], y[k0, i1]))");
    assert_eq!(inst.reads.len(), 2);
    let p = |s: &str| match s {
        "x.shape[0]" => Some(2),
        "y.shape[1]" => Some(3),
        _ => Some(4),
    };
    assert_eq!(inst.domain.enumerate(&p, 10).len(), 6);
}

#[test]
fn resolves_call_spellings() {
    let id = |src: &str| resolve_call(&parse_expr(src).unwrap()).map(|c| (c.function_id, c.args.len()));
    assert_eq!(id("np.dot(a, b)"), Some(("dot".into(), 2)));
    assert_eq!(id("numpy.fft.fft(a, axis=1)"), Some(("fft".into(), 1)));
    assert_eq!(id("a.sum(axis=1)"), Some(("sum".into(), 1)));
    assert_eq!(id("a.T"), Some(("transpose".into(), 1)));
    assert_eq!(id("a * b"), Some(("mult".into(), 2)));
    assert_eq!(id("np.multiply(a, b)"), Some(("mult".into(), 2)));
    assert_eq!(id("f(a)"), None);
}

#[test]
fn invalid_entries_are_reported() {
    let base = r#"{"function_id":"neg","args":[{"rank":1}],"result":{"rank":1,"elem":"first"},
        "domain":[{"iter":"i0","extent":"A1.shape[0]"}],"dataflow":"R[i0] := A1[i0]","compute_kind":"elementwise"}"#;
    assert_eq!(parse_kb(&format!("[{base}]")).unwrap().entries.len(), 1);
    let bad = [
        base.replace("A1.shape[0]", "A2.shape[0]"),
        base.replace("A1.shape[0]", "A1.shape[1]"),
        base.replace("R[i0] := A1[i0]", "R[i0] := A1[i1]"),
        base.replace("\"elementwise\"", "\"reduction\""),
        base.replace("\"rank\":1,\"elem\"", "\"rank\":2,\"elem\""),
    ];
    for b in bad {
        assert!(matches!(parse_kb(&format!("[{b}]")), Err(KbError::Invalid { .. })), "{b}");
    }
    assert!(matches!(parse_kb(&format!("[{base},{base}]")), Err(KbError::Overlap { .. })));
    let err = parse_kb("{\"entries\": [\n  {oops}]}").unwrap_err();
    assert_eq!(err.position().0, 2);
    assert!(parse_kb("  \n").unwrap().is_empty());
}
