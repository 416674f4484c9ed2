use super::*;
use crate::frontend::emit_program;

const CORR_LIST: &str = "\
def kernel(self, float_n: float, data: list, corr: list, mean: list, stddev: list):
    for i in range(0, self.M-1):
        corr[i][i] = 1.0
        for j in range(i+1, self.M):
            corr[i][j] = 0.0
            for k in range(0, self.N):
                corr[i][j] += (data[k][i] * data[k][j])
            corr[j][i] = corr[i][j]
    corr[self.M-1][self.M-1] = 1.0
";

fn only_fn(p: &Program) -> &KernelFunction {
    p.items
        .iter()
        .find_map(|i| match i {
            Item::Function(f) => Some(f),
            _ => None,
        })
        .unwrap()
}

#[test]
fn corr_list_is_a_triple_nest() {
    let p = parse_kernels(CORR_LIST).unwrap();
    let f = only_fn(&p);
    assert!(f.has_receiver() && f.fully_annotated());
    assert_eq!(f.body.len(), 2);
    let StmtKind::For { body, .. } = &f.body[0].kind else { panic!() };
    let StmtKind::For { body, .. } = &body[1].kind else { panic!() };
    let StmtKind::For { body, .. } = &body[1].kind else { panic!() };
    assert!(matches!(body[0].kind, StmtKind::AugAssign { op: BinOp::Add, .. }));
}

#[test]
fn round_trip_reproduces_leaf_text() {
    let p = parse_kernels(CORR_LIST).unwrap();
    let out = emit_program(&p);
    assert_eq!(out, CORR_LIST);
    assert_eq!(parse_kernels(&out).unwrap(), p);
}

#[test]
fn while_becomes_black_box_with_reads() {
    let src = "def f(n: int, a: ndarray):\n    flag = n > 0\n    while flag:\n        a[0] = g(a)\n        flag = False\n";
    let p = parse_kernels(src).unwrap();
    let f = only_fn(&p);
    let StmtKind::BlackBox(bb) = &f.body[1].kind else { panic!() };
    for n in ["flag", "a", "g"] {
        assert!(bb.reads.contains(n), "{n}");
    }
    assert!(bb.assigns.contains("flag") && bb.assigns.contains("a"));
    assert!(bb.has_call);
    assert_eq!(bb.text.lines[0], "while flag:");
}

#[test]
fn black_box_text_is_byte_identical() {
    let src = "def f(a: ndarray, b: int):\n    x = weird(a, b=2)\n    y = {'k': 1}\n";
    let p = parse_kernels(src).unwrap();
    assert_eq!(emit_program(&p), src);
    let f = only_fn(&p);
    let StmtKind::BlackBox(bb) = &f.body[1].kind else { panic!() };
    assert_eq!(bb.text.lines, vec!["y = {'k': 1}".to_string()]);
}

#[test]
fn call_arguments_and_receivers_are_writes() {
    let src = "def f(a: ndarray, b: ndarray, c: ndarray):\n    a.sort(kind=q)\n    h(b[0:2], *c)\n    tril = np.tril_indices(n=self.M, m=self.M, k=-1, s='x')\n";
    let p = parse_kernels(src).unwrap();
    let f = only_fn(&p);
    // `a.sort(...)` parses as a call statement; the next two are black boxes.
    assert!(matches!(f.body[0].kind, StmtKind::ExprCall(_)));
    let StmtKind::BlackBox(bb) = &f.body[1].kind else { panic!("{:?}", f.body[1].kind) };
    assert!(bb.writes.contains("b") && bb.writes.contains("c"));
    let StmtKind::BlackBox(bb) = &f.body[2].kind else { panic!() };
    assert_eq!(bb.assigns.iter().collect::<Vec<_>>(), vec!["tril"]);
    assert!(bb.writes.contains("np") && bb.writes.contains("self.M"));
    assert!(bb.reads.contains("self.M") && !bb.writes.contains("k"));
}

#[test]
fn subscript_targets_do_not_assign_index_names() {
    let src = "def f(a: ndarray, N: int):\n    a[N, b[0]], c = g()\n";
    let p = parse_kernels(src).unwrap();
    let StmtKind::BlackBox(bb) = &only_fn(&p).body[0].kind else { panic!() };
    assert_eq!(bb.assigns.iter().cloned().collect::<Vec<_>>(), vec!["a".to_string(), "c".to_string()]);
}

#[test]
fn non_unit_step_and_elif_are_black_boxes() {
    let src = "def f(a: ndarray, n: int):\n    for i in range(0, n, 2):\n        a[i] = 0\n    if n > 1:\n        a[0] = 1\n    elif n > 0:\n        a[0] = 2\n    else:\n        a[0] = 3\n";
    let p = parse_kernels(src).unwrap();
    let f = only_fn(&p);
    assert_eq!(f.body.len(), 2);
    assert!(f.body.iter().all(|s| matches!(s.kind, StmtKind::BlackBox(_))));
    assert_eq!(emit_program(&p), src);
}

#[test]
fn if_else_is_structured() {
    let src = "def f(a: ndarray, n: int):\n    if n > 1 and n < 4:\n        a[0] = 1\n    else:\n        a[0] = 3\n";
    let p = parse_kernels(src).unwrap();
    let StmtKind::If { body, orelse, .. } = &only_fn(&p).body[0].kind else { panic!() };
    assert_eq!((body.len(), orelse.len()), (1, 1));
    assert_eq!(emit_program(&p), src);
}

#[test]
fn top_level_text_and_comments_survive() {
    let src = "import numpy as np\nfrom numpy import ndarray\n\n# helper\nX = 3\n\n\ndef f(a: ndarray):\n    # zero it\n    a[0] = 0  # first\n    '''doc\n  kept\n    '''\n\n\nclass K:\n    M = 4\n\n    def kernel(self, a: ndarray):\n        a[self.M] = 1\n";
    let p = parse_kernels(src).unwrap();
    assert_eq!(p.items.len(), 3);
    let out = emit_program(&p);
    assert!(out.contains("    # zero it\n    a[0] = 0  # first\n"));
    assert!(out.contains("'''doc\n  kept\n    '''"));
    assert_eq!(parse_kernels(&out).unwrap(), p);
    assert_eq!(emit_program(&parse_kernels(&out).unwrap()), out);
    let Item::Class(c) = &p.items[2] else { panic!() };
    assert!(matches!(c.body[1], Item::Function(_)));
}

#[test]
fn unparseable_defs_and_decorators_are_opaque() {
    let src = "def f(*args):\n    return 1\n\n\n@dec\ndef g(a: int):\n    return a\n";
    let p = parse_kernels(src).unwrap();
    assert!(p.items.iter().all(|i| matches!(i, Item::Opaque(_))));
    assert_eq!(emit_program(&p), src);
}

#[test]
fn unannotated_parameter_marks_function() {
    let p = parse_kernels("def f(a, b: int):\n    return a\n").unwrap();
    assert!(!only_fn(&p).fully_annotated());
}

#[test]
fn syntax_errors_are_positioned() {
    let e = parse_kernels("def f(a: int)\n    return a\n").unwrap_err();
    assert_eq!((e[0].line, e[0].col), (1, 14));
    let e = parse_kernels("def f(a: int):\nreturn a\n").unwrap_err();
    assert_eq!(e[0].line, 2);
    let e = parse_kernels("def f(a: int):\n    while a\n        a = 1\n").unwrap_err();
    assert_eq!(e[0].line, 2);
}

#[test]
fn duplicate_functions_are_reported() {
    let e = parse_kernels("def f(a: int):\n    return a\n\ndef f(b: int):\n    return b\n").unwrap_err();
    assert_eq!(e.len(), 1);
    assert_eq!(e[0].line, 4);
    assert!(e[0].message.contains("duplicate"));
}
