use super::*;
use crate::frontend::ast::Item;
use crate::frontend::parse_kernels;
use crate::kb::default_kb;
use crate::scop::extract_scop;
use crate::typeinf::infer;

fn scop(src: &str) -> Scop {
    let kb = default_kb();
    let mut p = parse_kernels(src).unwrap();
    let t = infer(&mut p, &kb);
    let Item::Function(f) = &p.items[0] else { panic!() };
    extract_scop(f, &t[0], &kb)
}

fn yes(_: &ScopStatement) -> bool {
    true
}

const CORR_LIST: &str = "\
def k(self, data: ndarray, corr: ndarray):
    for i in range(0, self.M - 1):
        for j in range(i + 1, self.M):
            corr[i, j] = 0.0
            for k in range(0, self.N):
                corr[i, j] += data[k, i] * data[k, j]
            corr[j, i] = corr[i, j]
";

const STAP: &str = "\
def stap(self, x: ndarray, g: ndarray, v: ndarray, y: ndarray, z: ndarray):
    for i in range(0, self.N):
        x[i, 0] = x[i, 0] * g[i]
    y[0:self.N, :] = np.fft.fft(x[0:self.N, :], axis=1)
    z[0:self.N, :] = y[0:self.N, :] * v[0:self.N, :]
";

#[test]
fn recurrence_is_carried_and_not_parallel() {
    let s = scop("def f(a: ndarray, n: int):\n    for i in range(1, n):\n        a[i] = a[i - 1] + 1.0\n");
    let deps = compute_deps(&s);
    assert!(deps.iter().any(|d| d.kind == DepKind::Flow && d.level == Some(1)));
    // No anti dependence: a[i - 1] is read before a[i] is written.
    assert!(!deps.iter().any(|d| d.kind == DepKind::Anti));
    assert!(!parallel_at(&s, &[0], 0));
    let sch = TwoLevelPolicy.schedule(&s, &deps, &yes);
    assert!(sch.pfors().is_empty());
    assert_eq!(sch.nodes, vec![Node::Stmt(0)]);
}

#[test]
fn reduction_self_dependence_is_relaxable_and_blocks_the_k_loop() {
    let s = scop(CORR_LIST);
    assert_eq!(s.statements.len(), 3);
    let deps = compute_deps(&s);
    let own: Vec<&Dependence> = deps.iter().filter(|d| d.src == 1 && d.dst == 1).collect();
    assert!(own.iter().all(|d| d.relaxable && d.level == Some(3)), "{own:?}");
    assert!(!own.is_empty());
    assert!(parallel_at(&s, &[1], 0) && parallel_at(&s, &[1], 1) && !parallel_at(&s, &[1], 2));
    // The transpose copy never meets the upper-triangle writes, so the
    // three statements distribute.
    let sch = IntraPolicy.schedule(&s, &deps, &yes);
    assert_eq!(sch.nodes, vec![Node::Stmt(0), Node::Stmt(1), Node::Stmt(2)]);
}

#[test]
fn stap_fuses_into_one_task_band() {
    let s = scop(STAP);
    let deps = compute_deps(&s);
    let sch = TwoLevelPolicy.schedule(&s, &deps, &yes);
    assert_eq!(sch.policy, "two-level");
    let [p] = sch.pfors()[..] else { panic!("{sch:?}") };
    assert_eq!(p.members, vec![0, 1, 2]);
    let set = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<BTreeSet<_>>();
    assert_eq!(p.output, set(&["x", "y", "z"]));
    assert_eq!(p.input, set(&["g", "v", "x", "y"]));
    assert!(p.transfer);
    assert_eq!(p.body, vec![Node::Stmt(0), Node::Stmt(1), Node::Stmt(2)]);
    assert!(sch.dump(&s, &deps).contains("pfor i0 [S0, S1, S2]"));
}

#[test]
fn reordering_against_a_dependence_is_a_violation() {
    let s = scop("def f(a: ndarray, b: ndarray, n: int):\n    for i in range(0, n):\n        a[i] = 1.0\n    for i in range(0, n):\n        b[i] = a[i]\n");
    let deps = compute_deps(&s);
    assert!(violations(&s, &deps, &[Node::Stmt(0), Node::Stmt(1)]).is_empty());
    assert!(!violations(&s, &deps, &[Node::Stmt(1), Node::Stmt(0)]).is_empty());
    let fused = Node::Loop {
        depth: 0,
        parallel: true,
        body: vec![Node::Stmt(0), Node::Stmt(1)],
    };
    assert!(violations(&s, &deps, &[fused]).is_empty());
    let shifted = scop("def f(a: ndarray, b: ndarray, n: int):\n    for i in range(0, n):\n        a[i] = 1.0\n    for i in range(0, n - 1):\n        b[i] = a[i + 1]\n");
    let d2 = compute_deps(&shifted);
    let fused = Node::Loop {
        depth: 0,
        parallel: false,
        body: vec![Node::Stmt(0), Node::Stmt(1)],
    };
    assert!(!violations(&shifted, &d2, &[fused]).is_empty());
}

#[test]
fn registry_names_and_default() {
    let names: Vec<&str> = policies().iter().map(|p| p.name()).collect();
    assert_eq!(names, vec!["two-level", "intra", "sequential"]);
    assert!(policy("intra").is_some() && policy("nope").is_none());
}

