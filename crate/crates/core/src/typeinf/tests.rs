use super::*;
use crate::frontend::parse_kernels;
use crate::kb::default_kb;

const CORR_NUMPY: &str = "\
def kernel(self, float_n: float, data: ndarray, corr: ndarray, mean: ndarray, stddev: ndarray):
    corr[np.diag_indices(corr.shape[0])] = 1.0
    for i in range(0, self.M - 1):
        corr[i,i+1:self.M] = (data[0:self.N,i] * data[0:self.N,i+1:self.M].T).sum(axis=1)
    corr[self.M - 1, self.M - 1] = 1.0
";

fn infer_src(src: &str) -> (Program, Vec<FunctionTypes>) {
    let mut p = parse_kernels(src).unwrap();
    let t = infer(&mut p, &default_kb());
    (p, t)
}

fn body(p: &Program) -> &[Stmt] {
    let Item::Function(f) = &p.items[0] else { panic!() };
    &f.body
}

#[test]
fn corr_numpy_ranks_follow_the_library_rules() {
    let (p, t) = infer_src(CORR_NUMPY);
    assert_eq!(t[0].get("data"), SemType::array(Elem::Float, 2));
    assert_eq!(t[0].get("corr"), SemType::array(Elem::Float, 2));
    let StmtKind::For { body: inner, .. } = &body(&p)[1].kind else { panic!() };
    let StmtKind::Assign { target, value } = &inner[0].kind else { panic!() };
    assert_eq!(rank_of(target), Some(1));
    assert_eq!(rank_of(value), Some(1));
    // The receiver of `.sum` is the rank-2 product.
    let ExprKind::Call { func, .. } = &value.kind else { panic!() };
    let ExprKind::Attribute { base, .. } = &func.kind else { panic!() };
    assert_eq!(rank_of(base), Some(2));
    let StmtKind::Assign { target, .. } = &body(&p)[0].kind else { panic!() };
    assert_eq!(rank_of(target), None);
}

#[test]
fn incompatible_rebinding_is_unknown() {
    let (_, t) = infer_src("def f(n: int):\n    x = 1\n    x = 2.5\n    y = n / 2\n    z = n ** 2\n");
    assert_eq!(t[0].get("x"), SemType::Unknown);
    assert_eq!(t[0].get("y"), SemType::Float);
    assert_eq!(t[0].get("z"), SemType::Int);
    assert_eq!(t[0].get("never"), SemType::Unknown);
}

#[test]
fn list_parameters_get_ranks_from_chained_subscripts() {
    let (_, t) = infer_src(
        "def k(self, data: list, corr: list):\n    for i in range(0, self.M):\n        for k in range(0, self.N):\n            corr[i][i] += data[k][i]\n",
    );
    assert_eq!(t[0].get("corr"), SemType::List { elem: Elem::Float, rank: Some(2) });
    assert_eq!(t[0].get("i"), SemType::Int);
}

#[test]
fn transposes_and_fft_follow_entries() {
    let (_, t) = infer_src("def f(a: ndarray, n: int):\n    b = a.T\n    c = np.fft.fft(a, axis=1)\n    d = a[0, 0]\n");
    assert_eq!(t[0].get("a"), SemType::array(Elem::Float, 2));
    assert_eq!(t[0].get("b"), SemType::array(Elem::Float, 2));
    assert_eq!(t[0].get("c"), SemType::array(Elem::Complex, 2));
    assert_eq!(t[0].get("d"), SemType::Float);
}

#[test]
fn adding_an_annotation_never_loses_information() {
    let src_a = "def f(a: ndarray, n):\n    x = a[n]\n";
    let src_b = "def f(a: ndarray, n: int):\n    x = a[n]\n";
    let (_, ta) = infer_src(src_a);
    let (_, tb) = infer_src(src_b);
    for name in ["a", "x"] {
        let before = ta[0].get(name);
        if before.rank().is_some() {
            assert_eq!(tb[0].get(name), before, "{name}");
        }
    }
    assert_eq!(tb[0].get("x"), SemType::Float);
}

#[test]
fn dump_is_stable() {
    let (_, t) = infer_src("def f(n: int, a: ndarray):\n    z = a[n]\n    b = 1\n");
    assert_eq!(dump_types(&t), "f:\n  n : int\n  a : array(float, 1)\n  b : int\n  z : float\n");
}
