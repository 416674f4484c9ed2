//! Random constraint systems and a brute-force membership oracle for the
//! set algebra.

use loomc::polyset::{AffineExpr, AffineSet, Constraint, Emptiness};
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

pub const PARAM: &str = "p";
/// Coordinates searched by the oracle.
pub const BOX: i64 = 5;
pub const PARAM_MAX: i64 = 8;

/// `coeffs . (dims, p) + constant  (>= | ==)  0`, kept apart from the
/// library's own representation.
#[derive(Clone, Debug)]
pub struct RawConstraint {
    pub coeffs: Vec<i64>,
    pub constant: i64,
    pub equality: bool,
}

#[derive(Clone, Debug)]
pub struct RawSet {
    pub dims: usize,
    pub cons: Vec<RawConstraint>,
}

pub fn dim_name(d: usize) -> String {
    format!("d{d}")
}

impl RawSet {
    pub fn holds(&self, point: &[i64], p: i64) -> bool {
        self.cons.iter().all(|c| {
            let v: i64 = c.coeffs[..self.dims].iter().zip(point).map(|(a, x)| a * x).sum::<i64>() + c.coeffs[self.dims] * p + c.constant;
            if c.equality {
                v == 0
            } else {
                v >= 0
            }
        })
    }

    pub fn to_set(&self) -> AffineSet {
        let cons = self
            .cons
            .iter()
            .map(|c| {
                let mut terms: Vec<(String, i64)> = (0..self.dims).map(|d| (dim_name(d), c.coeffs[d])).collect();
                terms.push((PARAM.to_string(), c.coeffs[self.dims]));
                let e = AffineExpr::from_terms(terms, c.constant);
                if c.equality {
                    Constraint::eq0(e)
                } else {
                    Constraint::ge0(e)
                }
            })
            .collect();
        AffineSet::from_constraints((0..self.dims).map(dim_name).collect(), vec![PARAM.to_string()], cons)
    }
}

fn raw_constraint(dims: usize) -> impl Strategy<Value = RawConstraint> {
    (prop::collection::vec(-3i64..=3, dims + 1), -8i64..=8, prop::bool::weighted(0.2)).prop_map(|(coeffs, constant, equality)| RawConstraint {
        coeffs,
        constant,
        equality,
    })
}

/// Up to three dimensions, up to six constraints.
pub fn raw_set(dims: usize) -> impl Strategy<Value = RawSet> {
    prop::collection::vec(raw_constraint(dims), 0..=6).prop_map(move |cons| RawSet { dims, cons })
}

/// Two sets over one space, a kept subset of dimensions and a parameter.
pub fn case() -> impl Strategy<Value = (RawSet, RawSet, Vec<bool>, i64)> {
    (1usize..=3).prop_flat_map(|d| (raw_set(d), raw_set(d), prop::collection::vec(any::<bool>(), d), 0..=PARAM_MAX))
}

pub fn box_points(dims: usize) -> impl Iterator<Item = Vec<i64>> {
    let side = (2 * BOX + 1) as usize;
    (0..side.pow(dims as u32)).map(move |mut k| {
        (0..dims)
            .map(|_| {
                let v = (k % side) as i64 - BOX;
                k /= side;
                v
            })
            .collect()
    })
}

#[derive(Debug, Default)]
pub struct SetViolations {
    pub empty: Vec<String>,
    pub projection: Vec<String>,
    pub intersection: Vec<String>,
}

impl SetViolations {
    pub fn total(&self) -> usize {
        self.empty.len() + self.projection.len() + self.intersection.len()
    }

    /// Counts plus the first counterexample of each kind.
    pub fn summary(&self) -> String {
        let first = |v: &[String]| v.first().cloned().unwrap_or_default();
        format!(
            "empty {} {}\nprojection {} {}\nintersection {} {}",
            self.empty.len(),
            first(&self.empty),
            self.projection.len(),
            first(&self.projection),
            self.intersection.len(),
            first(&self.intersection)
        )
    }
}

/// Checks emptiness soundness, projection containment and intersection
/// membership for one case, appending counterexamples.
pub fn check_case(a: &RawSet, b: &RawSet, keep: &[bool], p: i64, out: &mut SetViolations) {
    let sa = a.to_set();
    let sb = b.to_set();
    let lookup = |s: &str| (s == PARAM).then_some(p);

    if sa.is_empty() == Emptiness::Empty {
        for q in 0..=PARAM_MAX {
            if let Some(x) = box_points(a.dims).find(|x| a.holds(x, q)) {
                out.empty.push(format!("{a:?} claimed empty, holds at {x:?} p={q}"));
                break;
            }
        }
    }

    let keep_names: Vec<String> = (0..a.dims).filter(|&d| keep[d]).map(dim_name).collect();
    let proj = sa.project_onto(&keep_names);
    let both = sa.intersect(&sb).ok();
    for x in box_points(a.dims) {
        let in_a = a.holds(&x, p);
        let in_b = b.holds(&x, p);
        if in_a {
            let y: Vec<i64> = (0..a.dims).filter(|&d| keep[d]).map(|d| x[d]).collect();
            if !proj.contains(&y, &lookup) {
                out.projection.push(format!("{a:?} keep {keep:?}: {x:?} p={p} lost"));
            }
        }
        if let Some(both) = &both {
            if both.contains(&x, &lookup) != (in_a && in_b) {
                out.intersection.push(format!("{a:?} & {b:?} at {x:?} p={p}"));
            }
        }
    }
    if both.is_none() {
        out.intersection.push(format!("{a:?} & {b:?}: intersection failed"));
    }
}

/// `n` cases from a fixed seed.
pub fn sample(n: usize) -> Vec<(RawSet, RawSet, Vec<bool>, i64)> {
    let mut runner = TestRunner::new_with_rng(Config::default(), TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    let strat = case();
    (0..n).map(|_| strat.new_tree(&mut runner).expect("strategy").current()).collect()
}
