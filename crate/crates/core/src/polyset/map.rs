use super::expr::AffineExpr;
use super::set::{AffineSet, Constraint};
use super::PolyError;

/// Affine function from a domain space to a tuple of index expressions,
/// optionally restricted by constraints (used for the bounds of auxiliary
/// dimensions such as reduction or row variables).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineMap {
    pub domain: Vec<String>,
    pub params: Vec<String>,
    pub exprs: Vec<AffineExpr>,
    pub constraints: Option<AffineSet>,
}

impl AffineMap {
    pub fn new(domain: Vec<String>, params: Vec<String>, exprs: Vec<AffineExpr>) -> Self {
        AffineMap {
            domain,
            params,
            exprs,
            constraints: None,
        }
    }

    pub fn range_arity(&self) -> usize {
        self.exprs.len()
    }

    pub fn apply(&self, point: &[i64], params: &dyn Fn(&str) -> Option<i64>) -> Option<Vec<i64>> {
        let lookup = |s: &str| match self.domain.iter().position(|d| d == s) {
            Some(i) => point.get(i).copied(),
            None => params(s),
        };
        self.exprs.iter().map(|e| e.eval(&lookup)).collect()
    }
}

/// Binary relation between two spaces, stored as a set over the
/// concatenated space `input ++ output`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineRelation {
    pub input: Vec<String>,
    pub output: Vec<String>,
    pub set: AffineSet,
}

impl AffineRelation {
    pub fn contains(&self, src: &[i64], dst: &[i64], params: &dyn Fn(&str) -> Option<i64>) -> bool {
        let mut p = src.to_vec();
        p.extend_from_slice(dst);
        self.set.contains(&p, params)
    }

    /// Restricts the input side to `dom` (whose space must equal `input`).
    pub fn restrict_input(&self, dom: &AffineSet) -> Result<AffineRelation, PolyError> {
        if dom.space != self.input {
            return Err(PolyError::SpaceMismatch {
                left: self.input.clone(),
                right: dom.space.clone(),
            });
        }
        self.restrict_with(dom, &self.input)
    }

    pub fn restrict_output(&self, dom: &AffineSet) -> Result<AffineRelation, PolyError> {
        if dom.space.len() != self.output.len() {
            return Err(PolyError::SpaceMismatch {
                left: self.output.clone(),
                right: dom.space.clone(),
            });
        }
        let renamed = dom.rename(&|s| match dom.space.iter().position(|x| x == s) {
            Some(i) => self.output[i].clone(),
            None => s.to_string(),
        });
        self.restrict_with(&renamed, &self.output)
    }

    fn restrict_with(&self, dom: &AffineSet, _side: &[String]) -> Result<AffineRelation, PolyError> {
        let mut lifted = dom.with_dims(&self.set.space);
        lifted.space = self.set.space.clone();
        for p in &self.set.params {
            lifted = lifted.with_param(p);
        }
        let mut base = self.set.clone();
        for p in &lifted.params {
            base = base.with_param(p);
        }
        Ok(AffineRelation {
            input: self.input.clone(),
            output: self.output.clone(),
            set: base.intersect(&lifted)?,
        })
    }
}

/// Primed copy of a symbol, used for the output side of relations.
pub fn primed(s: &str) -> String {
    format!("{s}'")
}

/// Pairs `(p, q)` of the given space with `p` and `q` equal on the first
/// `depth - 1` coordinates and `p[depth-1] < q[depth-1]`.
pub fn lex_lt(space: &[String], depth: usize) -> Result<AffineRelation, PolyError> {
    if depth == 0 || depth > space.len() {
        return Err(PolyError::DepthOutOfRange {
            depth,
            dims: space.len(),
        });
    }
    let output: Vec<String> = space.iter().map(|s| primed(s)).collect();
    let mut cons = Vec::new();
    for k in 0..depth - 1 {
        cons.push(Constraint::eq(&AffineExpr::var(space[k].clone()), &AffineExpr::var(output[k].clone())));
    }
    cons.push(Constraint::lt(
        &AffineExpr::var(space[depth - 1].clone()),
        &AffineExpr::var(output[depth - 1].clone()),
    ));
    let mut full = space.to_vec();
    full.extend(output.iter().cloned());
    Ok(AffineRelation {
        input: space.to_vec(),
        output,
        set: AffineSet::from_constraints(full, vec![], cons),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn lex_lt_depth_checks() {
        assert!(lex_lt(&sp(&["i"]), 0).is_err());
        assert!(lex_lt(&sp(&["i"]), 2).is_err());
        let r = lex_lt(&sp(&["i"]), 1).unwrap();
        assert!(r.contains(&[1], &[2], &|_| None));
        assert!(!r.contains(&[2], &[2], &|_| None));
    }

    #[test]
    fn lex_lt_depth_two_keeps_prefix() {
        let r = lex_lt(&sp(&["i", "j"]), 2).unwrap();
        assert!(r.contains(&[1, 0], &[1, 2], &|_| None));
        assert!(!r.contains(&[1, 0], &[2, 2], &|_| None));
    }

    #[test]
    fn apply_map() {
        let m = AffineMap::new(sp(&["i", "j"]), sp(&["N"]), vec![AffineExpr::var("j"), AffineExpr::var("i").add_const(1)]);
        assert_eq!(m.apply(&[2, 5], &|_| None), Some(vec![5, 3]));
        assert_eq!(m.range_arity(), 2);
    }
}
