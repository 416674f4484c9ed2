use std::collections::BTreeSet;
use std::fmt;

use super::expr::AffineExpr;
use super::PolyError;

/// Upper bound on the number of disjuncts a single set may carry.
pub const MAX_DISJUNCTS: usize = 64;

/// Constraint count past which Fourier–Motzkin gives up on a disjunct.
const FM_BLOWUP_LIMIT: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    /// `expr >= 0`
    NonNeg,
    /// `expr == 0`
    Zero,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Constraint {
    pub expr: AffineExpr,
    pub rel: Relation,
}

impl Constraint {
    pub fn ge0(expr: AffineExpr) -> Self {
        Constraint {
            expr,
            rel: Relation::NonNeg,
        }
    }

    pub fn eq0(expr: AffineExpr) -> Self {
        Constraint {
            expr,
            rel: Relation::Zero,
        }
    }

    /// `lhs <= rhs`
    pub fn le(lhs: &AffineExpr, rhs: &AffineExpr) -> Self {
        Self::ge0(rhs.sub(lhs))
    }

    /// `lhs < rhs`
    pub fn lt(lhs: &AffineExpr, rhs: &AffineExpr) -> Self {
        Self::ge0(rhs.sub(lhs).add_const(-1))
    }

    pub fn eq(lhs: &AffineExpr, rhs: &AffineExpr) -> Self {
        Self::eq0(lhs.sub(rhs))
    }

    /// Integer complement, as a list of alternative constraints.
    pub fn negate(&self) -> Vec<Constraint> {
        match self.rel {
            Relation::NonNeg => vec![Constraint::ge0(self.expr.scale(-1).add_const(-1))],
            Relation::Zero => vec![
                Constraint::ge0(self.expr.add_const(-1)),
                Constraint::ge0(self.expr.scale(-1).add_const(-1)),
            ],
        }
    }

    pub fn holds(&self, lookup: &dyn Fn(&str) -> Option<i64>) -> Option<bool> {
        let v = self.expr.eval(lookup)?;
        Some(match self.rel {
            Relation::NonNeg => v >= 0,
            Relation::Zero => v == 0,
        })
    }

    /// Divides by the coefficient gcd, tightening inequality constants by
    /// floor division. `Err(())` means the constraint is unsatisfiable,
    /// `Ok(None)` that it is trivially true.
    fn normalize(self) -> Result<Option<Constraint>, ()> {
        let g = self.expr.gcd_of_coeffs();
        let c = self.expr.constant_term();
        if g == 0 {
            let ok = match self.rel {
                Relation::NonNeg => c >= 0,
                Relation::Zero => c == 0,
            };
            return if ok { Ok(None) } else { Err(()) };
        }
        match self.rel {
            Relation::NonNeg => Ok(Some(Constraint::ge0(
                self.expr.div_exact_coeffs(g, c.div_euclid(g)),
            ))),
            Relation::Zero => {
                if c % g != 0 {
                    return Err(());
                }
                let mut e = self.expr.div_exact_coeffs(g, c / g);
                if e.terms().next().map(|(_, v)| v < 0).unwrap_or(false) {
                    e = e.scale(-1);
                }
                Ok(Some(Constraint::eq0(e)))
            }
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pos = AffineExpr::from_terms(
            self.expr.terms().filter(|(_, c)| *c > 0).map(|(s, c)| (s.to_string(), c)),
            0,
        );
        let neg = AffineExpr::from_terms(
            self.expr.terms().filter(|(_, c)| *c < 0).map(|(s, c)| (s.to_string(), -c)),
            0,
        );
        let c = self.expr.constant_term();
        match self.rel {
            Relation::Zero => {
                let (lhs, rhs) = if pos.is_constant() {
                    (neg, AffineExpr::constant(c))
                } else {
                    (pos, neg.add_const(-c))
                };
                write!(f, "{lhs} = {rhs}")
            }
            Relation::NonNeg => {
                // pos - neg + c >= 0
                if c < 0 && !neg.is_constant() {
                    write!(f, "{} < {}", neg.add_const(-c - 1), pos)
                } else if c < 0 {
                    write!(f, "{} <= {}", -c, pos)
                } else if pos.is_constant() {
                    write!(f, "{} <= {}", neg, c)
                } else {
                    write!(f, "{} <= {}", neg, pos.add_const(c))
                }
            }
        }
    }
}

/// Result of an emptiness query. `Empty` is exact; the other answer is
/// conservative.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Emptiness {
    Empty,
    MaybeNonEmpty,
}

/// Union of conjunctions of affine constraints over `space` (set
/// dimensions) and `params` (symbolic constants).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineSet {
    pub space: Vec<String>,
    pub params: Vec<String>,
    pub disjuncts: Vec<Vec<Constraint>>,
}

impl AffineSet {
    pub fn universe(space: Vec<String>, params: Vec<String>) -> Self {
        AffineSet {
            space,
            params,
            disjuncts: vec![Vec::new()],
        }
    }

    pub fn empty(space: Vec<String>, params: Vec<String>) -> Self {
        AffineSet {
            space,
            params,
            disjuncts: Vec::new(),
        }
    }

    pub fn from_constraints(space: Vec<String>, params: Vec<String>, cons: Vec<Constraint>) -> Self {
        let mut s = Self::universe(space, params);
        s.disjuncts[0] = cons;
        s.simplify()
    }

    pub fn is_trivially_empty(&self) -> bool {
        self.disjuncts.is_empty()
    }

    fn check_symbols(&self, c: &Constraint) -> Result<(), PolyError> {
        for s in c.expr.symbols() {
            if !self.space.iter().any(|x| x == s) && !self.params.iter().any(|x| x == s) {
                return Err(PolyError::UndeclaredSymbol(s.to_string()));
            }
        }
        Ok(())
    }

    /// Conjoins `c` to every disjunct.
    pub fn with_constraint(&self, c: Constraint) -> Result<AffineSet, PolyError> {
        self.check_symbols(&c)?;
        let mut out = self.clone();
        for d in &mut out.disjuncts {
            d.push(c.clone());
        }
        Ok(out.simplify())
    }

    pub fn with_constraints(&self, cs: impl IntoIterator<Item = Constraint>) -> Result<AffineSet, PolyError> {
        let mut out = self.clone();
        for c in cs {
            out = out.with_constraint(c)?;
        }
        Ok(out)
    }

    /// Adds a parameter symbol (no constraint on it).
    pub fn with_param(&self, p: &str) -> AffineSet {
        let mut out = self.clone();
        if !out.params.iter().any(|x| x == p) && !out.space.iter().any(|x| x == p) {
            out.params.push(p.to_string());
        }
        out
    }

    /// Extends the space with new (unconstrained) dimensions.
    pub fn with_dims(&self, dims: &[String]) -> AffineSet {
        let mut out = self.clone();
        for d in dims {
            if !out.space.contains(d) {
                out.space.push(d.clone());
            }
        }
        out
    }

    pub fn intersect(&self, other: &AffineSet) -> Result<AffineSet, PolyError> {
        if self.space != other.space {
            return Err(PolyError::SpaceMismatch {
                left: self.space.clone(),
                right: other.space.clone(),
            });
        }
        let mut params = self.params.clone();
        for p in &other.params {
            if !params.contains(p) {
                params.push(p.clone());
            }
        }
        let mut disjuncts = Vec::new();
        for a in &self.disjuncts {
            for b in &other.disjuncts {
                let mut d = a.clone();
                d.extend(b.iter().cloned());
                disjuncts.push(d);
            }
        }
        let out = AffineSet {
            space: self.space.clone(),
            params,
            disjuncts,
        }
        .simplify();
        if out.disjuncts.len() > MAX_DISJUNCTS {
            return Err(PolyError::TooManyDisjuncts(out.disjuncts.len()));
        }
        Ok(out)
    }

    pub fn union(&self, other: &AffineSet) -> Result<AffineSet, PolyError> {
        if self.space != other.space {
            return Err(PolyError::SpaceMismatch {
                left: self.space.clone(),
                right: other.space.clone(),
            });
        }
        let mut out = self.clone();
        for p in &other.params {
            if !out.params.contains(p) {
                out.params.push(p.clone());
            }
        }
        out.disjuncts.extend(other.disjuncts.iter().cloned());
        let out = out.simplify();
        if out.disjuncts.len() > MAX_DISJUNCTS {
            return Err(PolyError::TooManyDisjuncts(out.disjuncts.len()));
        }
        Ok(out)
    }

    /// Rational shadow of the set along `symbol`, which leaves the space.
    /// Always a superset of the exact integer projection.
    pub fn project_out(&self, symbol: &str) -> AffineSet {
        let space: Vec<String> = self.space.iter().filter(|s| *s != symbol).cloned().collect();
        let disjuncts = self
            .disjuncts
            .iter()
            .filter_map(|d| eliminate(d.clone(), symbol))
            .collect();
        AffineSet {
            space,
            params: self.params.clone(),
            disjuncts,
        }
        .simplify()
    }

    pub fn project_onto(&self, keep: &[String]) -> AffineSet {
        let mut out = self.clone();
        for s in self.space.iter().filter(|s| !keep.contains(s)) {
            out = out.project_out(s);
        }
        out
    }

    /// Parameters are treated as nonnegative integers; the answer `Empty`
    /// holds for every binding of them.
    pub fn is_empty(&self) -> Emptiness {
        self.is_empty_under(&[])
    }

    /// Emptiness with extra context constraints conjoined to every disjunct.
    pub fn is_empty_under(&self, context: &[Constraint]) -> Emptiness {
        for d in &self.disjuncts {
            let mut cons = d.clone();
            cons.extend(context.iter().cloned());
            for p in &self.params {
                cons.push(Constraint::ge0(AffineExpr::var(p.clone())));
            }
            let mut vars: BTreeSet<String> = BTreeSet::new();
            for c in &cons {
                vars.extend(c.expr.symbols().map(|s| s.to_string()));
            }
            let mut cur = Some(cons);
            for v in vars {
                match cur {
                    Some(c) => match eliminate_bounded(c, &v) {
                        Elim::Done(next) => cur = next,
                        Elim::Blowup => return Emptiness::MaybeNonEmpty,
                    },
                    None => break,
                }
            }
            if cur.is_some() {
                return Emptiness::MaybeNonEmpty;
            }
        }
        Emptiness::Empty
    }

    pub fn contains(&self, point: &[i64], params: &dyn Fn(&str) -> Option<i64>) -> bool {
        let lookup = |s: &str| -> Option<i64> {
            match self.space.iter().position(|x| x == s) {
                Some(i) => point.get(i).copied(),
                None => params(s),
            }
        };
        self.disjuncts
            .iter()
            .any(|d| d.iter().all(|c| c.holds(&lookup).unwrap_or(false)))
    }

    /// Exhaustive list of the integer points with every coordinate in
    /// `[-bound, bound]`, in lexicographic order.
    pub fn enumerate(&self, params: &dyn Fn(&str) -> Option<i64>, bound: i64) -> Vec<Vec<i64>> {
        let n = self.space.len();
        let mut out = Vec::new();
        let mut point = vec![-bound; n];
        if n == 0 {
            if self.contains(&point, params) {
                out.push(point);
            }
            return out;
        }
        loop {
            if self.contains(&point, params) {
                out.push(point.clone());
            }
            let mut k = n;
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                if point[k] < bound {
                    point[k] += 1;
                    for x in point.iter_mut().skip(k + 1) {
                        *x = -bound;
                    }
                    break;
                }
            }
        }
    }

    /// Normalizes constraints, drops unsatisfiable disjuncts and duplicates.
    pub fn simplify(mut self) -> AffineSet {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for d in self.disjuncts.drain(..) {
            if let Some(n) = normalize_all(d) {
                if seen.insert(n.clone()) {
                    out.push(n);
                }
            }
        }
        self.disjuncts = out;
        self
    }

    pub fn rename(&self, map: &dyn Fn(&str) -> String) -> AffineSet {
        AffineSet {
            space: self.space.iter().map(|s| map(s)).collect(),
            params: self.params.iter().map(|s| map(s)).collect(),
            disjuncts: self
                .disjuncts
                .iter()
                .map(|d| {
                    d.iter()
                        .map(|c| Constraint {
                            expr: c.expr.rename(map),
                            rel: c.rel,
                        })
                        .collect()
                })
                .collect(),
        }
    }

    /// Renders `[N,M] -> { S0[i,j] : 0 <= i and i < N }`.
    pub fn render(&self, name: &str) -> String {
        let tuple = format!("{name}[{}]", self.space.join(","));
        let body = if self.disjuncts.is_empty() {
            format!("{tuple} : false")
        } else if self.disjuncts.len() == 1 && self.disjuncts[0].is_empty() {
            tuple
        } else {
            let parts: Vec<String> = self.disjuncts.iter().map(|d| render_conj(d, &self.space)).collect();
            if parts.len() == 1 {
                format!("{tuple} : {}", parts[0])
            } else {
                let wrapped: Vec<String> = parts.iter().map(|p| format!("({p})")).collect();
                format!("{tuple} : {}", wrapped.join(" or "))
            }
        };
        format!("[{}] -> {{ {body} }}", self.params.join(","))
    }
}

/// Groups constraints by their innermost dimension, lower bounds before
/// upper bounds; parameter-only constraints go last.
fn render_conj(d: &[Constraint], space: &[String]) -> String {
    if d.is_empty() {
        return "true".into();
    }
    let key = |c: &Constraint| {
        let inner = space.iter().rposition(|s| c.expr.mentions(s));
        let dim = inner.unwrap_or(space.len());
        let side = match (c.rel, inner) {
            (Relation::Zero, _) => 2,
            (_, Some(k)) if c.expr.coeff(&space[k]) > 0 => 0,
            _ => 1,
        };
        (dim, side)
    };
    let mut sorted: Vec<&Constraint> = d.iter().collect();
    sorted.sort_by_key(|c| key(c));
    sorted.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" and ")
}

fn normalize_all(d: Vec<Constraint>) -> Option<Vec<Constraint>> {
    let mut set = BTreeSet::new();
    for c in d {
        match c.normalize() {
            Err(()) => return None,
            Ok(None) => {}
            Ok(Some(c)) => {
                set.insert(c);
            }
        }
    }
    Some(set.into_iter().collect())
}

enum Elim {
    Done(Option<Vec<Constraint>>),
    Blowup,
}

/// Fourier–Motzkin step used by projection: on blow-up the constraints
/// mentioning `v` are dropped, which still yields a superset.
fn eliminate(cons: Vec<Constraint>, v: &str) -> Option<Vec<Constraint>> {
    match eliminate_bounded(cons.clone(), v) {
        Elim::Done(r) => r,
        Elim::Blowup => normalize_all(cons.into_iter().filter(|c| !c.expr.mentions(v)).collect()),
    }
}

fn eliminate_bounded(cons: Vec<Constraint>, v: &str) -> Elim {
    let Some(cons) = normalize_all(cons) else {
        return Elim::Done(None);
    };
    // Equality substitution first, preferring a unit coefficient.
    let eq_pos = cons
        .iter()
        .position(|c| c.rel == Relation::Zero && c.expr.coeff(v).abs() == 1)
        .or_else(|| cons.iter().position(|c| c.rel == Relation::Zero && c.expr.coeff(v) != 0));
    if let Some(pos) = eq_pos {
        let eq = cons[pos].clone();
        let a = eq.expr.coeff(v);
        // a*v + rest = 0
        let rest = eq.expr.substitute(v, &AffineExpr::zero());
        let mut out = Vec::with_capacity(cons.len());
        for (i, c) in cons.into_iter().enumerate() {
            if i == pos {
                continue;
            }
            let cv = c.expr.coeff(v);
            if cv == 0 {
                out.push(c);
                continue;
            }
            let f = c.expr.substitute(v, &AffineExpr::zero());
            let e = rest.scale(-cv * a.signum()).add(&f.scale(a.abs()));
            out.push(Constraint { expr: e, rel: c.rel });
        }
        return Elim::Done(normalize_all(out));
    }
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut out = Vec::new();
    for c in cons {
        let cv = c.expr.coeff(v);
        if cv > 0 {
            lower.push(c);
        } else if cv < 0 {
            upper.push(c);
        } else {
            out.push(c);
        }
    }
    if lower.len() * upper.len() + out.len() > FM_BLOWUP_LIMIT {
        return Elim::Blowup;
    }
    for l in &lower {
        let cl = l.expr.coeff(v);
        for u in &upper {
            let cu = -u.expr.coeff(v);
            let e = l.expr.scale(cu).add(&u.expr.scale(cl));
            out.push(Constraint::ge0(e));
        }
    }
    Elim::Done(normalize_all(out))
}
