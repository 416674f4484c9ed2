use std::collections::BTreeMap;
use std::fmt;

/// Integer affine combination of named symbols plus a constant.
///
/// Zero coefficients are never stored, so two expressions describing the
/// same function compare equal.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AffineExpr {
    terms: BTreeMap<String, i64>,
    constant: i64,
}

impl AffineExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: i64) -> Self {
        AffineExpr {
            terms: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn var(name: impl Into<String>) -> Self {
        Self::term(name, 1)
    }

    pub fn term(name: impl Into<String>, coeff: i64) -> Self {
        let mut e = Self::zero();
        e.add_term(name.into(), coeff);
        e
    }

    pub fn from_terms<S: Into<String>>(terms: impl IntoIterator<Item = (S, i64)>, constant: i64) -> Self {
        let mut e = Self::constant(constant);
        for (s, c) in terms {
            e.add_term(s.into(), c);
        }
        e
    }

    fn add_term(&mut self, name: String, coeff: i64) {
        if coeff == 0 {
            return;
        }
        let entry = self.terms.entry(name.clone()).or_insert(0);
        *entry += coeff;
        if *entry == 0 {
            self.terms.remove(&name);
        }
    }

    pub fn coeff(&self, name: &str) -> i64 {
        self.terms.get(name).copied().unwrap_or(0)
    }

    pub fn constant_term(&self) -> i64 {
        self.constant
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, i64)> {
        self.terms.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.terms.keys().map(|k| k.as_str())
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<i64> {
        self.is_constant().then_some(self.constant)
    }

    pub fn mentions(&self, name: &str) -> bool {
        self.terms.contains_key(name)
    }

    pub fn add(&self, other: &AffineExpr) -> AffineExpr {
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.add_term(k.clone(), *v);
        }
        out.constant += other.constant;
        out
    }

    pub fn sub(&self, other: &AffineExpr) -> AffineExpr {
        self.add(&other.scale(-1))
    }

    pub fn add_const(&self, c: i64) -> AffineExpr {
        let mut out = self.clone();
        out.constant += c;
        out
    }

    pub fn scale(&self, k: i64) -> AffineExpr {
        if k == 0 {
            return Self::zero();
        }
        AffineExpr {
            terms: self.terms.iter().map(|(s, c)| (s.clone(), c * k)).collect(),
            constant: self.constant * k,
        }
    }

    /// Replaces `name` with `with` everywhere.
    pub fn substitute(&self, name: &str, with: &AffineExpr) -> AffineExpr {
        let c = self.coeff(name);
        if c == 0 {
            return self.clone();
        }
        let mut out = self.clone();
        out.terms.remove(name);
        out.add(&with.scale(c))
    }

    pub fn rename(&self, map: &dyn Fn(&str) -> String) -> AffineExpr {
        let mut out = Self::constant(self.constant);
        for (k, v) in &self.terms {
            out.add_term(map(k), *v);
        }
        out
    }

    /// Evaluates with every symbol bound; `None` when a symbol is missing.
    pub fn eval(&self, lookup: &dyn Fn(&str) -> Option<i64>) -> Option<i64> {
        let mut acc = self.constant;
        for (k, v) in &self.terms {
            acc += v * lookup(k)?;
        }
        Some(acc)
    }

    pub(crate) fn gcd_of_coeffs(&self) -> i64 {
        self.terms.values().fold(0, |g, c| gcd(g, c.abs()))
    }

    pub(crate) fn div_exact_coeffs(&self, g: i64, constant: i64) -> AffineExpr {
        AffineExpr {
            terms: self.terms.iter().map(|(k, v)| (k.clone(), v / g)).collect(),
            constant,
        }
    }
}

pub(crate) fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl fmt::Display for AffineExpr {
    /// Positive terms first, then negative terms, then the constant:
    /// `self.M - i0 - 1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        let pos = self.terms.iter().filter(|(_, c)| **c > 0);
        let neg = self.terms.iter().filter(|(_, c)| **c < 0);
        for (name, c) in pos.chain(neg) {
            let mag = c.abs();
            if out.is_empty() {
                if *c < 0 {
                    out.push('-');
                }
            } else if *c < 0 {
                out.push_str(" - ");
            } else {
                out.push_str(" + ");
            }
            if mag != 1 {
                out.push_str(&format!("{mag}*"));
            }
            out.push_str(name);
        }
        if out.is_empty() {
            out = self.constant.to_string();
        } else if self.constant > 0 {
            out.push_str(&format!(" + {}", self.constant));
        } else if self.constant < 0 {
            out.push_str(&format!(" - {}", -self.constant));
        }
        f.write_str(&out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_coefficients_are_dropped() {
        let e = AffineExpr::var("i").add(&AffineExpr::term("i", -1));
        assert!(e.is_constant());
        assert_eq!(e, AffineExpr::zero());
    }

    #[test]
    fn display_orders_positive_terms_first() {
        let e = AffineExpr::from_terms([("self.M", 1), ("i0", -1)], -1);
        assert_eq!(e.to_string(), "self.M - i0 - 1");
        assert_eq!(AffineExpr::term("i", -2).to_string(), "-2*i");
        assert_eq!(AffineExpr::constant(0).to_string(), "0");
    }

    #[test]
    fn substitute_scales_replacement() {
        let e = AffineExpr::from_terms([("i", 2), ("j", 1)], 3);
        let r = e.substitute("i", &AffineExpr::var("k").add_const(1));
        assert_eq!(r, AffineExpr::from_terms([("k", 2), ("j", 1)], 5));
    }
}
