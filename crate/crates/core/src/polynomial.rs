//! Sparse multivariate polynomials and their re-expansion under a shift of origin.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::monomial::{greatest_monomials, IndexSet, Monomial};

/// A polynomial `sum_m a_m x^m` with finitely many stored terms.
///
/// Explicit zero coefficients are kept until [`Polynomial::prune`] removes them.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    arity: usize,
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero(arity: usize) -> Result<Self> {
        if arity == 0 {
            return Err(Error::ZeroArity);
        }
        Ok(Polynomial {
            arity,
            terms: BTreeMap::new(),
        })
    }

    /// Builds a polynomial; repeated monomials have their coefficients summed.
    pub fn from_terms(arity: usize, terms: impl IntoIterator<Item = (Monomial, f64)>) -> Result<Self> {
        let mut p = Polynomial::zero(arity)?;
        for (m, c) in terms {
            p.add_term(m, c)?;
        }
        Ok(p)
    }

    pub fn add_term(&mut self, m: Monomial, coef: f64) -> Result<()> {
        check_dim(self.arity, m.arity())?;
        if !coef.is_finite() {
            return Err(Error::invalid(format!("non-finite coefficient for {m}")));
        }
        *self.terms.entry(m).or_insert(0.0) += coef;
        Ok(())
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Stored coefficient of `m`, zero when absent.
    pub fn coefficient(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> + '_ {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Stored monomials, zero coefficients included.
    pub fn support(&self) -> IndexSet {
        IndexSet::from_monomials(self.arity, self.terms.keys().cloned())
            .expect("terms share the polynomial arity")
    }

    /// Monomials carrying a nonzero coefficient.
    pub fn nonzero_support(&self) -> IndexSet {
        IndexSet::from_monomials(
            self.arity,
            self.terms.iter().filter(|(_, &c)| c != 0.0).map(|(m, _)| m.clone()),
        )
        .expect("terms share the polynomial arity")
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.arity, x.len())?;
        Ok(self.evaluate_unchecked(x))
    }

    pub(crate) fn evaluate_unchecked(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(m, &c)| c * m.eval(x)).sum()
    }

    /// The polynomial `g(x) = f(x + shift)`.
    ///
    /// Each term `a_i x^i` expands to
    /// `a_i * prod_l C(i_l, k_l) shift_l^(i_l - k_l) x^k` over all `k <= i`.
    /// Binomial products are exact integers; contributions whose shift factor
    /// is exactly zero are skipped, so a zero shift reproduces `self`.
    pub fn translate(&self, shift: &[f64]) -> Result<Polynomial> {
        check_dim(self.arity, shift.len())?;
        if let Some(bad) = shift.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite shift component {bad}")));
        }
        let mut out = BTreeMap::new();
        for (i, &a) in &self.terms {
            for k in i.divisors() {
                let mut binom: u64 = 1;
                let mut factor = 1.0;
                for ((&il, &kl), &pl) in i.exponents().iter().zip(k.exponents()).zip(shift) {
                    binom = binom
                        .checked_mul(binomial(il, kl).ok_or_else(|| Error::BinomialOverflow(i.clone()))?)
                        .ok_or_else(|| Error::BinomialOverflow(i.clone()))?;
                    factor *= pl.powi((il - kl) as i32);
                }
                if factor == 0.0 {
                    continue;
                }
                *out.entry(k).or_insert(0.0) += a * (binom as f64) * factor;
            }
        }
        Ok(Polynomial {
            arity: self.arity,
            terms: out,
        })
    }

    /// Maximal monomials among those with a nonzero coefficient.
    pub fn greatest_monomials(&self) -> Result<IndexSet> {
        let support = self.nonzero_support();
        if support.is_empty() {
            return Err(Error::ZeroPolynomial);
        }
        greatest_monomials(&support)
    }

    /// Drops terms with `|coefficient| <= eps`.
    pub fn prune(&self, eps: f64) -> Polynomial {
        assert!(eps >= 0.0, "prune threshold must be non-negative");
        Polynomial {
            arity: self.arity,
            terms: self
                .terms
                .iter()
                .filter(|(_, &c)| c.abs() > eps)
                .map(|(m, &c)| (m.clone(), c))
                .collect(),
        }
    }
}

/// Free-standing alias of [`Polynomial::greatest_monomials`].
pub fn greatest_monomials_of_poly(f: &Polynomial) -> Result<IndexSet> {
    f.greatest_monomials()
}

/// Exact `C(n, k)` in 64-bit arithmetic; `None` on overflow.
pub fn binomial(n: u32, k: u32) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k) as u64;
    let n = n as u64;
    let mut acc: u64 = 1;
    for j in 0..k {
        // acc * (n - j) / (j + 1) is exact at every step.
        acc = acc.checked_mul(n - j)? / (j + 1);
    }
    Some(acc)
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    exp: Monomial,
    coef: f64,
}

#[derive(Serialize, Deserialize)]
struct PolynomialRepr {
    arity: usize,
    terms: Vec<TermRepr>,
}

impl Serialize for Polynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolynomialRepr {
            arity: self.arity,
            terms: self
                .terms
                .iter()
                .map(|(m, &c)| TermRepr { exp: m.clone(), coef: c })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = PolynomialRepr::deserialize(d)?;
        Polynomial::from_terms(repr.arity, repr.terms.into_iter().map(|t| (t.exp, t.coef)))
            .map_err(serde::de::Error::custom)
    }
}
