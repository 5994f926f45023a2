//! Independent oracles for the integration tests.
//!
//! Nothing here calls into the solver or design-matrix code paths it is used
//! to check: matrices are built with plain loops and systems are solved by
//! Gaussian elimination on the normal equations.

#![allow(dead_code)]

use polyinv::{Dataset, IndexSet, Monomial, PenaltySpec, Polynomial};
use rand::Rng;

/// Dense `x^m` by repeated multiplication.
pub fn monomial_value(m: &Monomial, x: &[f64]) -> f64 {
    let mut v = 1.0;
    for (&e, &xi) in m.exponents().iter().zip(x) {
        for _ in 0..e {
            v *= xi;
        }
    }
    v
}

pub fn eval_direct(f: &Polynomial, x: &[f64]) -> f64 {
    f.terms().map(|(m, c)| c * monomial_value(m, x)).sum()
}

pub fn build_design(data: &Dataset, set: &IndexSet) -> Vec<Vec<f64>> {
    data.x()
        .iter()
        .map(|row| set.iter().map(|m| monomial_value(m, row)).collect())
        .collect()
}

/// Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        assert!(a[col][col].abs() > 1e-300, "singular system");
        let pivot = a[col].clone();
        for r in col + 1..n {
            let f = a[r][col] / pivot[col];
            if f == 0.0 {
                continue;
            }
            for (v, p) in a[r][col..].iter_mut().zip(&pivot[col..]) {
                *v -= f * p;
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Solves `(Z^T Z + Lambda) a = Z^T y` for a ridge penalty (or OLS when empty).
pub fn ridge_normal_equations(data: &Dataset, set: &IndexSet, penalty: &PenaltySpec) -> Vec<f64> {
    let z = build_design(data, set);
    let k = set.len();
    let mut gram = vec![vec![0.0; k]; k];
    let mut rhs = vec![0.0; k];
    for (row, y) in z.iter().zip(data.y()) {
        for i in 0..k {
            rhs[i] += row[i] * y;
            for j in 0..k {
                gram[i][j] += row[i] * row[j];
            }
        }
    }
    for (i, m) in set.iter().enumerate() {
        if let Some(w) = penalty.weight(m) {
            gram[i][i] += w;
        }
    }
    gauss_solve(gram, rhs)
}

/// Closed-form lasso for an orthonormal design: `a_k = z_k^T y` unpenalized,
/// `soft(z_k^T y, lambda_k / 2)` penalized.
pub fn lasso_orthonormal(z: &[Vec<f64>], y: &[f64], lambdas: &[Option<f64>]) -> Vec<f64> {
    (0..lambdas.len())
        .map(|k| {
            let zty: f64 = z.iter().zip(y).map(|(row, yi)| row[k] * yi).sum();
            match lambdas[k] {
                None => zty,
                Some(l) => {
                    let t = l / 2.0;
                    if zty > t {
                        zty - t
                    } else if zty < -t {
                        zty + t
                    } else {
                        0.0
                    }
                }
            }
        })
        .collect()
}

/// All exponent tuples `k` with `k <= m`, by odometer enumeration.
pub fn all_divisors(m: &Monomial) -> Vec<Vec<u32>> {
    let e = m.exponents();
    let mut cur = vec![0u32; e.len()];
    let mut out = Vec::new();
    loop {
        out.push(cur.clone());
        let mut i = 0;
        loop {
            if i == e.len() {
                return out;
            }
            if cur[i] < e[i] {
                cur[i] += 1;
                break;
            }
            cur[i] = 0;
            i += 1;
        }
    }
}

pub struct BruteAudit {
    pub downward_closed: bool,
    pub penalized_subset_of_greatest: bool,
    pub missing: Vec<Vec<u32>>,
    pub offending: Vec<Vec<u32>>,
}

/// Audit by enumerating every divisor of every member and every ordered pair.
pub fn brute_force_audit(set: &IndexSet, penalized: &IndexSet) -> BruteAudit {
    let members: Vec<Vec<u32>> = set.iter().map(|m| m.exponents().to_vec()).collect();
    let mut missing: Vec<Vec<u32>> = Vec::new();
    for m in set.iter() {
        for d in all_divisors(m) {
            if !members.contains(&d) && !missing.contains(&d) {
                missing.push(d);
            }
        }
    }
    let dominates = |a: &[u32], b: &[u32]| a.iter().zip(b).all(|(x, y)| x >= y);
    let mut offending = Vec::new();
    for p in penalized.iter() {
        let p = p.exponents();
        if members.iter().any(|q| q.as_slice() != p && dominates(q, p)) {
            offending.push(p.to_vec());
        }
    }
    BruteAudit {
        downward_closed: missing.is_empty(),
        penalized_subset_of_greatest: offending.is_empty(),
        missing,
        offending,
    }
}

pub fn random_monomial<R: Rng>(rng: &mut R, arity: usize, max_exp: u32) -> Monomial {
    Monomial::new((0..arity).map(|_| rng.random_range(0..=max_exp)).collect()).unwrap()
}

/// Downward closure of a few random monomials with total degree <= `degree`.
pub fn random_closed_set<R: Rng>(rng: &mut R, arity: usize, degree: u32) -> IndexSet {
    let gens = rng.random_range(1..=3);
    let mut set = IndexSet::new(arity).unwrap();
    for _ in 0..gens {
        let mut exps = vec![0u32; arity];
        let d = rng.random_range(0..=degree);
        for _ in 0..d {
            exps[rng.random_range(0..arity)] += 1;
        }
        set.insert(Monomial::new(exps).unwrap()).unwrap();
    }
    polyinv::downward_closure(&set).unwrap()
}

pub fn random_poly_on<R: Rng>(rng: &mut R, set: &IndexSet) -> Polynomial {
    Polynomial::from_terms(
        set.arity(),
        set.iter().map(|m| (m.clone(), rng.random_range(-2.0..2.0))).collect::<Vec<_>>(),
    )
    .unwrap()
}

pub fn random_dataset<R: Rng>(rng: &mut R, arity: usize, n: usize) -> Dataset {
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..arity).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let y = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
    Dataset::new(x, y).unwrap()
}

pub fn random_shift<R: Rng>(rng: &mut R, arity: usize, range: f64) -> Vec<f64> {
    (0..arity).map(|_| rng.random_range(-range..range)).collect()
}

/// Relative agreement `|a - b| <= tol * max(1, |b|)` for each entry.
pub fn max_rel_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(1.0))
        .fold(0.0, f64::max)
}
