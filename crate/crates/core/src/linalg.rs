//! Dense least squares through the singular value decomposition.
//!
//! Matrices live in nalgebra; the decomposition itself is computed by faer.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOL: f64 = 1e-10;
/// Condition numbers above this get a warning attached to fits.
pub const COND_WARN: f64 = 1e8;

/// Thin SVD of a tall matrix that passed the full-column-rank check.
pub struct FullRankSvd {
    u: DMatrix<f64>,
    singular_values: DVector<f64>,
    v_t: DMatrix<f64>,
    cond: f64,
}

impl FullRankSvd {
    pub fn new(a: &DMatrix<f64>, what: &str) -> Result<Self> {
        let (rows, cols) = a.shape();
        if cols == 0 {
            return Err(Error::invalid(format!("{what}: no columns")));
        }
        if rows < cols {
            return Err(Error::NoUniqueSolution(format!(
                "{what}: {cols} coefficients but only {rows} rows"
            )));
        }
        let svd = faer::Mat::<f64>::from_fn(rows, cols, |i, j| a[(i, j)])
            .thin_svd()
            .map_err(|e| Error::NoUniqueSolution(format!("{what}: singular value decomposition failed ({e:?})")))?;
        let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
        let u = DMatrix::from_fn(rows, cols, |i, j| u[(i, j)]);
        let singular_values = DVector::from_fn(cols, |i, _| s[i]);
        let v_t = DMatrix::from_fn(cols, cols, |i, j| v[(j, i)]);
        let smax = singular_values.max();
        let smin = singular_values.min();
        if smax <= 0.0 || smax.is_nan() || smin < RANK_TOL * smax {
            return Err(Error::NoUniqueSolution(format!(
                "{what} is rank deficient (singular value ratio {:.3e})",
                if smax > 0.0 { smin / smax } else { 0.0 }
            )));
        }
        Ok(FullRankSvd {
            u,
            singular_values,
            v_t,
            cond: smax / smin,
        })
    }

    pub fn cond(&self) -> f64 {
        self.cond
    }

    pub fn warning(&self) -> Option<String> {
        (self.cond > COND_WARN).then(|| format!("ill-conditioned design (condition number {:.3e})", self.cond))
    }

    /// Minimizer of `||a x - b||`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut c = self.u.tr_mul(b);
        for (ci, s) in c.iter_mut().zip(self.singular_values.iter()) {
            *ci /= s;
        }
        self.v_t.tr_mul(&c)
    }

    /// `(a^T a)^{-1} g`.
    pub fn gram_inverse_mul(&self, g: &DVector<f64>) -> DVector<f64> {
        let mut c = &self.v_t * g;
        for (ci, s) in c.iter_mut().zip(self.singular_values.iter()) {
            *ci /= s * s;
        }
        self.v_t.tr_mul(&c)
    }

    /// Orthonormal basis of the column space.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.u
    }
}

/// Subtracts the projection onto the span of `basis` (orthonormal columns).
pub fn project_out(basis: Option<&DMatrix<f64>>, v: &DVector<f64>) -> DVector<f64> {
    match basis {
        Some(q) => v - q * q.tr_mul(v),
        None => v.clone(),
    }
}
