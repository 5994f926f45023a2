//! Losses of the form `g(SSR) + PEN` and the fitters that minimize them.
//!
//! Penalties are selective: only coefficients of the monomials listed in a
//! [`PenaltySpec`] are penalized, each with its own weight. All fitters use
//! the unscaled objective `||y - Z a||^2 + PEN(a)` (no `1/(2n)` factor), so
//! weights from libraries that scale the data term need rescaling.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::{design_matrix, ssr, Dataset, DesignMatrix};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{project_out, FullRankSvd};
use crate::monomial::{IndexSet, Monomial};
use crate::polynomial::Polynomial;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyFamily {
    None,
    Ridge,
    Lasso,
}

/// Which coefficients are penalized, how, and how strongly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PenaltyRepr", into = "PenaltyRepr")]
pub struct PenaltySpec {
    family: PenaltyFamily,
    weights: BTreeMap<Monomial, f64>,
}

impl PenaltySpec {
    pub fn new(family: PenaltyFamily, weights: impl IntoIterator<Item = (Monomial, f64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (m, w) in weights {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidPenalty(format!("weight for {m} must be positive, got {w}")));
            }
            if let Some((first, _)) = map.first_key_value() {
                check_dim(Monomial::arity(first), m.arity())?;
            }
            if map.insert(m.clone(), w).is_some() {
                return Err(Error::InvalidPenalty(format!("{m} listed twice")));
            }
        }
        match (family, map.is_empty()) {
            (PenaltyFamily::None, false) => {
                Err(Error::InvalidPenalty("family none cannot list penalized terms".into()))
            }
            (PenaltyFamily::Ridge | PenaltyFamily::Lasso, true) => {
                Err(Error::InvalidPenalty("ridge/lasso need at least one penalized term".into()))
            }
            _ => Ok(PenaltySpec { family, weights: map }),
        }
    }

    pub fn none() -> Self {
        PenaltySpec {
            family: PenaltyFamily::None,
            weights: BTreeMap::new(),
        }
    }

    /// Same weight `lambda` on every monomial of `penalized`.
    pub fn uniform(family: PenaltyFamily, penalized: &IndexSet, lambda: f64) -> Result<Self> {
        PenaltySpec::new(family, penalized.iter().map(|m| (m.clone(), lambda)))
    }

    pub fn family(&self) -> PenaltyFamily {
        self.family
    }

    pub fn weights(&self) -> &BTreeMap<Monomial, f64> {
        &self.weights
    }

    pub fn weight(&self, m: &Monomial) -> Option<f64> {
        self.weights.get(m).copied()
    }

    pub fn penalized_set(&self, arity: usize) -> Result<IndexSet> {
        IndexSet::from_monomials(arity, self.weights.keys().cloned())
    }

    /// `PEN(a)` for the coefficients of `f`.
    pub fn value(&self, f: &Polynomial) -> f64 {
        self.weights
            .iter()
            .map(|(m, &w)| {
                let a = f.coefficient(m);
                match self.family {
                    PenaltyFamily::None => 0.0,
                    PenaltyFamily::Ridge => w * a * a,
                    PenaltyFamily::Lasso => w * a.abs(),
                }
            })
            .sum()
    }

    /// Errors unless every penalized monomial belongs to `set`.
    pub fn check_within(&self, set: &IndexSet) -> Result<()> {
        for m in self.weights.keys() {
            check_dim(set.arity(), m.arity())?;
            if !set.contains(m) {
                return Err(Error::InvalidPenalty(format!("penalized {m} is not in the model")));
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct PenaltyTermRepr {
    exp: Monomial,
    lambda: f64,
}

#[derive(Serialize, Deserialize)]
struct PenaltyRepr {
    family: PenaltyFamily,
    #[serde(default)]
    terms: Vec<PenaltyTermRepr>,
}

impl TryFrom<PenaltyRepr> for PenaltySpec {
    type Error = Error;
    fn try_from(r: PenaltyRepr) -> Result<Self> {
        PenaltySpec::new(r.family, r.terms.into_iter().map(|t| (t.exp, t.lambda)))
    }
}

impl From<PenaltySpec> for PenaltyRepr {
    fn from(p: PenaltySpec) -> Self {
        PenaltyRepr {
            family: p.family,
            terms: p
                .weights
                .into_iter()
                .map(|(exp, lambda)| PenaltyTermRepr { exp, lambda })
                .collect(),
        }
    }
}

/// Outer transform applied to the residual sum of squares.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    #[default]
    Identity,
    Sqrt,
    Log1p,
}

impl Transform {
    pub const ALL: [Transform; 3] = [Transform::Identity, Transform::Sqrt, Transform::Log1p];

    pub fn apply(self, v: f64) -> f64 {
        match self {
            Transform::Identity => v,
            Transform::Sqrt => v.sqrt(),
            Transform::Log1p => v.ln_1p(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    #[serde(default)]
    pub g: Transform,
    pub penalty: PenaltySpec,
}

/// `g(SSR(f)) + PEN(f)`.
pub fn loss(f: &Polynomial, data: &Dataset, spec: &LossSpec) -> Result<f64> {
    for m in spec.penalty.weights.keys() {
        check_dim(f.arity(), m.arity())?;
    }
    Ok(spec.g.apply(ssr(f, data)?) + spec.penalty.value(f))
}

/// A fitted model with its diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: Polynomial,
    pub ssr: f64,
    pub loss: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition_warning: Option<String>,
}

impl FitResult {
    #[allow(clippy::too_many_arguments)]
    fn build(
        dm: &DesignMatrix,
        arity: usize,
        coef: &DVector<f64>,
        data: &Dataset,
        penalty: &PenaltySpec,
        iterations: usize,
        converged: bool,
        condition_warning: Option<String>,
    ) -> Result<Self> {
        let model = Polynomial::from_terms(arity, dm.columns.iter().cloned().zip(coef.iter().copied()))?;
        let ssr = ssr(&model, data)?;
        let loss = ssr + penalty.value(&model);
        Ok(FitResult {
            model,
            ssr,
            loss,
            iterations,
            converged,
            condition_warning,
        })
    }
}

fn prepare(data: &Dataset, set: &IndexSet) -> Result<DesignMatrix> {
    check_dim(set.arity(), data.p())?;
    design_matrix(data.x(), set)
}

fn response(data: &Dataset) -> DVector<f64> {
    DVector::from_column_slice(data.y())
}

/// Ordinary least squares over all polynomials supported on `set`.
pub fn fit_ols(data: &Dataset, set: &IndexSet) -> Result<FitResult> {
    let dm = prepare(data, set)?;
    let svd = FullRankSvd::new(&dm.z, "design matrix")?;
    let coef = svd.solve(&response(data));
    FitResult::build(&dm, set.arity(), &coef, data, &PenaltySpec::none(), 1, true, svd.warning())
}

/// Minimizes `||y - Z a||^2 + sum_m lambda_m a_m^2` over the penalized monomials.
///
/// Solved as the stacked least-squares problem `[Z; sqrt(Lambda)] a ~ [y; 0]`.
pub fn fit_ridge_selective(data: &Dataset, set: &IndexSet, penalty: &PenaltySpec) -> Result<FitResult> {
    match penalty.family {
        PenaltyFamily::None => return fit_ols(data, set),
        PenaltyFamily::Ridge => {}
        PenaltyFamily::Lasso => return Err(Error::InvalidPenalty("expected a ridge penalty".into())),
    }
    penalty.check_within(set)?;
    let dm = prepare(data, set)?;
    let n = dm.nrows();
    let k = penalty.weights.len();
    let mut aug = DMatrix::zeros(n + k, dm.ncols());
    aug.rows_mut(0, n).copy_from(&dm.z);
    for (row, (m, &w)) in penalty.weights.iter().enumerate() {
        let col = dm.columns.iter().position(|c| c == m).expect("checked membership");
        aug[(n + row, col)] = w.sqrt();
    }
    let mut rhs = DVector::zeros(n + k);
    rhs.rows_mut(0, n).copy_from(&response(data));
    let svd = FullRankSvd::new(&aug, "augmented ridge system")?;
    let coef = svd.solve(&rhs);
    FitResult::build(&dm, set.arity(), &coef, data, penalty, 1, true, svd.warning())
}

/// Coordinate descent controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LassoSettings {
    /// Stop once no coefficient moves by more than this within a sweep.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Subgradient tolerance used to accept the active-set refinement.
    pub tol_kkt: f64,
}

impl Default for LassoSettings {
    fn default() -> Self {
        LassoSettings {
            tol: 1e-10,
            max_sweeps: 100_000,
            tol_kkt: 1e-7,
        }
    }
}

pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Minimizes `||y - Z a||^2 + sum_m lambda_m |a_m|` over the penalized monomials.
pub fn fit_lasso_selective(data: &Dataset, set: &IndexSet, penalty: &PenaltySpec) -> Result<FitResult> {
    fit_lasso_traced(data, set, penalty, LassoSettings::default()).map(|(fit, _)| fit)
}

/// Lasso fit plus the objective value after every sweep.
///
/// Unpenalized coefficients enter linearly without penalty, so they are
/// minimized exactly as one block: the penalized columns and the response
/// are projected onto the orthogonal complement of the unpenalized columns,
/// cyclic coordinate descent with soft-thresholding runs on the projected
/// problem, and the unpenalized block is recovered by least squares. Each
/// sweep value is therefore the full objective at the block-optimal
/// unpenalized coefficients. After convergence the active set and signs are
/// fixed and the stationarity equations are solved directly; that refinement
/// is kept only if it is sign-consistent and passes the subgradient check.
pub fn fit_lasso_traced(
    data: &Dataset,
    set: &IndexSet,
    penalty: &PenaltySpec,
    settings: LassoSettings,
) -> Result<(FitResult, Vec<f64>)> {
    match penalty.family {
        PenaltyFamily::None => return fit_ols(data, set).map(|f| (f, Vec::new())),
        PenaltyFamily::Lasso => {}
        PenaltyFamily::Ridge => return Err(Error::InvalidPenalty("expected a lasso penalty".into())),
    }
    penalty.check_within(set)?;
    let dm = prepare(data, set)?;
    let y = response(data);
    let ncols = dm.ncols();
    let weight_of: Vec<Option<f64>> = dm.columns.iter().map(|m| penalty.weight(m)).collect();
    let pen_idx: Vec<usize> = (0..ncols).filter(|&c| weight_of[c].is_some()).collect();
    let unp_idx: Vec<usize> = (0..ncols).filter(|&c| weight_of[c].is_none()).collect();

    let unp_svd = if unp_idx.is_empty() {
        None
    } else {
        Some(FullRankSvd::new(&dm.z.select_columns(&unp_idx), "unpenalized block")?)
    };
    let basis = unp_svd.as_ref().map(FullRankSvd::basis);

    let zp: Vec<DVector<f64>> = pen_idx.iter().map(|&c| dm.z.column(c).into_owned()).collect();
    let zhat: Vec<DVector<f64>> = zp.iter().map(|z| project_out(basis, z)).collect();
    let norms: Vec<f64> = zhat.iter().map(|z| z.norm_squared()).collect();
    let lambdas: Vec<f64> = pen_idx.iter().map(|&c| weight_of[c].unwrap()).collect();

    let mut b = vec![0.0; pen_idx.len()];
    let mut r = project_out(basis, &y);
    let objective = |r: &DVector<f64>, b: &[f64]| {
        r.norm_squared() + b.iter().zip(&lambdas).map(|(v, l)| l * v.abs()).sum::<f64>()
    };
    let mut trace = Vec::new();
    let mut sweeps = 0;
    let mut cd_converged = false;
    while sweeps < settings.max_sweeps {
        sweeps += 1;
        let mut max_change: f64 = 0.0;
        for k in 0..b.len() {
            if norms[k] == 0.0 {
                // column lies in the unpenalized span; only the penalty sees it
                continue;
            }
            let rho = zhat[k].dot(&r) + norms[k] * b[k];
            let next = soft_threshold(rho, lambdas[k] / 2.0) / norms[k];
            let delta = next - b[k];
            if delta != 0.0 {
                r.axpy(-delta, &zhat[k], 1.0);
                b[k] = next;
                max_change = max_change.max(delta.abs());
            }
        }
        trace.push(objective(&r, &b));
        if max_change < settings.tol {
            cd_converged = true;
            break;
        }
    }

    let mut coef = DVector::zeros(ncols);
    for (k, &c) in pen_idx.iter().enumerate() {
        coef[c] = b[k];
    }
    if let Some(svd) = &unp_svd {
        let mut partial = y.clone();
        for (k, z) in zp.iter().enumerate() {
            partial.axpy(-b[k], z, 1.0);
        }
        let au = svd.solve(&partial);
        for (k, &c) in unp_idx.iter().enumerate() {
            coef[c] = au[k];
        }
    }

    let mut refined = false;
    if let Some(p) = refine_active_set(&dm.z, &y, &weight_of, &coef, settings.tol_kkt) {
        let obj_cd = lasso_objective(&dm.z, &y, &weight_of, &coef);
        let obj_p = lasso_objective(&dm.z, &y, &weight_of, &p);
        if obj_p <= obj_cd + 1e-9 * (1.0 + obj_cd.abs()) {
            coef = p;
            refined = true;
        }
    }
    let warning = unp_svd.as_ref().and_then(FullRankSvd::warning);
    let fit = FitResult::build(
        &dm,
        set.arity(),
        &coef,
        data,
        penalty,
        sweeps,
        cd_converged || refined,
        warning,
    )?;
    Ok((fit, trace))
}

fn lasso_objective(z: &DMatrix<f64>, y: &DVector<f64>, weight_of: &[Option<f64>], a: &DVector<f64>) -> f64 {
    let r = y - z * a;
    r.norm_squared()
        + weight_of
            .iter()
            .zip(a.iter())
            .map(|(w, v)| w.map_or(0.0, |w| w * v.abs()))
            .sum::<f64>()
}

/// Largest subgradient violation of `||y - Z a||^2 + sum lambda |a|` at `a`.
fn kkt_residual(z: &DMatrix<f64>, y: &DVector<f64>, weight_of: &[Option<f64>], a: &DVector<f64>) -> f64 {
    let r = y - z * a;
    let grad = z.tr_mul(&r) * 2.0;
    weight_of
        .iter()
        .enumerate()
        .map(|(c, w)| match w {
            None => grad[c].abs(),
            Some(w) if a[c] != 0.0 => (grad[c] - w * a[c].signum()).abs(),
            Some(w) => (grad[c].abs() - w).max(0.0),
        })
        .fold(0.0, f64::max)
}

/// Solves the stationarity equations on the active set with signs fixed.
fn refine_active_set(
    z: &DMatrix<f64>,
    y: &DVector<f64>,
    weight_of: &[Option<f64>],
    a: &DVector<f64>,
    tol_kkt: f64,
) -> Option<DVector<f64>> {
    let active: Vec<usize> = (0..a.len())
        .filter(|&c| weight_of[c].is_none() || a[c] != 0.0)
        .collect();
    if active.is_empty() {
        return None;
    }
    let svd = FullRankSvd::new(&z.select_columns(&active), "active set").ok()?;
    let shift = DVector::from_iterator(
        active.len(),
        active
            .iter()
            .map(|&c| weight_of[c].map_or(0.0, |w| w * a[c].signum() / 2.0)),
    );
    let sol = svd.solve(y) - svd.gram_inverse_mul(&shift);
    let mut out = DVector::zeros(a.len());
    for (k, &c) in active.iter().enumerate() {
        if weight_of[c].is_some() && sol[k].signum() != a[c].signum() {
            return None;
        }
        out[c] = sol[k];
    }
    (kkt_residual(z, y, weight_of, &out) <= tol_kkt).then_some(out)
}

/// Largest subgradient-condition violation of `model` for the lasso objective.
///
/// Unpenalized coordinates contribute `|2 z_k^T r|`; penalized ones
/// `|2 z_k^T r - lambda_k sign(a_k)|` when active and `max(0, |2 z_k^T r| - lambda_k)`
/// at zero.
pub fn kkt_violation(data: &Dataset, set: &IndexSet, penalty: &PenaltySpec, model: &Polynomial) -> Result<f64> {
    penalty.check_within(set)?;
    check_dim(set.arity(), model.arity())?;
    let dm = prepare(data, set)?;
    let a = DVector::from_iterator(dm.ncols(), dm.columns.iter().map(|m| model.coefficient(m)));
    let weight_of: Vec<Option<f64>> = dm.columns.iter().map(|m| penalty.weight(m)).collect();
    Ok(kkt_residual(&dm.z, &response(data), &weight_of, &a))
}

/// Dispatches on the penalty family.
pub fn fit(data: &Dataset, set: &IndexSet, penalty: &PenaltySpec) -> Result<FitResult> {
    match penalty.family {
        PenaltyFamily::None => fit_ols(data, set),
        PenaltyFamily::Ridge => fit_ridge_selective(data, set, penalty),
        PenaltyFamily::Lasso => fit_lasso_selective(data, set, penalty),
    }
}
