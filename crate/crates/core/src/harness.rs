//! Numerical checks of translation invariance.
//!
//! Shifting the predictor coding by `P` while re-expanding a polynomial by
//! `-P` leaves residuals untouched, and leaves the coefficients of greatest
//! monomials untouched. A loss `g(SSR) + PEN` whose penalty only looks at
//! greatest monomials of a downward-closed model is then invariant, and so is
//! its minimizer. The checks here measure each of those identities, audit a
//! model/penalty pair for the sufficient condition, and hunt for violations
//! when the condition fails.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{generate_synthetic_with, ssr, Dataset, Interval};
use crate::error::{check_dim, Error, Result};
use crate::monomial::{downward_closure, greatest_monomials, is_downward_closed, IndexSet, Monomial};
use crate::polynomial::Polynomial;
use crate::rng::trial_stream;
use crate::solvers::{fit, loss, LossSpec, PenaltyFamily, PenaltySpec, Transform};

/// Prediction/coefficient tolerance for closed-form fits.
pub const TOL_FIT: f64 = 1e-6;
/// Tolerance for coordinate-descent fits.
pub const TOL_FIT_LASSO: f64 = 1e-5;
/// Relative prediction gap that counts as a genuine violation.
pub const VIOLATION_THRESHOLD: f64 = 1e-3;

fn negated(shift: &[f64]) -> Vec<f64> {
    shift.iter().map(|v| -v).collect()
}

/// `|SSR_{X,y}(f) - SSR_{X+P,y}(T_{-P} f)| / (1 + SSR_{X,y}(f))`.
pub fn check_ssr_invariance(f: &Polynomial, data: &Dataset, shift: &[f64]) -> Result<f64> {
    check_dim(f.arity(), shift.len())?;
    let before = ssr(f, data)?;
    let after = ssr(&f.translate(&negated(shift))?, &data.translated(shift)?)?;
    Ok((before - after).abs() / (1.0 + before))
}

/// Largest change of a greatest-monomial coefficient under `f -> T_{-P} f`.
pub fn check_greatest_coeff_invariance(f: &Polynomial, shift: &[f64]) -> Result<f64> {
    let greatest = f.greatest_monomials()?;
    let moved = f.translate(&negated(shift))?;
    Ok(greatest
        .iter()
        .map(|m| (f.coefficient(m) - moved.coefficient(m)).abs())
        .fold(0.0, f64::max))
}

/// Relative gap between `L_{X,y}(f)` and `L_{X+P,y}(T_{-P} f)`.
///
/// Requires `f` supported on `model` and every penalized monomial to be a
/// greatest monomial of `model`; otherwise returns [`Error::ConditionNotMet`].
pub fn check_loss_invariance(
    f: &Polynomial,
    data: &Dataset,
    shift: &[f64],
    spec: &LossSpec,
    model: &IndexSet,
) -> Result<f64> {
    check_dim(model.arity(), f.arity())?;
    if !f.nonzero_support().is_subset(model) {
        return Err(Error::ConditionNotMet("polynomial has terms outside the model".into()));
    }
    let greatest = greatest_monomials(model)?;
    if let Some(m) = spec.penalty.weights().keys().find(|m| !greatest.contains(m)) {
        return Err(Error::ConditionNotMet(format!("penalized {m} is not a greatest monomial")));
    }
    let before = loss(f, data, spec)?;
    let after = loss(&f.translate(&negated(shift))?, &data.translated(shift)?, spec)?;
    Ok((before - after).abs() / (1.0 + before.abs()))
}

/// Static check of the sufficient condition for a model and penalized set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Audit {
    pub downward_closed: bool,
    pub penalized_subset_of_greatest: bool,
    pub compliant: bool,
    /// Divisors of model monomials absent from the model.
    pub missing_divisors: Vec<Monomial>,
    /// Penalized monomials that are not greatest in the model.
    pub offending_penalized: Vec<Monomial>,
}

pub fn audit_penalty(model: &IndexSet, penalized: &IndexSet) -> Result<Audit> {
    check_dim(model.arity(), penalized.arity())?;
    if !penalized.is_subset(model) {
        return Err(Error::InvalidPenalty(format!(
            "penalized monomials {:?} are not in the model",
            penalized.difference(model)
        )));
    }
    let downward_closed = is_downward_closed(model)?;
    let missing_divisors = if downward_closed {
        Vec::new()
    } else {
        downward_closure(model)?.difference(model)
    };
    let greatest = greatest_monomials(model)?;
    let offending_penalized = penalized.difference(&greatest);
    let penalized_subset_of_greatest = offending_penalized.is_empty();
    Ok(Audit {
        downward_closed,
        penalized_subset_of_greatest,
        compliant: downward_closed && penalized_subset_of_greatest,
        missing_divisors,
        offending_penalized,
    })
}

/// Settings for a batch of randomized fit comparisons.
///
/// Trial `t` draws from ChaCha8 stream `t` of `seed`, in this order: truth
/// coefficients (standard normal, one per model monomial), the `n` data rows
/// and their noise, the shift vector, then the test points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrialConfigRepr", into = "TrialConfigRepr")]
pub struct TrialConfig {
    pub model: IndexSet,
    pub penalty: PenaltySpec,
    pub g: Transform,
    pub n: usize,
    pub sigma: f64,
    pub x_range: Interval,
    pub shift_range: Interval,
    pub n_test_points: usize,
    pub seed: u64,
    pub trials: usize,
    /// Overrides the family default ([`TOL_FIT`] / [`TOL_FIT_LASSO`]).
    pub tolerance: Option<f64>,
}

impl TrialConfig {
    /// Defaults: noiseless, 40 rows on `[-2, 2]`, shifts on `[-5, 5]`, 20 test points, 50 trials.
    pub fn new(model: IndexSet, penalty: PenaltySpec) -> Self {
        TrialConfig {
            model,
            penalty,
            g: Transform::Identity,
            n: 40,
            sigma: 0.0,
            x_range: Interval::default(),
            shift_range: Interval::new(-5.0, 5.0).expect("valid"),
            n_test_points: 20,
            seed: 0,
            trials: 50,
            tolerance: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.n_test_points == 0 || self.n == 0 {
            return Err(Error::invalid("trials, n and n_test_points must be positive"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma must be non-negative"));
        }
        if self.x_range.is_degenerate() {
            return Err(Error::invalid("x_range must have positive width"));
        }
        if let Some(t) = self.tolerance {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::invalid("tolerance must be positive"));
            }
        }
        if self.model.is_empty() {
            return Err(Error::EmptyIndexSet);
        }
        self.penalty.check_within(&self.model)
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or(match self.penalty.family() {
            PenaltyFamily::Lasso => TOL_FIT_LASSO,
            _ => TOL_FIT,
        })
    }

    pub fn audit(&self) -> Result<Audit> {
        audit_penalty(&self.model, &self.penalty.penalized_set(self.model.arity())?)
    }

    fn loss_spec(&self) -> LossSpec {
        LossSpec {
            g: self.g,
            penalty: self.penalty.clone(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct TrialConfigRepr {
    arity: usize,
    monomials: Vec<Monomial>,
    penalty: PenaltySpec,
    #[serde(default)]
    g: Transform,
    n: usize,
    #[serde(default)]
    sigma: f64,
    #[serde(default)]
    x_range: Interval,
    shift_range: Interval,
    n_test_points: usize,
    #[serde(default)]
    seed: u64,
    trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tolerance: Option<f64>,
}

impl TryFrom<TrialConfigRepr> for TrialConfig {
    type Error = Error;
    fn try_from(r: TrialConfigRepr) -> Result<Self> {
        let cfg = TrialConfig {
            model: IndexSet::from_monomials(r.arity, r.monomials)?,
            penalty: r.penalty,
            g: r.g,
            n: r.n,
            sigma: r.sigma,
            x_range: r.x_range,
            shift_range: r.shift_range,
            n_test_points: r.n_test_points,
            seed: r.seed,
            trials: r.trials,
            tolerance: r.tolerance,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl From<TrialConfig> for TrialConfigRepr {
    fn from(c: TrialConfig) -> Self {
        TrialConfigRepr {
            arity: c.model.arity(),
            monomials: c.model.iter().cloned().collect(),
            penalty: c.penalty,
            g: c.g,
            n: c.n,
            sigma: c.sigma,
            x_range: c.x_range,
            shift_range: c.shift_range,
            n_test_points: c.n_test_points,
            seed: c.seed,
            trials: c.trials,
            tolerance: c.tolerance,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Invariant,
    Violated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialDetail {
    pub trial: usize,
    pub shift: Vec<f64>,
    pub dataset_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pred_discrepancy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relative_discrepancy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coeff_discrepancy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_discrepancy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TrialDetail {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub max_pred_discrepancy: f64,
    pub max_coeff_discrepancy: f64,
    /// Relative gap `L_{X,y}(R) - L_{X+P,y}(T_{-P} R)` under the configured `g`.
    pub max_loss_discrepancy: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub failures: usize,
    pub trials: Vec<TrialDetail>,
}

impl InvarianceReport {
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:>6}  {:>12}  {:>12}  {:>12}  note", "trial", "pred", "coeff", "loss");
        for t in &self.trials {
            let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.3e}"));
            let _ = writeln!(
                s,
                "{:>6}  {:>12}  {:>12}  {:>12}  {}",
                t.trial,
                fmt(t.pred_discrepancy),
                fmt(t.coeff_discrepancy),
                fmt(t.loss_discrepancy),
                t.error.as_deref().unwrap_or("")
            );
        }
        let _ = writeln!(
            s,
            "max pred {:.3e}  max coeff {:.3e}  max loss {:.3e}  tolerance {:.1e}  failures {}  verdict {:?}",
            self.max_pred_discrepancy,
            self.max_coeff_discrepancy,
            self.max_loss_discrepancy,
            self.tolerance,
            self.failures,
            self.verdict
        );
        s
    }
}

/// Everything needed to reproduce a trial whose fits disagree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationRecord {
    pub trial: usize,
    pub seed: u64,
    pub stream: u64,
    pub shift: Vec<f64>,
    pub dataset_digest: String,
    pub pred_discrepancy: f64,
    pub relative_discrepancy: f64,
    pub original_fit: Polynomial,
    pub shifted_fit: Polynomial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    /// First violating trial, if any. `None` is inconclusive, not a proof.
    pub violation: Option<ViolationRecord>,
    pub trials_run: usize,
    pub failures: usize,
    pub max_relative_discrepancy: f64,
}

struct TrialRun {
    detail: TrialDetail,
    fits: Option<(Polynomial, Polynomial)>,
}

fn run_trial(cfg: &TrialConfig, greatest: &IndexSet, trial: usize) -> TrialRun {
    let p = cfg.model.arity();
    let mut rng = trial_stream(cfg.seed, trial as u64);
    let truth = Polynomial::from_terms(
        p,
        cfg.model
            .iter()
            .map(|m| (m.clone(), StandardNormal.sample(&mut rng)))
            .collect::<Vec<_>>(),
    )
    .expect("model monomials share arity");
    let mut detail = TrialDetail {
        trial,
        shift: Vec::new(),
        dataset_digest: String::new(),
        pred_discrepancy: None,
        relative_discrepancy: None,
        coeff_discrepancy: None,
        loss_discrepancy: None,
        error: None,
    };
    let data = match generate_synthetic_with(&cfg.model, &truth, cfg.n, cfg.x_range, cfg.sigma, &mut rng) {
        Ok(d) => d,
        Err(e) => {
            detail.error = Some(e.to_string());
            return TrialRun { detail, fits: None };
        }
    };
    detail.dataset_digest = data.digest();
    let shift: Vec<f64> = (0..p).map(|_| cfg.shift_range.sample(&mut rng)).collect();
    detail.shift = shift.clone();
    let points: Vec<Vec<f64>> = (0..cfg.n_test_points)
        .map(|_| (0..p).map(|_| cfg.x_range.sample(&mut rng)).collect())
        .collect();

    let outcome = (|| -> Result<(Polynomial, Polynomial)> {
        let shifted = data.translated(&shift)?;
        let a = fit(&data, &cfg.model, &cfg.penalty)?;
        let b = fit(&shifted, &cfg.model, &cfg.penalty)?;
        if !a.converged || !b.converged {
            return Err(Error::NoUniqueSolution("solver did not converge".into()));
        }
        let mut pred = 0.0f64;
        for x in &points {
            let xs: Vec<f64> = x.iter().zip(&shift).map(|(u, v)| u + v).collect();
            pred = pred.max((a.model.evaluate(x)? - b.model.evaluate(&xs)?).abs());
        }
        let coeff = greatest
            .iter()
            .map(|m| (a.model.coefficient(m) - b.model.coefficient(m)).abs())
            .fold(0.0, f64::max);
        let spec = cfg.loss_spec();
        let l_orig = loss(&a.model, &data, &spec)?;
        let l_shift = loss(&a.model.translate(&negated(&shift))?, &shifted, &spec)?;
        let scale = data.response_rms();
        detail.pred_discrepancy = Some(pred);
        detail.relative_discrepancy = Some(if scale > 0.0 { pred / scale } else { pred });
        detail.coeff_discrepancy = Some(coeff);
        detail.loss_discrepancy = Some((l_orig - l_shift).abs() / (1.0 + l_orig.abs()));
        Ok((a.model, b.model))
    })();
    match outcome {
        Ok(fits) => TrialRun { detail, fits: Some(fits) },
        Err(e) => {
            detail.error = Some(e.to_string());
            TrialRun { detail, fits: None }
        }
    }
}

/// Fits original and shifted data and compares the two fitted functions.
///
/// Requires the configuration to pass [`audit_penalty`]. Trials run in
/// parallel; the report is identical for a given seed regardless of threads.
pub fn check_fit_invariance(cfg: &TrialConfig) -> Result<InvarianceReport> {
    cfg.validate()?;
    let audit = cfg.audit()?;
    if !audit.compliant {
        return Err(Error::ConditionNotMet(format!(
            "missing divisors {:?}, non-greatest penalized {:?}",
            audit.missing_divisors, audit.offending_penalized
        )));
    }
    let greatest = greatest_monomials(&cfg.model)?;
    let details: Vec<TrialDetail> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, &greatest, t).detail)
        .collect();
    let failures = details.iter().filter(|d| d.failed()).count();
    if failures == details.len() {
        return Err(Error::AllTrialsFailed(failures));
    }
    let max_of = |f: fn(&TrialDetail) -> Option<f64>| details.iter().filter_map(f).fold(0.0, f64::max);
    let max_pred = max_of(|d| d.pred_discrepancy);
    let max_coeff = max_of(|d| d.coeff_discrepancy);
    let max_loss = max_of(|d| d.loss_discrepancy);
    let tolerance = cfg.tolerance();
    let verdict = if max_pred <= tolerance && max_coeff <= tolerance {
        Verdict::Invariant
    } else {
        Verdict::Violated
    };
    Ok(InvarianceReport {
        max_pred_discrepancy: max_pred,
        max_coeff_discrepancy: max_coeff,
        max_loss_discrepancy: max_loss,
        tolerance,
        verdict,
        failures,
        trials: details,
    })
}

/// Looks for a trial whose two fits differ by more than [`VIOLATION_THRESHOLD`]
/// relative to the root-mean-square response.
///
/// Only meaningful when the configuration fails the audit; compliant
/// configurations are rejected with [`Error::SearchVacuous`].
pub fn search_counterexample(cfg: &TrialConfig) -> Result<SearchReport> {
    cfg.validate()?;
    if cfg.audit()?.compliant {
        return Err(Error::SearchVacuous);
    }
    let greatest = greatest_monomials(&cfg.model)?;
    let mut failures = 0;
    let mut max_rel = 0.0f64;
    for t in 0..cfg.trials {
        let run = run_trial(cfg, &greatest, t);
        let Some((original_fit, shifted_fit)) = run.fits else {
            failures += 1;
            continue;
        };
        let rel = run.detail.relative_discrepancy.unwrap_or(0.0);
        max_rel = max_rel.max(rel);
        if rel > VIOLATION_THRESHOLD {
            return Ok(SearchReport {
                violation: Some(ViolationRecord {
                    trial: t,
                    seed: cfg.seed,
                    stream: t as u64,
                    shift: run.detail.shift,
                    dataset_digest: run.detail.dataset_digest,
                    pred_discrepancy: run.detail.pred_discrepancy.unwrap_or(0.0),
                    relative_discrepancy: rel,
                    original_fit,
                    shifted_fit,
                }),
                trials_run: t + 1,
                failures,
                max_relative_discrepancy: max_rel,
            });
        }
    }
    if failures == cfg.trials {
        return Err(Error::AllTrialsFailed(failures));
    }
    Ok(SearchReport {
        violation: None,
        trials_run: cfg.trials,
        failures,
        max_relative_discrepancy: max_rel,
    })
}

/// Random polynomial supported on `model` with coefficients uniform in `[-1, 1]`.
pub fn random_polynomial<R: Rng + ?Sized>(model: &IndexSet, rng: &mut R) -> Polynomial {
    Polynomial::from_terms(
        model.arity(),
        model
            .iter()
            .map(|m| (m.clone(), rng.random_range(-1.0..1.0)))
            .collect::<Vec<_>>(),
    )
    .expect("model monomials share arity")
}
