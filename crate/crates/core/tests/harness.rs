mod common;

use common::*;
use polyinv::harness::{TrialDetail, VIOLATION_THRESHOLD};
use polyinv::{
    check_fit_invariance, fit, fit_lasso_selective, search_counterexample, Dataset, Error, IndexSet, Interval,
    InvarianceReport, Monomial, PenaltyFamily, PenaltySpec, SearchReport, TrialConfig, Verdict,
};

fn m(v: &[u32]) -> Monomial {
    Monomial::new(v.to_vec()).unwrap()
}

fn quadratic_model() -> IndexSet {
    IndexSet::from_exponents(1, [[0], [1], [2]]).unwrap()
}

fn square_data(xs: &[f64]) -> Dataset {
    Dataset::new(xs.iter().map(|&x| vec![x]).collect(), xs.iter().map(|x| x * x).collect()).unwrap()
}

fn coefs(f: &polyinv::Polynomial, set: &IndexSet) -> Vec<f64> {
    set.iter().map(|mo| f.coefficient(mo)).collect()
}

#[test]
fn penalizing_the_linear_term_breaks_invariance_on_three_points() {
    let set = quadratic_model();
    let penalty = PenaltySpec::new(PenaltyFamily::Ridge, [(m(&[1]), 1.0)]).unwrap();
    let data = square_data(&[0.0, 1.0, 2.0]);
    let original = fit(&data, &set, &penalty).unwrap();
    let shifted = fit(&data.translated(&[2.0]).unwrap(), &set, &penalty).unwrap();

    // y = x^2 lies in the model and has no linear term, so the penalty costs nothing.
    assert!(max_rel_gap(&coefs(&original.model, &set), &[0.0, 0.0, 1.0]) < 1e-12);
    assert!(max_rel_gap(&coefs(&shifted.model, &set), &[-56.0 / 37.0, -8.0 / 111.0, 13.0 / 37.0]) < 1e-12);

    // R(x) - R'(x + 2) = 24x^2/37 - 4x/3 + 28/111
    for (x, want) in [(0.0, 28.0 / 111.0), (1.0, 24.0 / 37.0 - 4.0 / 3.0 + 28.0 / 111.0), (2.0, 20.0 / 111.0)] {
        let got = original.model.evaluate(&[x]).unwrap() - shifted.model.evaluate(&[x + 2.0]).unwrap();
        assert!((got - want).abs() < 1e-12, "x = {x}: {got} vs {want}");
    }
}

#[test]
fn lasso_counterexample_on_four_points() {
    let set = quadratic_model();
    let penalty = PenaltySpec::new(PenaltyFamily::Lasso, [(m(&[1]), 100.0)]).unwrap();
    let data = square_data(&[0.0, 1.0, 2.0, 3.0]);
    let original = fit_lasso_selective(&data, &set, &penalty).unwrap();
    let shifted = fit_lasso_selective(&data.translated(&[2.0]).unwrap(), &set, &penalty).unwrap();
    assert!(original.converged && shifted.converged);
    assert!(max_rel_gap(&coefs(&original.model, &set), &[0.0, 0.0, 1.0]) < 1e-9);
    // the linear coefficient is thresholded to zero after the shift
    assert!(max_rel_gap(&coefs(&shifted.model, &set), &[-200.0 / 83.0, 0.0, 109.0 / 249.0]) < 1e-9);
    let gap = original.model.evaluate(&[1.0]).unwrap() - shifted.model.evaluate(&[3.0]).unwrap();
    assert!((gap - (140.0 - 436.0 + 164.0) / 249.0).abs() < 1e-9);
}

#[test]
fn ridge_on_top_monomial_is_invariant() {
    let penalty = PenaltySpec::new(PenaltyFamily::Ridge, [(m(&[2]), 1.0)]).unwrap();
    let cfg = TrialConfig::new(quadratic_model(), penalty);
    let r = check_fit_invariance(&cfg).unwrap();
    assert_eq!(r.verdict, Verdict::Invariant);
    assert_eq!(r.trials.len(), 50);
    assert_eq!(r.failures, 0);
    assert!(r.max_pred_discrepancy <= 1e-6);
    assert!(r.max_loss_discrepancy <= 1e-9);
}

#[test]
fn unpenalized_fits_are_invariant_on_any_closed_model() {
    let set = IndexSet::from_exponents(2, [[0, 0], [1, 0], [0, 1], [1, 1], [2, 0]]).unwrap();
    let mut cfg = TrialConfig::new(set, PenaltySpec::none());
    cfg.sigma = 0.3;
    let r = check_fit_invariance(&cfg).unwrap();
    assert_eq!(r.verdict, Verdict::Invariant);
    assert!(r.max_pred_discrepancy <= 1e-6);
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let penalty = PenaltySpec::new(PenaltyFamily::Lasso, [(m(&[2]), 0.5)]).unwrap();
    let mut cfg = TrialConfig::new(quadratic_model(), penalty);
    cfg.sigma = 0.5;
    cfg.trials = 12;
    let many = check_fit_invariance(&cfg).unwrap();
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| check_fit_invariance(&cfg).unwrap());
    assert_eq!(many, one);
}

#[test]
fn non_closed_model_is_refused_by_invariance_check_and_accepted_by_search() {
    let set = IndexSet::from_exponents(2, [[0, 0], [1, 1]]).unwrap();
    let mut cfg = TrialConfig::new(set, PenaltySpec::none());
    cfg.sigma = 0.5;
    cfg.shift_range = Interval::new(1.0, 4.0).unwrap();
    assert!(matches!(check_fit_invariance(&cfg), Err(Error::ConditionNotMet(_))));
    let r = search_counterexample(&cfg).unwrap();
    let v = r.violation.expect("x1*x2 without x1, x2 is not shift closed");
    assert!(v.relative_discrepancy > VIOLATION_THRESHOLD);
    assert_eq!(v.seed, cfg.seed);
    assert_eq!(r.trials_run, v.trial + 1);
}

#[test]
fn search_refuses_compliant_configuration() {
    let penalty = PenaltySpec::new(PenaltyFamily::Ridge, [(m(&[2]), 1.0)]).unwrap();
    let cfg = TrialConfig::new(quadratic_model(), penalty);
    assert!(matches!(search_counterexample(&cfg), Err(Error::SearchVacuous)));
}

#[test]
fn violation_record_replays() {
    let penalty = PenaltySpec::new(PenaltyFamily::Ridge, [(m(&[1]), 1.0)]).unwrap();
    let mut cfg = TrialConfig::new(quadratic_model(), penalty);
    cfg.sigma = 0.5;
    cfg.shift_range = Interval::new(1.0, 5.0).unwrap();
    cfg.seed = 17;
    let first = search_counterexample(&cfg).unwrap();
    let again = search_counterexample(&cfg).unwrap();
    assert_eq!(first, again);
    let v = first.violation.unwrap();
    // the recorded fits really disagree under the recorded shift
    let x = [0.3];
    let gap = v.original_fit.evaluate(&x).unwrap() - v.shifted_fit.evaluate(&[x[0] + v.shift[0]]).unwrap();
    assert!(gap.abs() > 0.0);
}

#[test]
fn rank_deficient_trials_are_failures_not_verdicts() {
    // Three data points cannot pin down four coefficients.
    let set = IndexSet::from_exponents(1, [[0], [1], [2], [3]]).unwrap();
    let mut cfg = TrialConfig::new(set, PenaltySpec::none());
    cfg.n = 3;
    cfg.trials = 4;
    assert!(matches!(check_fit_invariance(&cfg), Err(Error::AllTrialsFailed(4))));
}

#[test]
fn reports_round_trip_through_json() {
    let penalty = PenaltySpec::new(PenaltyFamily::Ridge, [(m(&[2]), 1.0)]).unwrap();
    let mut cfg = TrialConfig::new(quadratic_model(), penalty.clone());
    cfg.trials = 5;
    let report = check_fit_invariance(&cfg).unwrap();
    let text = serde_json::to_string(&report).unwrap();
    assert_eq!(serde_json::from_str::<InvarianceReport>(&text).unwrap(), report);
    let detail: TrialDetail = serde_json::from_str(&serde_json::to_string(&report.trials[0]).unwrap()).unwrap();
    assert_eq!(detail, report.trials[0]);

    let bad = PenaltySpec::new(PenaltyFamily::Ridge, [(m(&[1]), 1.0)]).unwrap();
    let mut cfg = TrialConfig::new(quadratic_model(), bad);
    cfg.shift_range = Interval::new(1.0, 5.0).unwrap();
    let search = search_counterexample(&cfg).unwrap();
    let text = serde_json::to_string(&search).unwrap();
    assert_eq!(serde_json::from_str::<SearchReport>(&text).unwrap(), search);

    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(serde_json::from_str::<TrialConfig>(&text).unwrap(), cfg);
}
