//! `polyinv` command-line front end.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0    | success / verdict matches expectation / violation found in search mode |
//! | 1    | audit non-compliant, or invariance verdict violated |
//! | 2    | solver rejection, non-convergence, trial failures, inconclusive search |
//! | 64   | usage, parse, or input errors |
//! | 74   | output could not be written |

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::harness::{check_fit_invariance, search_counterexample, InvarianceReport, SearchReport, TrialConfig, Verdict};
use crate::monomial::{downward_closure, greatest_monomials, IndexSet, Monomial};
use crate::polynomial::Polynomial;
use crate::solvers::{fit, FitResult, LossSpec, Transform};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_OUTPUT: i32 = 74;

#[derive(Debug, Parser)]
#[command(name = "polyinv", version, about = "Penalized polynomial regression and translation-invariance checks")]
pub struct Cli {
    /// Override the seed of a trial configuration
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Human-readable output instead of JSON
    #[arg(long, global = true)]
    pub pretty: bool,
    /// Write output to this file instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model to CSV data (columns x1..xp, y)
    Fit { data: PathBuf, model: PathBuf },
    /// Check a model file against the invariance condition
    Audit { model: PathBuf },
    /// Re-expand a polynomial around a shifted origin: g(x) = f(x + by)
    Shift {
        poly: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        by: Vec<f64>,
    },
    /// Run randomized invariance trials from a configuration file
    Check {
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Auto)]
        mode: Mode,
    },
    /// Print the greatest monomials of a model
    Greatest { model: PathBuf },
    /// Print the downward closure of a model's monomials
    Closure { model: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Invariance check when compliant, counterexample search otherwise
    Auto,
    Invariance,
    Counterexample,
}

/// Model file: index set plus loss.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpecRepr", into = "ModelSpecRepr")]
pub struct ModelSpecFile {
    pub monomials: IndexSet,
    pub loss: LossSpec,
    pub description: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct ModelSpecRepr {
    arity: usize,
    monomials: Vec<Monomial>,
    loss: LossSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    description: Option<String>,
}

impl TryFrom<ModelSpecRepr> for ModelSpecFile {
    type Error = Error;
    fn try_from(r: ModelSpecRepr) -> Result<Self> {
        let monomials = IndexSet::from_monomials(r.arity, r.monomials)?;
        if monomials.is_empty() {
            return Err(Error::EmptyIndexSet);
        }
        r.loss.penalty.check_within(&monomials)?;
        Ok(ModelSpecFile {
            monomials,
            loss: r.loss,
            description: r.description,
        })
    }
}

impl From<ModelSpecFile> for ModelSpecRepr {
    fn from(m: ModelSpecFile) -> Self {
        ModelSpecRepr {
            arity: m.monomials.arity(),
            monomials: m.monomials.iter().cloned().collect(),
            loss: m.loss,
            description: m.description,
        }
    }
}

/// Output of `check`, tagged by the mode that ran.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum CheckOutput {
    Invariance(InvarianceReport),
    Counterexample(SearchReport),
}

/// A failure carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(e: impl std::fmt::Display) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: e.to_string(),
        }
    }

    fn from_error(e: Error) -> Self {
        let code = match e {
            Error::NoUniqueSolution(_) | Error::NonFinite { .. } | Error::AllTrialsFailed(_) => EXIT_SOLVER,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

/// What a command produced: text for the output sink plus an exit code.
pub struct Outcome {
    pub text: String,
    pub code: i32,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> std::result::Result<T, Failure> {
    let raw = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&raw).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable") + "\n"
}

fn coefficient_table(fit: &FitResult) -> String {
    let mut s = String::from("monomial      coefficient\n");
    for (m, c) in fit.model.terms() {
        s.push_str(&format!("{:<12}  {c:>.12e}\n", m.to_string()));
    }
    s.push_str(&format!(
        "ssr {:.6e}  loss {:.6e}  iterations {}  converged {}\n",
        fit.ssr, fit.loss, fit.iterations, fit.converged
    ));
    if let Some(w) = &fit.condition_warning {
        s.push_str(&format!("warning: {w}\n"));
    }
    s
}

fn set_lines(set: &IndexSet) -> String {
    set.iter().map(|m| format!("{m}\n")).collect()
}

pub fn cmd_fit(data: &Path, model: &Path, pretty: bool) -> std::result::Result<Outcome, Failure> {
    let spec: ModelSpecFile = read_json(model)?;
    if spec.loss.g != Transform::Identity {
        return Err(Failure::usage("fitting supports only g = identity"));
    }
    let data = Dataset::from_csv_path(data).map_err(|e| Failure::usage(format!("{}: {e}", data.display())))?;
    if data.p() != spec.monomials.arity() {
        return Err(Failure::usage(format!(
            "data has {} predictors but the model arity is {}",
            data.p(),
            spec.monomials.arity()
        )));
    }
    let result = fit(&data, &spec.monomials, &spec.loss.penalty).map_err(Failure::from_error)?;
    let text = if pretty { coefficient_table(&result) } else { to_json(&result) };
    let code = if result.converged { EXIT_OK } else { EXIT_SOLVER };
    Ok(Outcome { text, code })
}

pub fn cmd_audit(model: &Path, pretty: bool) -> std::result::Result<Outcome, Failure> {
    let spec: ModelSpecFile = read_json(model)?;
    let penalized = spec
        .loss
        .penalty
        .penalized_set(spec.monomials.arity())
        .map_err(Failure::from_error)?;
    let audit = crate::harness::audit_penalty(&spec.monomials, &penalized).map_err(Failure::from_error)?;
    let text = if pretty {
        format!(
            "downward closed: {}\npenalized only greatest: {}\ncompliant: {}\nmissing divisors: {:?}\noffending penalized: {:?}\n",
            audit.downward_closed,
            audit.penalized_subset_of_greatest,
            audit.compliant,
            audit.missing_divisors,
            audit.offending_penalized
        )
    } else {
        to_json(&audit)
    };
    Ok(Outcome {
        text,
        code: if audit.compliant { EXIT_OK } else { EXIT_MISMATCH },
    })
}

pub fn cmd_shift(poly: &Path, by: &[f64], pretty: bool) -> std::result::Result<Outcome, Failure> {
    let f: Polynomial = read_json(poly)?;
    let g = f.translate(by).map_err(Failure::usage)?;
    let text = if pretty {
        g.terms().map(|(m, c)| format!("{m}  {c}\n")).collect()
    } else {
        to_json(&g)
    };
    Ok(Outcome { text, code: EXIT_OK })
}

pub fn cmd_check(
    config: &Path,
    mode: Mode,
    seed: Option<u64>,
    pretty: bool,
) -> std::result::Result<Outcome, Failure> {
    let mut cfg: TrialConfig = read_json(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let compliant = cfg.audit().map_err(Failure::from_error)?.compliant;
    let run_invariance = match mode {
        Mode::Auto => compliant,
        Mode::Invariance if !compliant => {
            return Err(Failure::usage(
                "configuration does not satisfy the invariance condition; use --mode counterexample",
            ))
        }
        Mode::Invariance => true,
        Mode::Counterexample if compliant => return Err(Failure::from_error(Error::SearchVacuous)),
        Mode::Counterexample => false,
    };
    if run_invariance {
        let report = check_fit_invariance(&cfg).map_err(Failure::from_error)?;
        let code = match (report.verdict, report.failures) {
            (Verdict::Violated, _) => EXIT_MISMATCH,
            (Verdict::Invariant, 0) => EXIT_OK,
            (Verdict::Invariant, _) => EXIT_SOLVER,
        };
        let text = if pretty {
            report.to_table()
        } else {
            to_json(&CheckOutput::Invariance(report))
        };
        Ok(Outcome { text, code })
    } else {
        let report = search_counterexample(&cfg).map_err(Failure::from_error)?;
        let code = if report.violation.is_some() { EXIT_OK } else { EXIT_SOLVER };
        let text = if pretty {
            match &report.violation {
                Some(v) => format!(
                    "violation at trial {} (seed {}, stream {}): shift {:?}, discrepancy {:.3e} (relative {:.3e}), data {}\n",
                    v.trial, v.seed, v.stream, v.shift, v.pred_discrepancy, v.relative_discrepancy, v.dataset_digest
                ),
                None => format!(
                    "no violation in {} trials ({} failed); inconclusive, max relative discrepancy {:.3e}\n",
                    report.trials_run, report.failures, report.max_relative_discrepancy
                ),
            }
        } else {
            to_json(&CheckOutput::Counterexample(report))
        };
        Ok(Outcome { text, code })
    }
}

pub fn cmd_greatest(model: &Path, pretty: bool) -> std::result::Result<Outcome, Failure> {
    let spec: ModelSpecFile = read_json(model)?;
    let g = greatest_monomials(&spec.monomials).map_err(Failure::from_error)?;
    let text = if pretty { set_lines(&g) } else { to_json(&g) };
    Ok(Outcome { text, code: EXIT_OK })
}

pub fn cmd_closure(model: &Path, pretty: bool) -> std::result::Result<Outcome, Failure> {
    let spec: ModelSpecFile = read_json(model)?;
    let c = downward_closure(&spec.monomials).map_err(Failure::from_error)?;
    let text = if pretty { set_lines(&c) } else { to_json(&c) };
    Ok(Outcome { text, code: EXIT_OK })
}

pub fn dispatch(cli: &Cli) -> std::result::Result<Outcome, Failure> {
    match &cli.command {
        Command::Fit { data, model } => cmd_fit(data, model, cli.pretty),
        Command::Audit { model } => cmd_audit(model, cli.pretty),
        Command::Shift { poly, by } => cmd_shift(poly, by, cli.pretty),
        Command::Check { config, mode } => cmd_check(config, *mode, cli.seed, cli.pretty),
        Command::Greatest { model } => cmd_greatest(model, cli.pretty),
        Command::Closure { model } => cmd_closure(model, cli.pretty),
    }
}

/// Parses `args`, runs the command, writes output, returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    let outcome = match dispatch(&cli) {
        Ok(o) => o,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            return f.code;
        }
    };
    let written = match &cli.out {
        Some(path) => fs::write(path, &outcome.text),
        None => stdout.write_all(outcome.text.as_bytes()),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: cannot write output: {e}");
        return EXIT_OUTPUT;
    }
    outcome.code
}
