//! Observations, shifted coding, design matrices, residual sums, and synthetic data.

use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{check_dim, Error, Result};
use crate::monomial::{IndexSet, Monomial};
use crate::polynomial::Polynomial;
use crate::rng::seeded;

/// Predictor rows `x` (n x p) and responses `y` (length n).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
}

impl Dataset {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::invalid("dataset needs at least one observation"));
        }
        check_dim(x.len(), y.len())?;
        let p = x[0].len();
        if p == 0 {
            return Err(Error::ZeroArity);
        }
        for row in &x {
            check_dim(p, row.len())?;
        }
        if x.iter().flatten().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::invalid("dataset contains non-finite values"));
        }
        Ok(Dataset { x, y })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x[0].len()
    }

    pub fn x(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Same responses, predictors shifted by `shift`.
    pub fn translated(&self, shift: &[f64]) -> Result<Dataset> {
        Ok(Dataset {
            x: translate_data(&self.x, shift)?,
            y: self.y.clone(),
        })
    }

    /// Root mean square of the responses.
    pub fn response_rms(&self) -> f64 {
        (self.y.iter().map(|v| v * v).sum::<f64>() / self.n() as f64).sqrt()
    }

    /// Hex SHA-256 over the little-endian bit patterns of `x` then `y`.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for v in self.x.iter().flatten().chain(&self.y) {
            h.update(v.to_bits().to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Reads a CSV with header `x1..xp,y` (any column order).
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Dataset> {
        let file = std::fs::File::open(path)?;
        Dataset::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let mut y_col = None;
        let mut x_cols: Vec<(usize, usize)> = Vec::new();
        for (pos, name) in headers.iter().enumerate() {
            let name = name.trim();
            if name == "y" {
                if y_col.replace(pos).is_some() {
                    return Err(Error::invalid("duplicate column y"));
                }
            } else if let Some(idx) = name.strip_prefix('x').and_then(|s| s.parse::<usize>().ok()) {
                if idx == 0 {
                    return Err(Error::invalid("predictor columns are numbered from x1"));
                }
                x_cols.push((idx, pos));
            } else {
                return Err(Error::invalid(format!("unexpected column '{name}'")));
            }
        }
        let y_col = y_col.ok_or_else(|| Error::invalid("missing column y"))?;
        x_cols.sort_unstable();
        for (expected, (idx, _)) in x_cols.iter().enumerate() {
            if *idx != expected + 1 {
                return Err(Error::invalid(format!("predictor columns must be x1..x{}", x_cols.len())));
            }
        }
        if x_cols.is_empty() {
            return Err(Error::invalid("no predictor columns"));
        }

        let mut x = Vec::new();
        let mut y = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let field = |pos: usize| -> Result<f64> {
                let raw = rec.get(pos).map(str::trim).unwrap_or("");
                if raw.is_empty() {
                    return Err(Error::invalid(format!("missing value at data row {}", line + 1)));
                }
                raw.parse::<f64>()
                    .map_err(|_| Error::invalid(format!("bad number '{raw}' at data row {}", line + 1)))
            };
            x.push(x_cols.iter().map(|&(_, pos)| field(pos)).collect::<Result<Vec<_>>>()?);
            y.push(field(y_col)?);
        }
        Dataset::new(x, y)
    }

    pub fn to_csv_writer<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.p()).map(|i| format!("x{i}")).collect();
        header.push("y".into());
        w.write_record(&header)?;
        for (row, y) in self.x.iter().zip(&self.y) {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(y.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Every row shifted by `shift`.
pub fn translate_data(x: &[Vec<f64>], shift: &[f64]) -> Result<Vec<Vec<f64>>> {
    x.iter()
        .map(|row| {
            check_dim(row.len(), shift.len())?;
            Ok(row.iter().zip(shift).map(|(a, b)| a + b).collect())
        })
        .collect()
}

/// Regressor matrix: one column per monomial of the index set, in canonical order.
#[derive(Clone, Debug)]
pub struct DesignMatrix {
    pub columns: Vec<Monomial>,
    pub z: DMatrix<f64>,
}

impl DesignMatrix {
    pub fn ncols(&self) -> usize {
        self.columns.len()
    }

    pub fn nrows(&self) -> usize {
        self.z.nrows()
    }

    pub fn has_intercept(&self) -> bool {
        self.columns.iter().any(Monomial::is_constant)
    }
}

pub fn design_matrix(x: &[Vec<f64>], set: &IndexSet) -> Result<DesignMatrix> {
    if set.is_empty() {
        return Err(Error::EmptyIndexSet);
    }
    let columns: Vec<Monomial> = set.iter().cloned().collect();
    let mut z = DMatrix::zeros(x.len(), columns.len());
    for (j, row) in x.iter().enumerate() {
        check_dim(set.arity(), row.len())?;
        for (c, m) in columns.iter().enumerate() {
            let v = m.eval(row);
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    monomial: m.clone(),
                    row: j,
                });
            }
            z[(j, c)] = v;
        }
    }
    Ok(DesignMatrix { columns, z })
}

/// Sum of squared residuals of `f` on `data`.
pub fn ssr(f: &Polynomial, data: &Dataset) -> Result<f64> {
    check_dim(f.arity(), data.p())?;
    Ok(data
        .x
        .iter()
        .zip(&data.y)
        .map(|(row, y)| {
            let r = y - f.evaluate_unchecked(row);
            r * r
        })
        .sum())
}

/// Closed real interval `[lo, hi]`, serialized as a two-element array.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(Error::invalid(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.is_degenerate() {
            self.lo
        } else {
            rng.random_range(self.lo..self.hi)
        }
    }
}

impl Default for Interval {
    fn default() -> Self {
        Interval { lo: -2.0, hi: 2.0 }
    }
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = Error;
    fn try_from(v: [f64; 2]) -> Result<Self> {
        Interval::new(v[0], v[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

/// Gaussian noise level and generator seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

/// Draws `n` rows uniformly on `x_range` and responses `truth(x) + N(0, sigma^2)`.
///
/// Uses a ChaCha8 stream seeded from `noise.seed`.
pub fn generate_synthetic(
    set: &IndexSet,
    truth: &Polynomial,
    n: usize,
    x_range: Interval,
    noise: NoiseSpec,
) -> Result<Dataset> {
    generate_synthetic_with(set, truth, n, x_range, noise.sigma, &mut seeded(noise.seed))
}

pub(crate) fn generate_synthetic_with(
    set: &IndexSet,
    truth: &Polynomial,
    n: usize,
    x_range: Interval,
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::invalid("sample count must be positive"));
    }
    if x_range.is_degenerate() {
        return Err(Error::invalid("predictor interval is empty"));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("noise sigma must be non-negative, got {sigma}")));
    }
    check_dim(set.arity(), truth.arity())?;
    if !truth.nonzero_support().is_subset(set) {
        return Err(Error::invalid("truth polynomial has terms outside the index set"));
    }
    let p = set.arity();
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..p).map(|_| x_range.sample(rng)).collect();
        let eps = if sigma > 0.0 { normal.sample(rng) } else { 0.0 };
        y.push(truth.evaluate_unchecked(&row) + eps);
        x.push(row);
    }
    Dataset::new(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(v: &[u32]) -> Monomial {
        Monomial::new(v.to_vec()).unwrap()
    }

    #[test]
    fn translate_data_examples() {
        let x = vec![vec![0.0, 0.0], vec![1.0, 2.0]];
        assert_eq!(
            translate_data(&x, &[1.0, -1.0]).unwrap(),
            vec![vec![1.0, -1.0], vec![2.0, 1.0]]
        );
        assert_eq!(translate_data(&x, &[0.0, 0.0]).unwrap(), x);
        let back = translate_data(&translate_data(&x, &[0.5, 3.0]).unwrap(), &[-0.5, -3.0]).unwrap();
        for (a, b) in back.iter().flatten().zip(x.iter().flatten()) {
            assert!((a - b).abs() <= 1e-12);
        }
        assert!(matches!(translate_data(&x, &[1.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn design_matrix_examples() {
        let set = IndexSet::from_exponents(2, [[0, 0], [1, 0], [0, 1], [1, 1]]).unwrap();
        let dm = design_matrix(&[vec![2.0, 3.0]], &set).unwrap();
        assert_eq!(dm.z.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 2.0, 3.0, 6.0]);
        assert!(dm.has_intercept());

        let constant = IndexSet::from_exponents(1, [[0]]).unwrap();
        let dm = design_matrix(&[vec![5.0], vec![-3.0]], &constant).unwrap();
        assert!(dm.z.iter().all(|&v| v == 1.0));

        let quad = IndexSet::from_exponents(1, [[0], [1], [2]]).unwrap();
        let dm = design_matrix(&[vec![0.0]], &quad).unwrap();
        assert_eq!(dm.z.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 0.0, 0.0]);

        let no_intercept = IndexSet::from_exponents(1, [[1]]).unwrap();
        assert!(!design_matrix(&[vec![1.0]], &no_intercept).unwrap().has_intercept());
    }

    #[test]
    fn design_matrix_overflow_names_monomial() {
        let set = IndexSet::from_exponents(1, [[16]]).unwrap();
        match design_matrix(&[vec![1e30]], &set) {
            Err(Error::NonFinite { monomial, row }) => {
                assert_eq!(monomial, m(&[16]));
                assert_eq!(row, 0);
            }
            other => panic!("expected overflow error, got {other:?}"),
        }
    }

    #[test]
    fn ssr_examples() {
        let f = Polynomial::from_terms(1, [(m(&[1]), 2.0)]).unwrap();
        let data = Dataset::new(vec![vec![1.0], vec![2.0]], vec![2.0, 4.0]).unwrap();
        assert_eq!(ssr(&f, &data).unwrap(), 0.0);
        let zero = Polynomial::zero(1).unwrap();
        let data = Dataset::new(vec![vec![0.0], vec![0.0]], vec![1.0, 2.0]).unwrap();
        assert_eq!(ssr(&zero, &data).unwrap(), 5.0);
        assert!(ssr(&Polynomial::zero(2).unwrap(), &data).is_err());
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(vec![], vec![]).is_err());
        assert!(Dataset::new(vec![vec![1.0]], vec![1.0, 2.0]).is_err());
        assert!(Dataset::new(vec![vec![1.0], vec![1.0, 2.0]], vec![1.0, 2.0]).is_err());
        assert!(Dataset::new(vec![vec![f64::NAN]], vec![1.0]).is_err());
    }

    #[test]
    fn csv_parsing() {
        let data = Dataset::from_csv_reader("x2,x1,y\n1,0,0.5\n2,1,1.5\n".as_bytes()).unwrap();
        assert_eq!(data.x(), &[vec![0.0, 1.0], vec![1.0, 2.0]]);
        assert_eq!(data.y(), &[0.5, 1.5]);
        assert!(Dataset::from_csv_reader("x1,y\n1,\n".as_bytes()).is_err());
        assert!(Dataset::from_csv_reader("x1,y\n1,abc\n".as_bytes()).is_err());
        assert!(Dataset::from_csv_reader("x1,x3,y\n1,2,3\n".as_bytes()).is_err());
        assert!(Dataset::from_csv_reader("x1,z\n1,2\n".as_bytes()).is_err());
        assert!(Dataset::from_csv_reader("x1,y\n".as_bytes()).is_err());

        let mut buf = Vec::new();
        data.to_csv_writer(&mut buf).unwrap();
        assert_eq!(Dataset::from_csv_reader(buf.as_slice()).unwrap(), data);
    }

    fn quad_truth() -> (IndexSet, Polynomial) {
        let set = IndexSet::from_exponents(1, [[0], [1], [2]]).unwrap();
        let truth = Polynomial::from_terms(1, [(m(&[0]), 1.0), (m(&[2]), -0.5)]).unwrap();
        (set, truth)
    }

    #[test]
    fn synthetic_noiseless_and_deterministic() {
        let (set, truth) = quad_truth();
        let noise = NoiseSpec { sigma: 0.0, seed: 7 };
        let d = generate_synthetic(&set, &truth, 25, Interval::default(), noise).unwrap();
        assert_eq!(ssr(&truth, &d).unwrap(), 0.0);
        assert!(d.x().iter().flatten().all(|v| (-2.0..2.0).contains(v)));

        let noise = NoiseSpec { sigma: 1.0, seed: 7 };
        let a = generate_synthetic(&set, &truth, 25, Interval::default(), noise).unwrap();
        let b = generate_synthetic(&set, &truth, 25, Interval::default(), noise).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.digest(), b.digest());
    }

    #[test]
    fn synthetic_noise_variance() {
        let (set, truth) = quad_truth();
        let noise = NoiseSpec { sigma: 1.0, seed: 2024 };
        let d = generate_synthetic(&set, &truth, 10_000, Interval::default(), noise).unwrap();
        let resid: Vec<f64> = d
            .x()
            .iter()
            .zip(d.y())
            .map(|(row, y)| y - truth.evaluate(row).unwrap())
            .collect();
        let mean = resid.iter().sum::<f64>() / resid.len() as f64;
        let var = resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (resid.len() - 1) as f64;
        assert!((0.9..=1.1).contains(&var), "sample variance {var}");
    }

    #[test]
    fn synthetic_rejects_bad_input() {
        let (set, truth) = quad_truth();
        let noise = NoiseSpec { sigma: 0.0, seed: 1 };
        assert!(generate_synthetic(&set, &truth, 0, Interval::default(), noise).is_err());
        let point = Interval::new(1.0, 1.0).unwrap();
        assert!(generate_synthetic(&set, &truth, 5, point, noise).is_err());
        assert!(Interval::new(2.0, 1.0).is_err());
        let outside = Polynomial::from_terms(1, [(m(&[3]), 1.0)]).unwrap();
        assert!(generate_synthetic(&set, &outside, 5, Interval::default(), noise).is_err());
    }
}
