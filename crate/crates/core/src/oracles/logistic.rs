use std::path::Path;

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{check_dim, Curvature, Problem};
use crate::error::{Error, Result};
use crate::rng::{setup_stream, AgentRng, SetupStream};

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 100_000;

/// Labelled points, row-major features.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    d: usize,
    features: Vec<f64>,
    labels: Vec<f64>,
}

impl Dataset {
    pub fn new(d: usize, features: Vec<f64>, labels: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("feature dimension must be positive".into()));
        }
        if features.len() != d * labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} feature values do not form {} rows of width {d}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(Error::InvalidArgument(format!("label {bad} is not +-1")));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite feature value".into()));
        }
        Ok(Self { d, features, labels })
    }

    /// One row per point: `d` feature columns followed by a `+-1` label.
    /// A leading row that does not parse as numbers is treated as a header.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut width = None;
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (idx, rec) in reader.records().enumerate() {
            let rec = rec?;
            let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
            let row = match parsed {
                Ok(row) => row,
                Err(_) if idx == 0 => continue,
                Err(e) => {
                    return Err(Error::InvalidArgument(format!("csv row {}: {e}", idx + 1)))
                }
            };
            if row.len() < 2 {
                return Err(Error::InvalidArgument(format!("csv row {} has no features", idx + 1)));
            }
            let w = *width.get_or_insert(row.len());
            if row.len() != w {
                return Err(Error::InvalidArgument(format!(
                    "csv row {} has {} columns, expected {w}",
                    idx + 1,
                    row.len()
                )));
            }
            let (x, y) = row.split_at(w - 1);
            features.extend_from_slice(x);
            labels.push(y[0]);
        }
        let d = width.map(|w| w - 1).unwrap_or(1);
        Self::new(d, features, labels)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.features[k * self.d..(k + 1) * self.d]
    }

    pub fn label(&self, k: usize) -> f64 {
        self.labels[k]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Fraction of points with `sign(x^T theta) = label`; a zero margin
    /// counts as a miss.
    pub fn accuracy(&self, x: &[f64]) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let hits = (0..self.len())
            .filter(|&k| dot(self.point(k), x) * self.labels[k] > 0.0)
            .count();
        hits as f64 / self.len() as f64
    }

    pub fn with_flipped_labels(&self) -> Self {
        Self {
            labels: self.labels.iter().map(|y| -y).collect(),
            ..self.clone()
        }
    }

    /// Splits off the trailing `test_fraction` of points.
    pub fn split(&self, test_fraction: f64) -> Result<(Dataset, Dataset)> {
        if !(0.0..1.0).contains(&test_fraction) {
            return Err(Error::InvalidArgument(format!("test fraction {test_fraction} outside [0, 1)")));
        }
        let n_test = (self.len() as f64 * test_fraction).round() as usize;
        let n_train = self.len() - n_test;
        let take = |range: std::ops::Range<usize>| Dataset {
            d: self.d,
            features: self.features[range.start * self.d..range.end * self.d].to_vec(),
            labels: self.labels[range].to_vec(),
        };
        Ok((take(0..n_train), take(n_train..self.len())))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Regularized logistic loss
/// `(1/m) sum_k ln(1 + exp(-label_k x^T point_k)) + (lambda/2) ||x||^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticProblem {
    pub data: Dataset,
    pub lambda: f64,
}

impl LogisticProblem {
    pub fn new(data: Dataset, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("lambda = {lambda} must be nonnegative")));
        }
        Ok(Self { data, lambda })
    }

    pub fn with_lambda(self, lambda: f64) -> Result<Self> {
        Self::new(self.data, lambda)
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    fn point_gradient_into(&self, k: usize, x: &[f64], out: &mut [f64]) {
        let p = self.data.point(k);
        let y = self.data.label(k);
        let s = -y * sigmoid(-y * dot(p, x));
        for (o, pj) in out.iter_mut().zip(p) {
            *o += s * pj;
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let m = self.data.len();
        let mut g = vec![0.0; self.dim()];
        for k in 0..m {
            self.point_gradient_into(k, x, &mut g);
        }
        let inv = if m > 0 { 1.0 / m as f64 } else { 0.0 };
        for (gj, xj) in g.iter_mut().zip(x) {
            *gj = *gj * inv + self.lambda * xj;
        }
        g
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let m = self.data.len();
        let loss: f64 = (0..m)
            .map(|k| softplus(-self.data.label(k) * dot(self.data.point(k), x)))
            .sum();
        let reg = 0.5 * self.lambda * dot(x, x);
        if m > 0 {
            loss / m as f64 + reg
        } else {
            reg
        }
    }

    /// `lambda + lambda_max((1/4m) sum_k p_k p_k^T)`, an upper bound on the
    /// Hessian spectrum, by power iteration.
    pub fn smoothness(&self) -> Result<f64> {
        let d = self.dim();
        let m = self.data.len();
        if m == 0 {
            return Ok(self.lambda);
        }
        let scale = 0.25 / m as f64;
        let apply = |v: &[f64]| {
            let mut out = vec![0.0; d];
            for k in 0..m {
                let p = self.data.point(k);
                let c = dot(p, v) * scale;
                for (o, pj) in out.iter_mut().zip(p) {
                    *o += c * pj;
                }
            }
            out
        };
        let mut v: Vec<f64> = (0..d).map(|j| 1.0 + 0.01 * j as f64).collect();
        let nv = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= nv);
        for _ in 0..POWER_MAX_ITERS {
            let mv = apply(&v);
            let rho = dot(&v, &mv);
            let norm_mv = dot(&mv, &mv).sqrt();
            if norm_mv <= f64::MIN_POSITIVE {
                return Ok(self.lambda);
            }
            let residual = mv
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - rho * b).powi(2))
                .sum::<f64>()
                .sqrt();
            if residual <= POWER_TOL * rho {
                return Ok(self.lambda + rho);
            }
            v = mv.into_iter().map(|x| x / norm_mv).collect();
        }
        Err(Error::NumericalFailure(
            "power iteration for the logistic smoothness constant did not converge".into(),
        ))
    }
}

/// Minibatch gradient: a uniform without-replacement batch, averaged, plus
/// the regularizer. `batch_size = m` is the full gradient.
pub fn logistic_oracle_sample(
    p: &LogisticProblem,
    batch_size: usize,
    x: &[f64],
    rng: &mut AgentRng,
) -> Result<Vec<f64>> {
    let m = p.data.len();
    if m == 0 {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    if batch_size == 0 || batch_size > m {
        return Err(Error::InvalidArgument(format!("batch size {batch_size} outside 1..={m}")));
    }
    check_dim(x, p.dim())?;
    if batch_size == m {
        return Ok(p.gradient(x));
    }
    let mut g = vec![0.0; p.dim()];
    for k in index::sample(rng, m, batch_size) {
        p.point_gradient_into(k, x, &mut g);
    }
    let inv = 1.0 / batch_size as f64;
    for (gj, xj) in g.iter_mut().zip(x) {
        *gj = *gj * inv + p.lambda * xj;
    }
    Ok(g)
}

/// Every agent holds the same logistic objective and samples minibatches.
#[derive(Debug, Clone)]
pub struct SharedLogistic {
    pub problem: LogisticProblem,
    pub agents: usize,
    pub batch_size: usize,
}

impl SharedLogistic {
    pub fn new(problem: LogisticProblem, agents: usize, batch_size: usize) -> Result<Self> {
        if agents == 0 {
            return Err(Error::InvalidArgument("need at least one agent".into()));
        }
        if problem.data.is_empty() {
            return Err(Error::InvalidArgument("empty dataset".into()));
        }
        if batch_size == 0 || batch_size > problem.data.len() {
            return Err(Error::InvalidArgument(format!(
                "batch size {batch_size} outside 1..={}",
                problem.data.len()
            )));
        }
        Ok(Self {
            problem,
            agents,
            batch_size,
        })
    }
}

impl Problem for SharedLogistic {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn num_agents(&self) -> usize {
        self.agents
    }

    fn sample_gradient(&self, _agent: usize, x: &[f64], rng: &mut AgentRng) -> Result<Vec<f64>> {
        logistic_oracle_sample(&self.problem, self.batch_size, x, rng)
    }

    fn local_gradient(&self, _agent: usize, x: &[f64]) -> Vec<f64> {
        self.problem.gradient(x)
    }

    fn local_value(&self, _agent: usize, x: &[f64]) -> f64 {
        self.problem.value(x)
    }

    /// `mu` is taken as `lambda`, a lower bound, so `kappa` is conservative.
    fn curvature(&self, _honest: &[usize]) -> Result<Curvature> {
        let mu = self.problem.lambda;
        if mu <= 0.0 {
            return Err(Error::NotStronglyConvex);
        }
        let l = self.problem.smoothness()?;
        Ok(Curvature { mu, l, kappa: l / mu })
    }
}

/// Two Gaussian blobs (isotropic std 0.5) centred at `+-(margin/2) u` for a
/// random unit direction `u`, with alternating `+-1` labels.
pub fn make_synthetic_classification(
    n_points: usize,
    d: usize,
    margin: f64,
    seed: u64,
) -> Result<Dataset> {
    if !(margin > 0.0) {
        return Err(Error::InvalidArgument(format!("margin = {margin} must be positive")));
    }
    if n_points == 0 || d == 0 {
        return Err(Error::InvalidArgument("need points and a positive dimension".into()));
    }
    let mut rng = setup_stream(seed, SetupStream::Dataset);
    let mut u: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let nu = dot(&u, &u).sqrt();
    u.iter_mut().for_each(|v| *v /= nu);

    let mut features = Vec::with_capacity(n_points * d);
    let mut labels = Vec::with_capacity(n_points);
    for k in 0..n_points {
        let y = if k % 2 == 0 { 1.0 } else { -1.0 };
        for &uj in &u {
            let z: f64 = rng.sample(StandardNormal);
            features.push(y * 0.5 * margin * uj + 0.5 * z);
        }
        labels.push(y);
    }
    Dataset::new(d, features, labels)
}
