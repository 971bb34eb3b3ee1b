use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{is_connected, Graph};
use crate::error::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-12;
const GAP_REL_TOL: f64 = 1e-10;
const GAP_MAX_ITERS: usize = 500_000;

/// Symmetric doubly stochastic weights supported on a graph, together with
/// `beta = |lambda_2|`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix {
    n: usize,
    /// Dense row-major weights.
    w: Vec<f64>,
    /// Nonzero entries of each row, in column order.
    rows: Vec<Vec<(usize, f64)>>,
    beta: f64,
}

impl MixingMatrix {
    /// Validates a dense matrix and computes its spectral gap.
    pub fn from_dense(n: usize, w: Vec<f64>) -> Result<Self> {
        if n == 0 || w.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "expected {n}x{n} weights, got {} entries",
                w.len()
            )));
        }
        for i in 0..n {
            let mut sum = 0.0;
            for j in 0..n {
                let wij = w[i * n + j];
                if !(wij >= 0.0) || !wij.is_finite() {
                    return Err(Error::InvalidArgument(format!("w[{i}][{j}] = {wij} is not a nonnegative real")));
                }
                if wij != w[j * n + i] {
                    return Err(Error::InvalidArgument(format!("w is not symmetric at ({i}, {j})")));
                }
                sum += wij;
            }
            if (sum - 1.0).abs() >= ROW_SUM_TOL {
                return Err(Error::InvalidArgument(format!("row {i} sums to {sum}")));
            }
        }
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .filter_map(|j| {
                        let wij = w[i * n + j];
                        (wij != 0.0).then_some((j, wij))
                    })
                    .collect()
            })
            .collect();
        let mut m = Self { n, w, rows, beta: f64::NAN };
        m.beta = spectral_gap(&m)?;
        Ok(m)
    }

    /// `(1/n) 11^T`, the exact-averaging matrix of a complete graph.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::from_dense(n, vec![1.0 / n as f64; n * n])
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            w[i * n + i] = 1.0;
        }
        Self::from_dense(n, w)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.n + j]
    }

    pub fn dense(&self) -> &[f64] {
        &self.w
    }

    /// Nonzero `(column, weight)` pairs of row `i`.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    /// `y = W x` for a scalar-per-agent vector.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, wij)| wij * x[j]).sum())
            .collect()
    }

    /// True when every nonzero off-diagonal entry is an edge of `g`.
    pub fn respects(&self, g: &Graph) -> bool {
        g.n() == self.n
            && self
                .rows
                .iter()
                .enumerate()
                .all(|(i, row)| row.iter().all(|&(j, _)| i == j || g.has_edge(i, j)))
    }
}

/// Metropolis weights: `w_ij = 1 / (1 + max(deg_i, deg_j))` on edges, the
/// diagonal absorbing the remainder of each row.
pub fn metropolis_weights(g: &Graph) -> Result<MixingMatrix> {
    if !is_connected(g) {
        return Err(Error::PreconditionViolation(
            "mixing matrix requires a connected graph".into(),
        ));
    }
    let n = g.n();
    let deg = g.degrees();
    let mut w = vec![0.0; n * n];
    for (i, j) in g.edges() {
        let wij = 1.0 / (1 + deg[i].max(deg[j])) as f64;
        w[i * n + j] = wij;
        w[j * n + i] = wij;
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| w[i * n + j]).sum();
        w[i * n + i] = 1.0 - off;
    }
    MixingMatrix::from_dense(n, w)
}

/// `B x` with `B = W - (1/n) 11^T`.
fn deflated_apply(w: &MixingMatrix, x: &[f64]) -> Vec<f64> {
    let mean = x.iter().sum::<f64>() / w.n as f64;
    let mut y = w.apply(x);
    y.iter_mut().for_each(|v| *v -= mean);
    y
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `|lambda_2(W)|` by power iteration on `B^2`, where `B` deflates the known
/// top eigenvector `1/sqrt(n)`. Iterating on the square keeps the dominant
/// eigenvalue unique even when `lambda_2 = -lambda_n`.
pub fn spectral_gap(w: &MixingMatrix) -> Result<f64> {
    let n = w.n;
    if n == 1 {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed0fbe7a);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let mean = v.iter().sum::<f64>() / n as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    for _ in 0..GAP_MAX_ITERS {
        let bv = deflated_apply(w, &v);
        let rho = bv.iter().map(|x| x * x).sum::<f64>();
        if rho <= f64::MIN_POSITIVE {
            return Ok(0.0);
        }
        let bbv = deflated_apply(w, &bv);
        let residual = bbv
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - rho * b).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= GAP_REL_TOL * rho + 1e-15 {
            return Ok(rho.sqrt());
        }
        let nb = norm(&bbv);
        if nb == 0.0 {
            return Ok(0.0);
        }
        v = bbv.into_iter().map(|x| x / nb).collect();
    }
    Err(Error::NumericalFailure(format!(
        "power iteration for |lambda_2| did not converge in {GAP_MAX_ITERS} iterations"
    )))
}
