use rand::Rng;
use rand_distr::StandardNormal;

use super::{check_dim, Curvature, Problem};
use crate::error::{Error, Result};
use crate::rng::{setup_stream, AgentRng, SetupStream};
use crate::topology::grid_positions;

/// Noisy linear sensing `y_i = H_i theta* + w_i` where every row of `H_i`
/// is a canonical basis vector, stored as the list of measured coordinates.
///
/// Local objective: `f_i(x) = E ||H_i x - y_i||^2 = ||H_i (x - theta*)||^2 + rows_i sigma^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMeasurementProblem {
    theta_star: Vec<f64>,
    measured: Vec<Vec<usize>>,
    noise_std: f64,
}

impl LinearMeasurementProblem {
    pub fn new(theta_star: Vec<f64>, measured: Vec<Vec<usize>>, noise_std: f64) -> Result<Self> {
        let d = theta_star.len();
        if d == 0 || measured.is_empty() {
            return Err(Error::InvalidArgument("need a nonempty parameter and agent set".into()));
        }
        if !(noise_std >= 0.0) || !noise_std.is_finite() {
            return Err(Error::InvalidArgument(format!("noise_std = {noise_std} must be nonnegative")));
        }
        let mut measured = measured;
        for (i, rows) in measured.iter_mut().enumerate() {
            rows.sort_unstable();
            if rows.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidArgument(format!("agent {i} measures a coordinate twice")));
            }
            if rows.last().is_some_and(|&j| j >= d) {
                return Err(Error::InvalidArgument(format!("agent {i} measures a coordinate >= {d}")));
            }
        }
        Ok(Self {
            theta_star,
            measured,
            noise_std,
        })
    }

    pub fn theta_star(&self) -> &[f64] {
        &self.theta_star
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn rows(&self, agent: usize) -> &[usize] {
        &self.measured[agent]
    }

    /// Number of agents in `agents` measuring each coordinate.
    pub fn coverage(&self, agents: &[usize]) -> Vec<usize> {
        let mut count = vec![0; self.theta_star.len()];
        for &i in agents {
            for &j in &self.measured[i] {
                count[j] += 1;
            }
        }
        count
    }

    /// Per-agent noise bound `E ||m - grad f_i||^2 = 4 rows_i sigma^2`.
    pub fn noise_second_moment(&self, agent: usize) -> f64 {
        4.0 * self.measured[agent].len() as f64 * self.noise_std * self.noise_std
    }
}

impl Problem for LinearMeasurementProblem {
    fn dim(&self) -> usize {
        self.theta_star.len()
    }

    fn num_agents(&self) -> usize {
        self.measured.len()
    }

    /// `2 H_i^T (H_i x - y)` for a fresh measurement `y`.
    fn sample_gradient(&self, agent: usize, x: &[f64], rng: &mut AgentRng) -> Result<Vec<f64>> {
        check_dim(x, self.dim())?;
        let mut g = vec![0.0; self.dim()];
        for &j in &self.measured[agent] {
            let w: f64 = rng.sample(StandardNormal);
            let y = self.theta_star[j] + self.noise_std * w;
            g[j] = 2.0 * (x[j] - y);
        }
        Ok(g)
    }

    fn local_gradient(&self, agent: usize, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        for &j in &self.measured[agent] {
            g[j] = 2.0 * (x[j] - self.theta_star[j]);
        }
        g
    }

    fn local_value(&self, agent: usize, x: &[f64]) -> f64 {
        let rows = &self.measured[agent];
        let residual: f64 = rows
            .iter()
            .map(|&j| (x[j] - self.theta_star[j]).powi(2))
            .sum();
        residual + rows.len() as f64 * self.noise_std * self.noise_std
    }

    fn measured(&self, agent: usize) -> Option<&[usize]> {
        Some(&self.measured[agent])
    }

    /// `(1/|N|) sum_j coverage_j (x_j - theta*_j)^2` plus the noise floor.
    fn objective(&self, honest: &[usize], points: &[&[f64]]) -> Vec<f64> {
        let cover = self.coverage(honest);
        let inv = 1.0 / honest.len() as f64;
        let floor: f64 = honest.iter().map(|&i| self.measured[i].len() as f64).sum::<f64>()
            * self.noise_std
            * self.noise_std;
        points
            .iter()
            .map(|x| {
                let residual: f64 = cover
                    .iter()
                    .zip(x.iter().zip(&self.theta_star))
                    .map(|(&c, (a, b))| c as f64 * (a - b).powi(2))
                    .sum();
                (residual + floor) * inv
            })
            .collect()
    }

    /// The aggregate Hessian `(2/|N|) sum H_i^T H_i` is diagonal with entries
    /// `2 coverage_j / |N|`.
    fn curvature(&self, honest: &[usize]) -> Result<Curvature> {
        let cover = self.coverage(honest);
        let lo = *cover.iter().min().unwrap_or(&0);
        let hi = *cover.iter().max().unwrap_or(&0);
        if lo == 0 {
            return Err(Error::NotStronglyConvex);
        }
        let scale = 2.0 / honest.len() as f64;
        let mu = scale * lo as f64;
        let l = scale * hi as f64;
        Ok(Curvature { mu, l, kappa: l / mu })
    }
}

/// Grid sensing problem: one parameter per lattice site, each agent measuring
/// every site within `sensing_radius`, `theta*` uniform on `theta_range`.
pub fn grid_measurement_problem(
    rows: usize,
    cols: usize,
    sensing_radius: f64,
    theta_range: (f64, f64),
    noise_std: f64,
    seed: u64,
) -> Result<LinearMeasurementProblem> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument("grid needs positive rows and cols".into()));
    }
    let (lo, hi) = theta_range;
    if !(lo <= hi) {
        return Err(Error::InvalidArgument(format!("empty theta range [{lo}, {hi}]")));
    }
    let pos = grid_positions(rows, cols);
    let r2 = sensing_radius * sensing_radius * (1.0 + 1e-12);
    let measured = pos
        .iter()
        .map(|p| {
            pos.iter()
                .enumerate()
                .filter(|(_, q)| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) <= r2)
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    let mut rng = setup_stream(seed, SetupStream::Parameters);
    let theta = (0..pos.len())
        .map(|_| if lo == hi { lo } else { rng.random_range(lo..hi) })
        .collect();
    LinearMeasurementProblem::new(theta, measured, noise_std)
}
