//! Per-agent stochastic gradient oracles, gradient attacks, and the
//! ground-truth quantities (aggregate objective, minimizer, condition
//! number) that only the evaluator gets to see.

mod attack;
mod linear;
mod logistic;
mod solver;

pub use attack::{AttackFn, AttackMode, AttackSpec, Support};
pub use linear::{grid_measurement_problem, LinearMeasurementProblem};
pub use logistic::{
    logistic_oracle_sample, make_synthetic_classification, sigmoid, Dataset, LogisticProblem,
    SharedLogistic,
};
pub use solver::{gradient_descent, solve_minimizer};

use crate::error::{Error, Result};
use crate::rng::AgentRng;

/// Oracle output `m_i^t`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSample {
    pub m: Vec<f64>,
    pub agent: usize,
    pub round: u64,
}

impl GradientSample {
    pub fn is_finite(&self) -> bool {
        self.m.iter().all(|v| v.is_finite())
    }
}

/// Strong convexity and smoothness constants of the aggregate objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Curvature {
    pub mu: f64,
    pub l: f64,
    pub kappa: f64,
}

/// A family of local objectives `f_i`, one per agent, with an unbiased
/// stochastic gradient oracle for each.
pub trait Problem: Send + Sync {
    fn dim(&self) -> usize;

    fn num_agents(&self) -> usize;

    /// Draws an unattacked stochastic gradient of `f_agent` at `x`.
    fn sample_gradient(&self, agent: usize, x: &[f64], rng: &mut AgentRng) -> Result<Vec<f64>>;

    fn local_gradient(&self, agent: usize, x: &[f64]) -> Vec<f64>;

    fn local_value(&self, agent: usize, x: &[f64]) -> f64;

    /// Coordinates an agent's gradients are supported on, if restricted.
    fn measured(&self, _agent: usize) -> Option<&[usize]> {
        None
    }

    /// `(mu, L, kappa)` of `f = mean_{i in honest} f_i`.
    fn curvature(&self, honest: &[usize]) -> Result<Curvature>;

    /// `f = mean_{i in honest} f_i` at each point.
    fn objective(&self, honest: &[usize], points: &[&[f64]]) -> Vec<f64> {
        let inv = 1.0 / honest.len() as f64;
        points
            .iter()
            .map(|x| honest.iter().map(|&i| self.local_value(i, x)).sum::<f64>() * inv)
            .collect()
    }
}

fn check_honest(problem: &dyn Problem, honest: &[usize]) -> Result<()> {
    if honest.is_empty() {
        return Err(Error::InvalidArgument("unattacked set is empty".into()));
    }
    if let Some(&bad) = honest.iter().find(|&&i| i >= problem.num_agents()) {
        return Err(Error::InvalidArgument(format!("agent {bad} out of range")));
    }
    Ok(())
}

/// `grad f(x)` with `f = (1/|N|) sum_{i in N} f_i`.
pub fn true_gradient(problem: &dyn Problem, honest: &[usize], x: &[f64]) -> Result<Vec<f64>> {
    check_honest(problem, honest)?;
    let mut g = vec![0.0; problem.dim()];
    for &i in honest {
        for (acc, v) in g.iter_mut().zip(problem.local_gradient(i, x)) {
            *acc += v;
        }
    }
    let inv = 1.0 / honest.len() as f64;
    g.iter_mut().for_each(|v| *v *= inv);
    Ok(g)
}

pub fn objective_value(problem: &dyn Problem, honest: &[usize], x: &[f64]) -> Result<f64> {
    check_honest(problem, honest)?;
    check_dim(x, problem.dim())?;
    Ok(problem.objective(honest, &[x])[0])
}

pub fn condition_number(problem: &dyn Problem, honest: &[usize]) -> Result<Curvature> {
    check_honest(problem, honest)?;
    problem.curvature(honest)
}

/// Largest tolerable attacked fraction, `1 / (1 + kappa)`.
pub fn feasible_rho(kappa: f64) -> f64 {
    1.0 / (1.0 + kappa)
}

/// Strict check `rho < 1 / (1 + kappa)`.
pub fn check_attack_fraction(rho: f64, kappa: f64) -> bool {
    rho < feasible_rho(kappa)
}

/// Largest attacked count `b` with `b / n < 1 / (1 + kappa)`.
pub fn max_attacked_count(n: usize, kappa: f64) -> usize {
    let bound = n as f64 * feasible_rho(kappa);
    let b = bound.ceil() as usize;
    b.saturating_sub(1).min(n)
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn check_dim(x: &[f64], d: usize) -> Result<()> {
    if x.len() != d {
        return Err(Error::InvalidArgument(format!(
            "vector has length {}, expected {d}",
            x.len()
        )));
    }
    Ok(())
}
