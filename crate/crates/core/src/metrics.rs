//! Ground-truth evaluation of a run. These functions may use the unattacked
//! set and the true minimizer; the algorithm itself never does.

use serde::Serialize;

use crate::engine::{mean_iterate, AgentState};
use crate::error::{Error, Result};
use crate::oracles::{Dataset, Problem};
use crate::schedules::ScheduleSet;

/// One CSV row. Optional fields are left empty when they do not apply.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub t: u64,
    pub max_l2_error: f64,
    pub consensus_error: f64,
    pub lemma1_bound: Option<f64>,
    pub avg_subopt: f64,
    pub avg_accuracy: Option<f64>,
    pub mean_estimator_error: Option<f64>,
}

pub const CSV_HEADER: &str =
    "t,max_l2_error,consensus_error,lemma1_bound,avg_subopt,avg_accuracy,mean_estimator_error";

/// `(1/scale) max_i ||x_i - target||`.
pub fn max_l2_error(states: &[AgentState], target: &[f64], scale: f64) -> f64 {
    states
        .iter()
        .map(|s| distance(&s.x, target))
        .fold(0.0, f64::max)
        / scale
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// `||x - 1 (x) xbar||` over all agents.
pub fn consensus_error(states: &[AgentState]) -> f64 {
    let xbar = mean_iterate(states);
    states
        .iter()
        .map(|s| {
            s.x.iter()
                .zip(&xbar)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

/// Mean over all agents of `f(x_i) - f(x*)`, where `f` averages the
/// unattacked local objectives. Values within `1e-9` below zero are clamped.
pub fn suboptimality(
    problem: &dyn Problem,
    honest: &[usize],
    minimizer: &[f64],
    states: &[AgentState],
) -> Result<f64> {
    let f_star = crate::oracles::objective_value(problem, honest, minimizer)?;
    let points: Vec<&[f64]> = states.iter().map(|s| s.x.as_slice()).collect();
    let total: f64 = problem.objective(honest, &points).iter().map(|f| f - f_star).sum();
    let gap = total / states.len() as f64;
    Ok(if (-1e-9..0.0).contains(&gap) { 0.0 } else { gap })
}

/// Mean over unattacked agents of `||v_i - grad f_i(x_i)||`.
pub fn mean_estimator_error(problem: &dyn Problem, honest: &[usize], states: &[AgentState]) -> f64 {
    if honest.is_empty() {
        return 0.0;
    }
    let total: f64 = honest
        .iter()
        .map(|&i| distance(&states[i].v, &problem.local_gradient(i, &states[i].x)))
        .sum();
    total / honest.len() as f64
}

/// Mean over agents of holdout accuracy; a zero margin counts as wrong.
pub fn classification_accuracy(holdout: &Dataset, states: &[AgentState]) -> Result<f64> {
    if holdout.is_empty() {
        return Err(Error::InvalidArgument("holdout set is empty".into()));
    }
    Ok(states.iter().map(|s| holdout.accuracy(&s.x)).sum::<f64>() / states.len() as f64)
}

/// Both sides of the consensus bound at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsensusReport {
    pub consensus_error: f64,
    pub bound: f64,
    pub margin: f64,
}

/// `c sqrt(n) alpha_t gamma_t` with `c` from the schedules and `beta`.
pub fn consensus_bound(schedules: &ScheduleSet, beta: f64, n: usize, t: u64) -> Result<f64> {
    let c = schedules.consensus_constant(beta)?;
    Ok(c * (n as f64).sqrt() * schedules.alpha(t) * schedules.gamma(t))
}

pub fn consensus_report(
    states: &[AgentState],
    t: u64,
    schedules: &ScheduleSet,
    beta: f64,
) -> Result<ConsensusReport> {
    let consensus_error = consensus_error(states);
    let bound = consensus_bound(schedules, beta, states.len(), t)?;
    Ok(ConsensusReport {
        consensus_error,
        bound,
        margin: bound - consensus_error,
    })
}

/// Negated least-squares slope of `ln(value)` against `ln(t + 1)` over the
/// trailing `tail_fraction` of the samples; a `(t+1)^(-tau)` series gives `tau`.
pub fn fit_rate_exponent(series: &[(u64, f64)], tail_fraction: f64) -> Result<f64> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!("tail fraction {tail_fraction} outside (0, 1]")));
    }
    let keep = ((series.len() as f64 * tail_fraction).ceil() as usize).min(series.len());
    let tail = &series[series.len() - keep..];
    if tail.len() < 2 {
        return Err(Error::NotFittable("need at least two samples in the tail".into()));
    }
    if let Some(&(t, v)) = tail.iter().find(|(_, v)| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::NotFittable(format!("value {v} at t = {t} is not positive")));
    }
    let pts: Vec<(f64, f64)> = tail
        .iter()
        .map(|&(t, v)| (((t + 1) as f64).ln(), v.ln()))
        .collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::NotFittable("all tail samples share one t".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(-sxy / sxx)
}

/// Distance of the network average to `target`.
pub fn average_error(states: &[AgentState], target: &[f64]) -> f64 {
    distance(&mean_iterate(states), target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::LinearMeasurementProblem;

    fn states_at(points: &[Vec<f64>]) -> Vec<AgentState> {
        points.iter().map(|p| AgentState::new(p.clone())).collect()
    }

    #[test]
    fn max_error_cases() {
        let theta = vec![1.0, 2.0];
        assert_eq!(max_l2_error(&states_at(&[theta.clone(), theta.clone()]), &theta, 1.0), 0.0);
        let s = states_at(&[theta.clone(), vec![2.0, 2.0]]);
        assert_eq!(max_l2_error(&s, &theta, 1.0), 1.0);
        assert_eq!(max_l2_error(&s, &theta, 625.0), 1.0 / 625.0);
    }

    #[test]
    fn suboptimality_of_scalar_quadratic() {
        // one agent observing one coordinate with theta* = 0 and no noise: f(x) = x^2
        let p = LinearMeasurementProblem::new(vec![0.0], vec![vec![0]; 3], 0.0).unwrap();
        let honest = [0, 1, 2];
        let at_opt = states_at(&vec![vec![0.0]; 3]);
        assert_eq!(suboptimality(&p, &honest, &[0.0], &at_opt).unwrap(), 0.0);
        let at_one = states_at(&vec![vec![1.0]; 3]);
        assert_eq!(suboptimality(&p, &honest, &[0.0], &at_one).unwrap(), 1.0);
    }

    #[test]
    fn suboptimality_ignores_constant_offsets() {
        let x = vec![vec![0.5, -1.0], vec![2.0, 0.0]];
        let quiet = LinearMeasurementProblem::new(vec![1.0, 1.0], vec![vec![0, 1], vec![1]], 0.0).unwrap();
        let noisy = LinearMeasurementProblem::new(vec![1.0, 1.0], vec![vec![0, 1], vec![1]], 3.0).unwrap();
        let a = suboptimality(&quiet, &[0, 1], &[1.0, 1.0], &states_at(&x)).unwrap();
        let b = suboptimality(&noisy, &[0, 1], &[1.0, 1.0], &states_at(&x)).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn rate_fit_on_power_laws() {
        for tau in [0.1, 0.5, 1.0] {
            let series: Vec<(u64, f64)> = (0..60)
                .map(|k| {
                    let t = (10f64.powf(k as f64 / 10.0)) as u64;
                    (t, ((t + 1) as f64).powf(-tau))
                })
                .collect();
            let fit = fit_rate_exponent(&series, 0.5).unwrap();
            assert!((fit - tau).abs() < 1e-6, "tau {tau}: {fit}");
        }
        let flat: Vec<(u64, f64)> = (0..20).map(|t| (t, 3.0)).collect();
        assert!(fit_rate_exponent(&flat, 0.5).unwrap().abs() < 1e-12);
        let bad = vec![(1, 1.0), (2, 0.0)];
        assert!(matches!(fit_rate_exponent(&bad, 1.0), Err(Error::NotFittable(_))));
    }

    #[test]
    fn consensus_of_equal_states_is_zero() {
        let s = states_at(&vec![vec![1.0, 2.0]; 4]);
        assert_eq!(consensus_error(&s), 0.0);
        let sched = ScheduleSet::with_derived_eta(1.0, 0.82, 1.0, 0.17, 1.0, 2).unwrap();
        let r = consensus_report(&s, 0, &sched, 0.5).unwrap();
        assert_eq!(r.consensus_error, 0.0);
        assert!(r.margin > 0.0);
    }

    #[test]
    fn accuracy_requires_holdout() {
        let empty = Dataset::new(2, vec![], vec![]).unwrap();
        assert!(classification_accuracy(&empty, &states_at(&[vec![0.0; 2]])).is_err());
    }
}
