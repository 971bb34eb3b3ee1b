//! Round-synchronous execution of CLIP-VRG and the DSGD baseline.
//!
//! A round has two phases separated by a barrier:
//!
//! 1. *compute*: every agent queries its (possibly attacked) oracle at its
//!    current iterate, updates its estimator and clipping coefficient, and
//!    forms the message it sends to its neighbours;
//! 2. *mix*: every agent replaces its iterate by the `W`-weighted sum of the
//!    messages it received.
//!
//! Agents only ever write their own slot, so the per-agent work may run in
//! parallel without affecting the output.

use crate::error::{Error, Result};
use crate::oracles::{norm, AttackSpec, GradientSample, Problem};
use crate::par::{map_mut, Execution};
use crate::rng::agent_stream;
use crate::schedules::{Schedule, ScheduleSet};
use crate::topology::MixingMatrix;

/// Local state of one agent: iterate `x`, gradient estimator `v`, and the
/// clipping coefficient `k` applied to `v` in the current round.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub k: f64,
}

impl AgentState {
    pub fn new(x: Vec<f64>) -> Self {
        let d = x.len();
        Self { x, v: vec![0.0; d], k: 1.0 }
    }
}

/// Identical initial states, as the consensus analysis requires.
pub fn initial_states(n: usize, x0: &[f64]) -> Vec<AgentState> {
    (0..n).map(|_| AgentState::new(x0.to_vec())).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Algorithm {
    ClipVrg(ScheduleSet),
    Dsgd(Schedule),
}

impl Algorithm {
    pub fn alpha(&self, t: u64) -> f64 {
        match self {
            Algorithm::ClipVrg(s) => s.alpha(t),
            Algorithm::Dsgd(a) => a.eval(t),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::ClipVrg(_) => "clipvrg",
            Algorithm::Dsgd(_) => "dsgd",
        }
    }
}

/// Attack-wrapped oracles. The algorithm sees only what `query` returns.
#[derive(Clone, Copy)]
pub struct Oracles<'a> {
    pub problem: &'a dyn Problem,
    pub attack: &'a AttackSpec,
    pub seed: u64,
}

impl Oracles<'_> {
    pub fn query(&self, agent: usize, round: u64, x: &[f64]) -> Result<GradientSample> {
        let honest = if self.attack.needs_honest(agent) {
            let mut rng = agent_stream(self.seed, agent, round);
            let m = self.problem.sample_gradient(agent, x, &mut rng)?;
            Some(GradientSample { m, agent, round })
        } else {
            None
        };
        self.attack
            .apply(agent, round, x, honest, self.problem.measured(agent))
    }
}

/// `1` if `||v|| <= gamma`, else `gamma / ||v||`.
pub fn clip_coefficient(v: &[f64], gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("clipping threshold {gamma} must be positive")));
    }
    let nv = norm(v);
    if !nv.is_finite() {
        return Err(Error::InvalidState {
            round: 0,
            agent: None,
            reason: "estimator has non-finite entries".into(),
        });
    }
    Ok(if nv <= gamma { 1.0 } else { gamma / nv })
}

/// `(1 - eta) v_prev + eta m`, with `eta` clamped to `(0, 1]`.
pub fn estimator_update(v_prev: &[f64], m: &[f64], eta: f64) -> Result<Vec<f64>> {
    let mut v = v_prev.to_vec();
    estimator_update_in_place(&mut v, m, eta)?;
    Ok(v)
}

fn estimator_update_in_place(v: &mut [f64], m: &[f64], eta: f64) -> Result<()> {
    if v.len() != m.len() {
        return Err(Error::InvalidArgument(format!(
            "estimator has length {}, sample has length {}",
            v.len(),
            m.len()
        )));
    }
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument(format!("estimator weight {eta} must be positive")));
    }
    let eta = eta.min(1.0);
    if eta == 1.0 {
        v.copy_from_slice(m);
    } else {
        v.iter_mut().zip(m).for_each(|(vi, mi)| *vi = (1.0 - eta) * *vi + eta * mi);
    }
    Ok(())
}

/// Per-round self-checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundDiagnostics {
    pub t: u64,
    pub alpha: f64,
    /// Clipping threshold (CLIP-VRG only).
    pub gamma: Option<f64>,
    /// `max_i ||k_i v_i|| - gamma_t`; nonpositive when clipping holds.
    pub clip_excess: f64,
    /// Max coordinate gap between the mixed average and
    /// `xbar^t - (alpha_t / n) sum_i k_i v_i`.
    pub average_residual: f64,
}

pub fn mean_iterate(states: &[AgentState]) -> Vec<f64> {
    let d = states.first().map_or(0, |s| s.x.len());
    let mut xbar = vec![0.0; d];
    for s in states {
        xbar.iter_mut().zip(&s.x).for_each(|(a, b)| *a += b);
    }
    let inv = 1.0 / states.len() as f64;
    xbar.iter_mut().for_each(|a| *a *= inv);
    xbar
}

fn first_error<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

fn check_states(states: &[AgentState], w: &MixingMatrix) -> Result<()> {
    if states.len() != w.n() {
        return Err(Error::InvalidArgument(format!(
            "{} agent states for a {}-agent mixing matrix",
            states.len(),
            w.n()
        )));
    }
    Ok(())
}

/// Compute phase of a CLIP-VRG round. Leaves `v^t`, `k^t` in `states` and
/// returns the messages `x_i^t - alpha_t k_i^t v_i^t`.
///
/// The estimator follows `v^0 = m^0`, `v^t = (1 - eta_{t-1}) v^{t-1} + eta_{t-1} m^t`.
pub fn clipvrg_compute(
    states: &mut [AgentState],
    schedules: &ScheduleSet,
    oracles: Oracles<'_>,
    t: u64,
    exec: Execution,
) -> Result<Vec<Vec<f64>>> {
    let alpha = schedules.alpha(t);
    let gamma = schedules.gamma(t);
    let eta = if t == 0 { 1.0 } else { schedules.eta(t - 1) };
    first_error(map_mut(exec, states, |i, s| {
        let m = oracles.query(i, t, &s.x)?;
        estimator_update_in_place(&mut s.v, &m.m, eta)?;
        s.k = clip_coefficient(&s.v, gamma).map_err(|e| with_context(e, t, i))?;
        let step = alpha * s.k;
        Ok(s.x.iter().zip(&s.v).map(|(x, v)| x - step * v).collect())
    }))
}

/// Compute phase of a DSGD round: `v` holds the raw sample and `k = 1`.
pub fn dsgd_compute(
    states: &mut [AgentState],
    alpha: &Schedule,
    oracles: Oracles<'_>,
    t: u64,
    exec: Execution,
) -> Result<Vec<Vec<f64>>> {
    let a = alpha.eval(t);
    first_error(map_mut(exec, states, |i, s| {
        let m = oracles.query(i, t, &s.x)?;
        if m.m.len() != s.x.len() {
            return Err(Error::InvalidArgument("sample dimension mismatch".into()));
        }
        s.v = m.m;
        s.k = 1.0;
        Ok(s.x.iter().zip(&s.v).map(|(x, v)| x - a * v).collect())
    }))
}

fn with_context(e: Error, round: u64, agent: usize) -> Error {
    match e {
        Error::InvalidState { reason, .. } => Error::InvalidState {
            round,
            agent: Some(agent),
            reason,
        },
        other => other,
    }
}

/// Mix phase: `x_i <- sum_j w_ij msg_j`, plus the clip-bound and
/// average-dynamics self-checks.
pub fn mix(
    states: &mut [AgentState],
    w: &MixingMatrix,
    messages: &[Vec<f64>],
    t: u64,
    alpha: f64,
    gamma: Option<f64>,
    exec: Execution,
) -> Result<RoundDiagnostics> {
    check_states(states, w)?;
    let n = states.len();
    let d = states[0].x.len();
    let xbar_before = mean_iterate(states);

    // sum_i k_i v_i, accumulated in agent order
    let mut step_sum = vec![0.0; d];
    let mut clip_excess = f64::NEG_INFINITY;
    for s in states.iter() {
        step_sum.iter_mut().zip(&s.v).for_each(|(a, v)| *a += s.k * v);
        if let Some(g) = gamma {
            clip_excess = clip_excess.max(s.k * norm(&s.v) - g);
        }
    }
    if gamma.is_none() {
        clip_excess = 0.0;
    }

    first_error(map_mut(exec, states, |i, s| {
        s.x.iter_mut().for_each(|x| *x = 0.0);
        for &(j, wij) in w.row(i) {
            s.x.iter_mut().zip(&messages[j]).for_each(|(x, m)| *x += wij * m);
        }
        if s.x.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidState {
                round: t,
                agent: Some(i),
                reason: "iterate became non-finite".into(),
            })
        }
    }))?;

    let xbar_after = mean_iterate(states);
    let scale = alpha / n as f64;
    let average_residual = xbar_after
        .iter()
        .zip(&xbar_before)
        .zip(&step_sum)
        .map(|((after, before), s)| (after - (before - scale * s)).abs())
        .fold(0.0, f64::max);

    Ok(RoundDiagnostics {
        t,
        alpha,
        gamma,
        clip_excess,
        average_residual,
    })
}

/// One full CLIP-VRG round `x^t -> x^{t+1}`.
pub fn clipvrg_round(
    states: &mut [AgentState],
    w: &MixingMatrix,
    schedules: &ScheduleSet,
    oracles: Oracles<'_>,
    t: u64,
    exec: Execution,
) -> Result<RoundDiagnostics> {
    check_states(states, w)?;
    let messages = clipvrg_compute(states, schedules, oracles, t, exec)?;
    mix(states, w, &messages, t, schedules.alpha(t), Some(schedules.gamma(t)), exec)
}

/// One full DSGD round `x_i^{t+1} = sum_j w_ij (x_j^t - alpha_t m_j^t)`.
pub fn dsgd_round(
    states: &mut [AgentState],
    w: &MixingMatrix,
    alpha: &Schedule,
    oracles: Oracles<'_>,
    t: u64,
    exec: Execution,
) -> Result<RoundDiagnostics> {
    check_states(states, w)?;
    let messages = dsgd_compute(states, alpha, oracles, t, exec)?;
    mix(states, w, &messages, t, alpha.eval(t), None, exec)
}

/// What an observer sees at time `t`: iterates `x^t` together with the
/// estimator `v^t` and coefficient `k^t` formed from the oracle query at `x^t`.
pub struct RoundTrace<'a> {
    pub t: u64,
    pub states: &'a [AgentState],
    pub xbar: Vec<f64>,
    /// Messages `x_i^t - alpha_t k_i^t v_i^t` about to be mixed.
    pub messages: &'a [Vec<f64>],
    /// Self-checks of the mixing step that produced `x^t` (absent at `t = 0`).
    pub last_round: Option<RoundDiagnostics>,
}

/// A full simulation: algorithm, network, oracles and agent states.
pub struct Simulation<'a> {
    pub algorithm: Algorithm,
    pub mixing: &'a MixingMatrix,
    pub oracles: Oracles<'a>,
    pub exec: Execution,
    states: Vec<AgentState>,
}

impl<'a> Simulation<'a> {
    pub fn new(
        algorithm: Algorithm,
        mixing: &'a MixingMatrix,
        oracles: Oracles<'a>,
        x0: &[f64],
        exec: Execution,
    ) -> Result<Self> {
        let n = mixing.n();
        if oracles.problem.num_agents() != n || oracles.attack.n() != n {
            return Err(Error::InvalidArgument(format!(
                "mixing matrix has {n} agents, problem {} and attack spec {}",
                oracles.problem.num_agents(),
                oracles.attack.n()
            )));
        }
        if x0.len() != oracles.problem.dim() {
            return Err(Error::InvalidArgument(format!(
                "initial point has length {}, problem dimension is {}",
                x0.len(),
                oracles.problem.dim()
            )));
        }
        Ok(Self {
            algorithm,
            mixing,
            oracles,
            exec,
            states: initial_states(n, x0),
        })
    }

    pub fn states(&self) -> &[AgentState] {
        &self.states
    }

    fn compute(&mut self, t: u64) -> Result<Vec<Vec<f64>>> {
        match &self.algorithm {
            Algorithm::ClipVrg(s) => clipvrg_compute(&mut self.states, s, self.oracles, t, self.exec),
            Algorithm::Dsgd(a) => dsgd_compute(&mut self.states, a, self.oracles, t, self.exec),
        }
    }

    /// Runs rounds `0..rounds`, calling `observe` at every `t` in
    /// `0..=rounds`. The final call sees `x^T` (its oracle query is made
    /// but never mixed).
    pub fn run<F>(&mut self, rounds: u64, mut observe: F) -> Result<()>
    where
        F: FnMut(&RoundTrace<'_>) -> Result<()>,
    {
        let mut last = None;
        for t in 0..=rounds {
            let messages = self.compute(t)?;
            observe(&RoundTrace {
                t,
                states: &self.states,
                xbar: mean_iterate(&self.states),
                messages: &messages,
                last_round: last,
            })?;
            if t < rounds {
                let gamma = match &self.algorithm {
                    Algorithm::ClipVrg(s) => Some(s.gamma(t)),
                    Algorithm::Dsgd(_) => None,
                };
                let alpha = self.algorithm.alpha(t);
                last = Some(mix(&mut self.states, self.mixing, &messages, t, alpha, gamma, self.exec)?);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{AttackMode, LinearMeasurementProblem};

    #[test]
    fn clip_coefficient_cases() {
        assert_eq!(clip_coefficient(&[0.3, 0.4], 1.0).unwrap(), 1.0);
        let v = [1.2, 1.6];
        let k = clip_coefficient(&v, 1.0).unwrap();
        assert!((k - 0.5).abs() < 1e-15);
        assert!((k * norm(&v) - 1.0).abs() < 1e-15);
        assert_eq!(clip_coefficient(&[0.0, 0.0], 1e-9).unwrap(), 1.0);
        assert!(matches!(clip_coefficient(&[f64::NAN], 1.0), Err(Error::InvalidState { .. })));
        assert!(clip_coefficient(&[1.0], 0.0).is_err());
    }

    #[test]
    fn estimator_update_cases() {
        let m = [1.0, -2.0];
        assert_eq!(estimator_update(&[5.0, 5.0], &m, 1.0).unwrap(), m.to_vec());
        assert_eq!(estimator_update(&m, &m, 0.5).unwrap(), m.to_vec());
        assert_eq!(estimator_update(&[3.0, 3.0], &m, 7.0).unwrap(), m.to_vec());
        assert!(estimator_update(&[0.0], &m, 0.5).is_err());

        let mut v = m.to_vec();
        for t in 0..100 {
            v = estimator_update(&v, &m, 1.0 / (t as f64 + 2.0)).unwrap();
        }
        assert_eq!(v, m.to_vec());
    }

    #[test]
    fn single_agent_at_optimum_stays_put() {
        let theta = vec![1.0, -3.0];
        let p = LinearMeasurementProblem::new(theta.clone(), vec![vec![0, 1]], 0.0).unwrap();
        let w = MixingMatrix::from_dense(1, vec![1.0]).unwrap();
        let attack = AttackSpec::none(1);
        let oracles = Oracles { problem: &p, attack: &attack, seed: 1 };
        let s = ScheduleSet::with_derived_eta(0.5, 0.82, 10.0, 0.17, 1.0, 1).unwrap();
        let mut states = initial_states(1, &theta);
        for t in 0..20 {
            clipvrg_round(&mut states, &w, &s, oracles, t, Execution::Sequential).unwrap();
        }
        assert_eq!(states[0].x, theta);
        assert_eq!(states[0].k, 1.0);
        assert!(states[0].v.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_gradients_leave_equal_states_constant() {
        let p = LinearMeasurementProblem::new(vec![0.0; 2], vec![vec![0, 1]; 3], 0.0).unwrap();
        let w = MixingMatrix::from_dense(
            3,
            vec![0.5, 0.25, 0.25, 0.25, 0.5, 0.25, 0.25, 0.25, 0.5],
        )
        .unwrap();
        let attack = AttackSpec::new(3, &[0, 1, 2], AttackMode::Zero).unwrap();
        let oracles = Oracles { problem: &p, attack: &attack, seed: 0 };
        let s = ScheduleSet::with_derived_eta(1.0, 0.82, 1.0, 0.17, 1.0, 1).unwrap();
        let x0 = [2.5, -1.0];
        let mut states = initial_states(3, &x0);
        for t in 0..10 {
            clipvrg_round(&mut states, &w, &s, oracles, t, Execution::Sequential).unwrap();
            dsgd_round(&mut states, &w, &s.alpha, oracles, t, Execution::Sequential).unwrap();
        }
        for st in &states {
            assert_eq!(st.x, x0.to_vec());
        }
    }

    #[test]
    fn dsgd_single_quadratic_step() {
        // f(x) = x^2, alpha = 0.5: x1 = 1 - 0.5 * 2 = 0
        let p = LinearMeasurementProblem::new(vec![0.0], vec![vec![0]], 0.0).unwrap();
        let w = MixingMatrix::from_dense(1, vec![1.0]).unwrap();
        let attack = AttackSpec::none(1);
        let oracles = Oracles { problem: &p, attack: &attack, seed: 0 };
        let alpha = Schedule::new(0.5, 0.0, 1).unwrap();
        let mut states = initial_states(1, &[1.0]);
        dsgd_round(&mut states, &w, &alpha, oracles, 0, Execution::Sequential).unwrap();
        assert_eq!(states[0].x, vec![0.0]);
    }

    #[test]
    fn state_count_must_match() {
        let w = MixingMatrix::uniform(2).unwrap();
        let p = LinearMeasurementProblem::new(vec![0.0], vec![vec![0]; 2], 0.0).unwrap();
        let attack = AttackSpec::none(2);
        let oracles = Oracles { problem: &p, attack: &attack, seed: 0 };
        let alpha = Schedule::new(0.5, 0.0, 1).unwrap();
        let mut states = initial_states(3, &[0.0]);
        assert!(dsgd_round(&mut states, &w, &alpha, oracles, 0, Execution::Sequential).is_err());
    }
}
