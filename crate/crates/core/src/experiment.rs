//! Building, validating and running configured experiments.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::config::{
    AlgorithmConfig, AttackConfig, AttackModeConfig, DataSource, ExperimentConfig, PhiConfig,
    ProblemConfig, ScheduleConfig, SupportConfig, TopologyConfig,
};
use crate::engine::{Algorithm, Oracles, Simulation};
use crate::error::{Error, Result};
use crate::metrics::{self, MetricsRow};
use crate::oracles::{
    self, grid_measurement_problem, make_synthetic_classification, AttackMode, AttackSpec,
    Curvature, Dataset, LogisticProblem, Problem, SharedLogistic, Support,
};
use crate::par::Execution;
use crate::schedules::{
    derive_eta, min_phi, Schedule, ScheduleSet, OPTIMAL_TAU_ALPHA, OPTIMAL_TAU_GAMMA,
};
use crate::topology::{
    build_complete, build_cycle_k, build_grid, build_random_geometric, is_connected,
    metropolis_weights, Graph, MixingMatrix,
};

/// Tolerance on the gradient norm of the reference minimizer.
pub const MINIMIZER_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    Info,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub status: CheckStatus,
    /// Failing an enforced check blocks `run`.
    pub enforced: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub beta: Option<f64>,
    pub curvature: Option<Curvature>,
    pub max_attacked: Option<usize>,
    pub phi: Option<u64>,
}

impl ValidationReport {
    fn push(&mut self, name: &'static str, ok: bool, enforced: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name,
            status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
            enforced,
            detail: detail.into(),
        });
    }

    fn info(&mut self, name: &'static str, detail: impl Into<String>) {
        self.checks.push(Check {
            name,
            status: CheckStatus::Info,
            enforced: false,
            detail: detail.into(),
        });
    }

    pub fn is_ok(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks
            .iter()
            .filter(|c| c.enforced && c.status == CheckStatus::Fail)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn into_result(self) -> Result<Self> {
        if self.is_ok() {
            Ok(self)
        } else {
            Err(Error::Validation(
                self.failures()
                    .map(|c| format!("{}: {}", c.name, c.detail))
                    .collect(),
            ))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = match (c.status, c.enforced) {
                (CheckStatus::Pass, _) => "PASS",
                (CheckStatus::Fail, true) => "FAIL",
                (CheckStatus::Fail, false) => "WARN",
                (CheckStatus::Info, _) => "INFO",
            };
            writeln!(f, "[{tag}] {:<22} {}", c.name, c.detail)?;
        }
        Ok(())
    }
}

fn build_graph(t: &TopologyConfig, seed: u64) -> Result<Graph> {
    match *t {
        TopologyConfig::Grid { rows, cols, link_radius } => build_grid(rows, cols, link_radius),
        TopologyConfig::Geometric { n, radius } => build_random_geometric(n, radius, seed),
        TopologyConfig::CycleK { n, k } => build_cycle_k(n, k),
        TopologyConfig::Complete { n } => build_complete(n),
    }
}

struct BuiltProblem {
    problem: Box<dyn Problem>,
    holdout: Option<Dataset>,
    target_hint: Option<Vec<f64>>,
}

fn build_problem(cfg: &ExperimentConfig) -> Result<BuiltProblem> {
    let n = cfg.num_agents();
    match &cfg.problem {
        ProblemConfig::GridEstimation {
            rows,
            cols,
            sensing_radius,
            theta_range,
            noise_std,
        } => {
            if rows * cols != n {
                return Err(Error::InvalidArgument(format!(
                    "grid estimation has {} sites but the topology has {n} agents",
                    rows * cols
                )));
            }
            let p = grid_measurement_problem(
                *rows,
                *cols,
                *sensing_radius,
                (theta_range[0], theta_range[1]),
                *noise_std,
                cfg.seed,
            )?;
            let theta = p.theta_star().to_vec();
            Ok(BuiltProblem {
                problem: Box::new(p),
                holdout: None,
                target_hint: Some(theta),
            })
        }
        ProblemConfig::Classification { data, lambda, batch_size } => {
            let (train, test) = match data {
                DataSource::Synthetic {
                    n_points,
                    d,
                    margin,
                    test_fraction,
                } => make_synthetic_classification(*n_points, *d, *margin, cfg.seed)?.split(*test_fraction)?,
                DataSource::Csv { train, test } => (Dataset::from_csv(train)?, Dataset::from_csv(test)?),
            };
            if train.dim() != test.dim() {
                return Err(Error::InvalidArgument(format!(
                    "train has {} features, test has {}",
                    train.dim(),
                    test.dim()
                )));
            }
            let shared = SharedLogistic::new(LogisticProblem::new(train, *lambda)?, n, *batch_size)?;
            Ok(BuiltProblem {
                problem: Box::new(shared),
                holdout: (!test.is_empty()).then_some(test),
                target_hint: None,
            })
        }
    }
}

fn build_attack(a: &AttackConfig, n: usize, seed: u64) -> Result<AttackSpec> {
    let mode = match a.mode {
        AttackModeConfig::Constant => AttackMode::Constant {
            value: a.value,
            support: match a.support {
                SupportConfig::All => Support::All,
                SupportConfig::Measured => Support::Measured,
            },
        },
        AttackModeConfig::SignFlip => AttackMode::SignFlip,
        AttackModeConfig::Zero => AttackMode::Zero,
    };
    match &a.ids {
        Some(ids) => AttackSpec::new(n, ids, mode),
        None => AttackSpec::random(n, a.count.unwrap_or(0), mode, seed),
    }
}

fn resolve_tau(s: &ScheduleConfig, implied: Option<f64>, what: &str) -> Result<f64> {
    match (s.tau, implied) {
        (Some(t), Some(i)) if (t - i).abs() > 1e-12 => Err(Error::InvalidArgument(format!(
            "{what}: tau = {t} conflicts with the implied exponent {i}"
        ))),
        (Some(t), _) => Ok(t),
        (None, Some(i)) => Ok(i),
        (None, None) => Err(Error::InvalidArgument(format!("{what}: tau is required"))),
    }
}

fn resolve_phi(p: PhiConfig, auto: Option<u64>) -> Result<u64> {
    match p {
        PhiConfig::Fixed(v) => Ok(v),
        PhiConfig::Keyword(_) => auto.ok_or_else(|| {
            Error::InvalidArgument("phi = \"auto\" needs a connected network with beta < 1".into())
        }),
    }
}

/// Exponents `(tau_alpha, tau_gamma)` of a CLIP-VRG config.
pub fn clipvrg_exponents(alg: &AlgorithmConfig) -> Result<Option<(f64, f64)>> {
    match alg {
        AlgorithmConfig::Clipvrg {
            alpha,
            gamma,
            optimal_exponents,
            ..
        } => {
            let (ia, ig) = if *optimal_exponents {
                (Some(OPTIMAL_TAU_ALPHA), Some(OPTIMAL_TAU_GAMMA))
            } else {
                (None, None)
            };
            Ok(Some((
                resolve_tau(alpha, ia, "alpha")?,
                resolve_tau(gamma, ig, "gamma")?,
            )))
        }
        AlgorithmConfig::Dsgd { .. } => Ok(None),
    }
}

/// Turns the algorithm config into concrete schedules; `"auto"` offsets use
/// the smallest `phi` meeting the consensus requirement for `beta`.
pub fn build_algorithm(alg: &AlgorithmConfig, beta: Option<f64>) -> Result<Algorithm> {
    match alg {
        AlgorithmConfig::Clipvrg { alpha, gamma, eta, .. } => {
            let (ta, tg) = clipvrg_exponents(alg)?.expect("clipvrg has exponents");
            let te = eta.tau.unwrap_or_else(|| derive_eta(ta, tg));
            let auto = beta.map(|b| min_phi(b, ta, tg)).transpose()?;
            Ok(Algorithm::ClipVrg(ScheduleSet {
                alpha: Schedule::new(alpha.c, ta, resolve_phi(alpha.phi, auto)?)?,
                gamma: Schedule::new(gamma.c, tg, resolve_phi(gamma.phi, auto)?)?,
                eta: Schedule::new(eta.c, te, resolve_phi(eta.phi, auto)?)?,
            }))
        }
        AlgorithmConfig::Dsgd { alpha } => {
            let tau = alpha
                .tau
                .ok_or_else(|| Error::InvalidArgument("dsgd alpha: tau is required".into()))?;
            let phi = match alpha.phi {
                PhiConfig::Fixed(v) => v,
                PhiConfig::Keyword(_) => 1,
            };
            Ok(Algorithm::Dsgd(Schedule::new(alpha.c, tau, phi)?))
        }
    }
}

/// Runs every assumption check and reports the numbers behind each verdict.
pub fn validate_config(cfg: &ExperimentConfig) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = cfg.num_agents();

    let graph = match build_graph(&cfg.topology, cfg.seed) {
        Ok(g) => g,
        Err(e) => {
            report.push("topology", false, true, e.to_string());
            return report;
        }
    };
    let connected = is_connected(&graph);
    report.push(
        "connectivity",
        connected,
        true,
        format!("{} agents, {} edges, connected = {connected}", graph.n(), graph.num_edges()),
    );
    if connected {
        match metropolis_weights(&graph) {
            Ok(w) => {
                report.beta = Some(w.beta());
                report.push("mixing", w.beta() < 1.0, true, format!("Metropolis weights, beta = {:.6}", w.beta()));
            }
            Err(e) => report.push("mixing", false, true, e.to_string()),
        }
    }

    let attack = match build_attack(&cfg.attack, n, cfg.seed) {
        Ok(a) => a,
        Err(e) => {
            report.push("attack", false, true, e.to_string());
            return report;
        }
    };
    let honest = attack.unattacked();

    match build_problem(cfg) {
        Ok(built) => {
            if honest.is_empty() {
                report.push("condition_number", false, true, "every agent is attacked");
            } else {
                match oracles::condition_number(built.problem.as_ref(), &honest) {
                    Ok(c) => {
                        report.curvature = Some(c);
                        report.push(
                            "condition_number",
                            true,
                            true,
                            format!("mu = {:.6}, L = {:.6}, kappa = {:.4}", c.mu, c.l, c.kappa),
                        );
                        let b = oracles::max_attacked_count(n, c.kappa);
                        report.max_attacked = Some(b);
                        let rho = attack.rho();
                        let ok = oracles::check_attack_fraction(rho, c.kappa);
                        report.push(
                            "attack_fraction",
                            ok,
                            cfg.enforce_attack_fraction,
                            format!(
                                "rho = {rho:.4} ({} of {n}) vs 1/(1+kappa) = {:.4}; at most {b} attacked agents (n/(1+kappa) = {:.2})",
                                attack.attacked().len(),
                                oracles::feasible_rho(c.kappa),
                                n as f64 * oracles::feasible_rho(c.kappa)
                            ),
                        );
                    }
                    Err(e) => report.push("condition_number", false, true, e.to_string()),
                }
            }
        }
        Err(e) => report.push("problem", false, true, e.to_string()),
    }

    match clipvrg_exponents(&cfg.algorithm) {
        Ok(Some((ta, tg))) => {
            let mut bad: Vec<String> = crate::schedules::validate_exponents(ta, tg)
                .iter()
                .map(|x| x.to_string())
                .collect();
            if let AlgorithmConfig::Clipvrg { eta, .. } = &cfg.algorithm {
                let want = derive_eta(ta, tg);
                if let Some(te) = eta.tau.filter(|te| (te - want).abs() > 1e-12) {
                    bad.push(format!("τ_η = {te} ≠ 2(τ_α + τ_γ)/3 = {want:.6}"));
                }
            }
            let detail = if bad.is_empty() {
                format!(
                    "τ_α = {ta:.6}, τ_γ = {tg:.6}, τ_η = {:.6}, rate bound {:.6}",
                    derive_eta(ta, tg),
                    crate::schedules::rate_exponent_bound(ta, tg)
                )
            } else {
                format!("τ_α = {ta}, τ_γ = {tg} violate {}", bad.join(", "))
            };
            report.push("exponents", bad.is_empty(), cfg.enforce_exponents, detail);
        }
        Ok(None) => report.info("exponents", "DSGD baseline: no exponent constraints"),
        Err(e) => report.push("exponents", false, true, e.to_string()),
    }

    match build_algorithm(&cfg.algorithm, report.beta) {
        Ok(Algorithm::ClipVrg(s)) => {
            report.phi = Some(s.phi());
            let diags = s.check(report.beta, false);
            match report.beta {
                Some(beta) => {
                    let need = min_phi(beta, s.alpha.tau, s.gamma.tau).unwrap_or(u64::MAX);
                    let shared = diags.iter().all(|d| !d.contains("share phi"));
                    report.push(
                        "phi",
                        diags.is_empty(),
                        !shared,
                        format!(
                            "phi = {} vs consensus requirement {need}{}",
                            s.phi(),
                            if diags.is_empty() { String::new() } else { format!(" ({})", diags.join("; ")) }
                        ),
                    );
                }
                None => report.info("phi", format!("phi = {} (beta unavailable)", s.phi())),
            }
        }
        Ok(Algorithm::Dsgd(a)) => report.info("schedule", format!("alpha_t = {}(t+{})^-{}", a.c, a.phi, a.tau)),
        Err(e) => report.push("schedule", false, true, e.to_string()),
    }

    if cfg.rounds == 0 {
        report.info("rounds", "T = 0: only the initial state is recorded");
    }
    report
}

/// A fully instantiated experiment.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub graph: Graph,
    pub mixing: MixingMatrix,
    pub problem: Box<dyn Problem>,
    pub attack: AttackSpec,
    pub honest: Vec<usize>,
    pub algorithm: Algorithm,
    /// Reference point for the max-l2 error (`theta*` or the minimizer).
    pub target: Vec<f64>,
    pub minimizer: Vec<f64>,
    pub holdout: Option<Dataset>,
    /// Consensus constant `c`, present when the run meets the offset condition.
    pub consensus_constant: Option<f64>,
    pub report: ValidationReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub algorithm: &'static str,
    pub rows: Vec<MetricsRow>,
    /// `(t, ||xbar^t - x*||)` at the recorded rounds.
    pub average_error: Vec<(u64, f64)>,
    /// Smallest `bound - consensus_error` over every round.
    pub min_lemma1_margin: Option<f64>,
    /// Largest `||k_i v_i|| - gamma_t` over every round and agent.
    pub max_clip_excess: Option<f64>,
    /// Largest average-dynamics residual over every round.
    pub max_average_residual: f64,
    pub fitted_error_exponent: Option<f64>,
}

impl RunSummary {
    pub fn final_row(&self) -> &MetricsRow {
        self.rows.last().expect("a run records at least t = 0")
    }

    pub fn row_at(&self, t: u64) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.t == t)
    }
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.final_row();
        writeln!(f, "algorithm            {}", self.algorithm)?;
        writeln!(f, "final round          {}", r.t)?;
        writeln!(f, "max_l2_error         {:.6e}", r.max_l2_error)?;
        writeln!(f, "consensus_error      {:.6e}", r.consensus_error)?;
        writeln!(f, "avg_subopt           {:.6e}", r.avg_subopt)?;
        if let Some(a) = r.avg_accuracy {
            writeln!(f, "avg_accuracy         {a:.4}")?;
        }
        if let Some(e) = r.mean_estimator_error {
            writeln!(f, "mean_estimator_error {e:.6e}")?;
        }
        if let Some(m) = self.min_lemma1_margin {
            writeln!(f, "min consensus margin {m:.6e}")?;
        }
        if let Some(c) = self.max_clip_excess {
            writeln!(f, "max clip excess      {c:.3e}")?;
        }
        writeln!(f, "max avg residual     {:.3e}", self.max_average_residual)?;
        if let Some(x) = self.fitted_error_exponent {
            writeln!(f, "fitted error decay   {x:.4}")?;
        }
        Ok(())
    }
}

impl Experiment {
    /// Validates (honouring the enforcement flags) and instantiates.
    pub fn build(config: &ExperimentConfig) -> Result<Self> {
        let report = validate_config(config).into_result()?;
        let graph = build_graph(&config.topology, config.seed)?;
        let mixing = metropolis_weights(&graph)?;
        let n = graph.n();
        let built = build_problem(config)?;
        let attack = build_attack(&config.attack, n, config.seed)?;
        let honest = attack.unattacked();
        let algorithm = build_algorithm(&config.algorithm, Some(mixing.beta()))?;
        let minimizer = oracles::solve_minimizer(built.problem.as_ref(), &honest, MINIMIZER_TOL)?;
        let target = built.target_hint.unwrap_or_else(|| minimizer.clone());
        let consensus_constant = match &algorithm {
            Algorithm::ClipVrg(s) if s.check(Some(mixing.beta()), false).is_empty() => {
                Some(s.consensus_constant(mixing.beta())?)
            }
            _ => None,
        };
        Ok(Self {
            config: config.clone(),
            graph,
            mixing,
            problem: built.problem,
            attack,
            honest,
            algorithm,
            target,
            minimizer,
            holdout: built.holdout,
            consensus_constant,
            report,
        })
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn error_scale(&self) -> f64 {
        self.config.error_scale.unwrap_or(self.n() as f64)
    }

    /// Runs the simulation, streaming recorded rows to `sink` when given.
    pub fn run<W: Write>(&self, exec: Execution, sink: Option<W>) -> Result<RunSummary> {
        let mut writer = sink.map(|w| csv::Writer::from_writer(w));
        let result = self.simulate(exec, writer.as_mut());
        if let Some(w) = writer.as_mut() {
            w.flush()?;
        }
        result
    }

    fn simulate<W: Write>(&self, exec: Execution, mut writer: Option<&mut csv::Writer<W>>) -> Result<RunSummary> {
        let cfg = &self.config;
        let oracles = Oracles {
            problem: self.problem.as_ref(),
            attack: &self.attack,
            seed: cfg.seed,
        };
        let x0 = vec![cfg.x0; self.problem.dim()];
        let mut sim = Simulation::new(self.algorithm, &self.mixing, oracles, &x0, exec)?;
        let n = self.n();
        let scale = self.error_scale();
        let schedules = match &self.algorithm {
            Algorithm::ClipVrg(s) => Some(*s),
            Algorithm::Dsgd(_) => None,
        };

        let mut rows = Vec::new();
        let mut average_error = Vec::new();
        let mut min_margin: Option<f64> = None;
        let mut max_clip: Option<f64> = None;
        let mut max_resid: f64 = 0.0;

        sim.run(cfg.rounds, |trace| {
            if let Some(d) = trace.last_round {
                max_resid = max_resid.max(d.average_residual);
                if d.gamma.is_some() {
                    max_clip = Some(max_clip.map_or(d.clip_excess, |m| m.max(d.clip_excess)));
                }
            }
            let bound = match (schedules, self.consensus_constant) {
                (Some(s), Some(c)) => Some(c * (n as f64).sqrt() * s.alpha(trace.t) * s.gamma(trace.t)),
                _ => None,
            };
            let recorded = cfg.cadence.records(trace.t, cfg.rounds);
            let consensus = (bound.is_some() || recorded).then(|| metrics::consensus_error(trace.states));
            if let (Some(b), Some(c)) = (bound, consensus) {
                let m = b - c;
                min_margin = Some(min_margin.map_or(m, |x| x.min(m)));
            }
            if !recorded {
                return Ok(());
            }
            let row = MetricsRow {
                t: trace.t,
                max_l2_error: metrics::max_l2_error(trace.states, &self.target, scale),
                consensus_error: consensus.unwrap_or_default(),
                lemma1_bound: bound,
                avg_subopt: metrics::suboptimality(self.problem.as_ref(), &self.honest, &self.minimizer, trace.states)?,
                avg_accuracy: self
                    .holdout
                    .as_ref()
                    .map(|h| metrics::classification_accuracy(h, trace.states))
                    .transpose()?,
                mean_estimator_error: schedules
                    .map(|_| metrics::mean_estimator_error(self.problem.as_ref(), &self.honest, trace.states)),
            };
            average_error.push((trace.t, metrics::distance(&trace.xbar, &self.minimizer)));
            if let Some(w) = writer.as_deref_mut() {
                w.serialize(&row)?;
            }
            rows.push(row);
            Ok(())
        })?;

        let tail: Vec<(u64, f64)> = rows.iter().filter(|r| r.t > 0).map(|r| (r.t, r.max_l2_error)).collect();
        Ok(RunSummary {
            algorithm: self.algorithm.name(),
            rows,
            average_error,
            min_lemma1_margin: min_margin,
            max_clip_excess: max_clip,
            max_average_residual: max_resid,
            fitted_error_exponent: metrics::fit_rate_exponent(&tail, 0.5).ok(),
        })
    }
}

/// Validates, runs and writes the CSV to `out` (or the config's `output`).
pub fn run_experiment(config: &ExperimentConfig, out: Option<&Path>, exec: Execution) -> Result<RunSummary> {
    let exp = Experiment::build(config)?;
    match out.or(config.output.as_deref()) {
        Some(path) => {
            let file = BufWriter::new(File::create(path)?);
            exp.run(exec, Some(file))
        }
        None => exp.run::<std::io::Sink>(exec, None),
    }
}

/// Result of the `rho = 1/(1+kappa)` boundary construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TightnessSummary {
    pub variant: TightnessVariant,
    pub agents: usize,
    pub rounds: u64,
    /// Network-average iterate after the last round.
    pub final_mean: f64,
    /// Largest distance of any agent's iterate from 0.
    pub final_max_abs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TightnessVariant {
    /// `m` agents with `x^2`, `m` attacked agents reporting gradients of `(x-1)^2`.
    HalfAttacked,
    /// All `2m` agents honest.
    HonestOnly,
    /// All `2m` agents report gradients of `(x-1)^2`.
    AllAttacked,
}

/// Starting point of the tightness construction; away from both `0` and `1`.
pub const TIGHTNESS_X0: f64 = -1.0;

/// `2m` agents on a complete graph run CLIP-VRG with the rate-optimal
/// exponents on honest objectives `x^2`. Attacked agents simulate `(x-1)^2`,
/// which at `rho = 1/2` (and `kappa = 1`) is indistinguishable from the mirrored
/// problem, so no method can recover `0`.
pub fn run_tightness_demo(m: usize, rounds: u64, variant: TightnessVariant, exec: Execution) -> Result<TightnessSummary> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be positive".into()));
    }
    let n = 2 * m;
    let problem = oracles::LinearMeasurementProblem::new(vec![0.0], vec![vec![0]; n], 0.0)?;
    let fake: oracles::AttackFn = std::sync::Arc::new(|_, _, x: &[f64]| vec![2.0 * (x[0] - 1.0)]);
    let attacked: Vec<usize> = match variant {
        TightnessVariant::HalfAttacked => (m..n).collect(),
        TightnessVariant::HonestOnly => Vec::new(),
        TightnessVariant::AllAttacked => (0..n).collect(),
    };
    let attack = AttackSpec::new(n, &attacked, AttackMode::Custom(fake))?;
    let mixing = metropolis_weights(&build_complete(n)?)?;
    let phi = min_phi(mixing.beta(), OPTIMAL_TAU_ALPHA, OPTIMAL_TAU_GAMMA)?;
    let schedules = ScheduleSet::with_derived_eta(0.25, OPTIMAL_TAU_ALPHA, 4.0, OPTIMAL_TAU_GAMMA, 1.0, phi)?;
    let oracles = Oracles {
        problem: &problem,
        attack: &attack,
        seed: 0,
    };
    let mut sim = Simulation::new(Algorithm::ClipVrg(schedules), &mixing, oracles, &[TIGHTNESS_X0], exec)?;
    let mut last = (0.0, 0.0);
    sim.run(rounds, |trace| {
        if trace.t == rounds {
            last = (
                trace.xbar[0],
                trace.states.iter().map(|s| s.x[0].abs()).fold(0.0, f64::max),
            );
        }
        Ok(())
    })?;
    Ok(TightnessSummary {
        variant,
        agents: n,
        rounds,
        final_mean: last.0,
        final_max_abs: last.1,
    })
}
