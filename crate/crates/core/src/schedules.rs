//! Decaying stepsize, clipping-threshold and estimator-weight sequences,
//! together with the exponent and offset conditions that make the
//! consensus and convergence guarantees apply.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent pair maximizing the guaranteed rate.
pub const OPTIMAL_TAU_ALPHA: f64 = 5.0 / 6.0;
pub const OPTIMAL_TAU_GAMMA: f64 = 1.0 / 6.0;

/// `c * (t + phi)^(-tau)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub c: f64,
    pub tau: f64,
    pub phi: u64,
}

impl Schedule {
    pub fn new(c: f64, tau: f64, phi: u64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidArgument(format!("schedule coefficient {c} must be positive")));
        }
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(Error::InvalidArgument(format!("schedule exponent {tau} must be nonnegative")));
        }
        if phi == 0 {
            return Err(Error::InvalidArgument("schedule offset phi must be a positive integer".into()));
        }
        Ok(Self { c, tau, phi })
    }

    pub fn eval(&self, t: u64) -> f64 {
        self.c * ((t + self.phi) as f64).powf(-self.tau)
    }

    pub fn with_phi(self, phi: u64) -> Self {
        Self { phi, ..self }
    }
}

/// One violated exponent inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExponentViolation {
    /// `2 tau_gamma < tau_alpha` fails.
    GammaTooLarge,
    /// `tau_alpha < 1` fails.
    AlphaNotBelowOne,
    /// `tau_alpha <= 1 - tau_gamma` fails.
    SumAboveOne,
}

impl fmt::Display for ExponentViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExponentViolation::GammaTooLarge => "2τ_γ < τ_α",
            ExponentViolation::AlphaNotBelowOne => "τ_α < 1",
            ExponentViolation::SumAboveOne => "τ_α ≤ 1 − τ_γ",
        })
    }
}

/// Checks `2 tau_gamma < tau_alpha < 1` and `tau_alpha <= 1 - tau_gamma`.
/// The sum constraint is closed so the rate-optimal pair `(5/6, 1/6)`, which
/// lies on it, is admissible. An empty list means all three hold.
pub fn validate_exponents(tau_alpha: f64, tau_gamma: f64) -> Vec<ExponentViolation> {
    let mut out = Vec::new();
    if !(2.0 * tau_gamma < tau_alpha) {
        out.push(ExponentViolation::GammaTooLarge);
    }
    if !(tau_alpha < 1.0) {
        out.push(ExponentViolation::AlphaNotBelowOne);
    }
    if !(tau_alpha + tau_gamma <= 1.0 + 1e-12) {
        out.push(ExponentViolation::SumAboveOne);
    }
    out
}

/// `tau_eta = 2 (tau_alpha + tau_gamma) / 3`.
pub fn derive_eta(tau_alpha: f64, tau_gamma: f64) -> f64 {
    2.0 * (tau_alpha + tau_gamma) / 3.0
}

/// Best admissible rate exponent `min(tau_gamma, (tau_alpha - 2 tau_gamma) / 3)`.
pub fn rate_exponent_bound(tau_alpha: f64, tau_gamma: f64) -> f64 {
    tau_gamma.min((tau_alpha - 2.0 * tau_gamma) / 3.0)
}

/// Smallest positive integer `phi` strictly above
/// `1 / (1 - beta^(1/(tau_alpha + tau_gamma))) - 1`.
pub fn min_phi(beta: f64, tau_alpha: f64, tau_gamma: f64) -> Result<u64> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::InvalidArgument(format!("beta = {beta} must lie in [0, 1)")));
    }
    let tau_sum = tau_alpha + tau_gamma;
    if !(tau_sum > 0.0) {
        return Err(Error::InvalidArgument("tau_alpha + tau_gamma must be positive".into()));
    }
    let bound = 1.0 / (1.0 - beta.powf(1.0 / tau_sum)) - 1.0;
    if !bound.is_finite() {
        return Err(Error::NumericalFailure(format!("phi bound overflowed for beta = {beta}")));
    }
    // rounding can leave the floor on the boundary itself; confirm strictly
    let mut phi = (bound.floor() + 1.0).max(1.0) as u64;
    while (phi as f64 / (1.0 + phi as f64)).powf(tau_sum) <= beta {
        phi += 1;
    }
    Ok(phi)
}

/// Smallest constant `c` for which the consensus bound holds: the max of the
/// base-case and induction-step requirements
/// `beta (1 + 1/phi)^s` and `beta / ((phi/(1+phi))^s - beta)`, `s = tau_alpha + tau_gamma`.
pub fn lemma1_constant(beta: f64, tau_alpha: f64, tau_gamma: f64, phi: u64) -> Result<f64> {
    if beta == 0.0 {
        return Ok(0.0);
    }
    if phi == 0 {
        return Err(Error::PreconditionViolation("phi must be positive".into()));
    }
    let s = tau_alpha + tau_gamma;
    let p = phi as f64;
    let denom = (p / (1.0 + p)).powf(s) - beta;
    if !(denom > 0.0) {
        return Err(Error::PreconditionViolation(format!(
            "phi = {phi} too small for beta = {beta}: (phi/(1+phi))^s - beta = {denom}"
        )));
    }
    let base = beta * (1.0 + 1.0 / p).powf(s);
    let step = beta / denom;
    Ok(base.max(step))
}

/// Stepsize, clipping threshold and estimator weight sharing one offset `phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSet {
    pub alpha: Schedule,
    pub gamma: Schedule,
    pub eta: Schedule,
}

impl ScheduleSet {
    /// Builds the set with `tau_eta` derived from the other two exponents.
    pub fn with_derived_eta(
        c_alpha: f64,
        tau_alpha: f64,
        c_gamma: f64,
        tau_gamma: f64,
        c_eta: f64,
        phi: u64,
    ) -> Result<Self> {
        Ok(Self {
            alpha: Schedule::new(c_alpha, tau_alpha, phi)?,
            gamma: Schedule::new(c_gamma, tau_gamma, phi)?,
            eta: Schedule::new(c_eta, derive_eta(tau_alpha, tau_gamma), phi)?,
        })
    }

    pub fn phi(&self) -> u64 {
        self.alpha.phi
    }

    pub fn with_phi(self, phi: u64) -> Self {
        Self {
            alpha: self.alpha.with_phi(phi),
            gamma: self.gamma.with_phi(phi),
            eta: self.eta.with_phi(phi),
        }
    }

    pub fn alpha(&self, t: u64) -> f64 {
        self.alpha.eval(t)
    }

    pub fn gamma(&self, t: u64) -> f64 {
        self.gamma.eval(t)
    }

    /// Estimator weight clamped to `(0, 1]` so the recursion stays a convex
    /// combination even for coefficients above one.
    pub fn eta(&self, t: u64) -> f64 {
        self.eta.eval(t).min(1.0)
    }

    pub fn tau_sum(&self) -> f64 {
        self.alpha.tau + self.gamma.tau
    }

    /// Diagnostics for the structural conditions; empty means compliant.
    pub fn check(&self, beta: Option<f64>, theorem: bool) -> Vec<String> {
        let mut out = Vec::new();
        if self.alpha.phi != self.gamma.phi || self.alpha.phi != self.eta.phi {
            out.push(format!(
                "schedules must share phi (alpha {}, gamma {}, eta {})",
                self.alpha.phi, self.gamma.phi, self.eta.phi
            ));
        }
        if theorem {
            for v in validate_exponents(self.alpha.tau, self.gamma.tau) {
                out.push(format!(
                    "exponent constraint {v} violated (τ_α = {}, τ_γ = {})",
                    self.alpha.tau, self.gamma.tau
                ));
            }
            let want = derive_eta(self.alpha.tau, self.gamma.tau);
            if (self.eta.tau - want).abs() > 1e-12 {
                out.push(format!("τ_η = {} differs from 2(τ_α + τ_γ)/3 = {want}", self.eta.tau));
            }
        }
        if let Some(beta) = beta {
            match min_phi(beta, self.alpha.tau, self.gamma.tau) {
                Ok(p) if self.phi() < p => out.push(format!(
                    "phi = {} below the consensus requirement {p} for beta = {beta}",
                    self.phi()
                )),
                Ok(_) => {}
                Err(e) => out.push(e.to_string()),
            }
        }
        out
    }

    /// `c` in the consensus bound `c sqrt(n) alpha_t gamma_t`.
    pub fn consensus_constant(&self, beta: f64) -> Result<f64> {
        lemma1_constant(beta, self.alpha.tau, self.gamma.tau, self.phi())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eval_examples() {
        let alpha = Schedule::new(220.0, 0.82, 1).unwrap();
        assert_eq!(alpha.eval(0), 220.0);
        let flat = Schedule::new(1.0, 0.0, 3).unwrap();
        assert_eq!(flat.eval(12345), 1.0);
        let gamma = Schedule::new(600.0, 0.17, 1).unwrap();
        let log_space = (600f64.ln() - 0.17 * 100f64.ln()).exp();
        assert_relative_eq!(gamma.eval(99), log_space, max_relative = 1e-14);
    }

    #[test]
    fn eval_is_positive_and_decreasing() {
        let s = Schedule::new(3.0, 0.4, 2).unwrap();
        let mut prev = f64::INFINITY;
        for t in 0..10_000 {
            let v = s.eval(t);
            assert!(v > 0.0 && v < prev);
            prev = v;
        }
    }

    #[test]
    fn schedule_rejects_bad_parameters() {
        assert!(Schedule::new(0.0, 0.5, 1).is_err());
        assert!(Schedule::new(1.0, -0.1, 1).is_err());
        assert!(Schedule::new(1.0, 0.5, 0).is_err());
    }

    #[test]
    fn exponent_validation() {
        assert!(validate_exponents(OPTIMAL_TAU_ALPHA, OPTIMAL_TAU_GAMMA).is_empty());
        assert!(validate_exponents(0.82, 0.17).is_empty());
        assert_eq!(validate_exponents(0.5, 0.3), vec![ExponentViolation::GammaTooLarge]);
        assert_eq!(ExponentViolation::GammaTooLarge.to_string(), "2τ_γ < τ_α");
        let both = validate_exponents(1.2, 0.1);
        assert!(both.contains(&ExponentViolation::AlphaNotBelowOne));
        assert!(both.contains(&ExponentViolation::SumAboveOne));
    }

    #[test]
    fn derived_eta_exponents() {
        assert_relative_eq!(derive_eta(5.0 / 6.0, 1.0 / 6.0), 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(derive_eta(0.82, 0.17), 0.66, epsilon = 1e-15);
        assert_relative_eq!(derive_eta(0.6, 0.2), 8.0 / 15.0, epsilon = 1e-15);
    }

    #[test]
    fn min_phi_examples() {
        assert_eq!(min_phi(0.0, 0.5, 0.5).unwrap(), 1);
        assert_eq!(min_phi(0.5, 0.5, 0.5).unwrap(), 2);
        assert_eq!(min_phi(0.9, 0.5, 0.5).unwrap(), 10);
        assert!(min_phi(1.0, 0.5, 0.5).is_err());
    }

    #[test]
    fn min_phi_steps_off_an_integer_boundary() {
        assert_eq!(min_phi(2.0 / 3.0, 0.5, 0.5).unwrap(), 3);
        assert_eq!(min_phi(0.95, 5.0 / 6.0, 1.0 / 6.0).unwrap(), 20);
        assert!(lemma1_constant(2.0 / 3.0, 0.5, 0.5, 3).is_ok());
    }

    #[test]
    fn lemma1_constant_examples() {
        assert_eq!(lemma1_constant(0.0, 0.5, 0.5, 1).unwrap(), 0.0);
        assert_relative_eq!(lemma1_constant(0.5, 0.5, 0.5, 2).unwrap(), 3.0, epsilon = 1e-12);
        assert_relative_eq!(lemma1_constant(2.0 / 3.0, 0.5, 0.5, 4).unwrap(), 5.0, epsilon = 1e-12);
        assert!(matches!(
            lemma1_constant(0.9, 0.5, 0.5, 2),
            Err(Error::PreconditionViolation(_))
        ));
    }

    #[test]
    fn rate_bounds() {
        assert_relative_eq!(rate_exponent_bound(5.0 / 6.0, 1.0 / 6.0), 1.0 / 6.0, epsilon = 1e-15);
        assert_relative_eq!(rate_exponent_bound(0.82, 0.17), 0.16, epsilon = 1e-12);
        assert_relative_eq!(rate_exponent_bound(0.9, 0.05), 0.05, epsilon = 1e-15);
    }

    #[test]
    fn eta_is_clamped() {
        let s = ScheduleSet::with_derived_eta(220.0, 0.82, 600.0, 0.17, 7.0, 1).unwrap();
        assert_eq!(s.eta(0), 1.0);
        assert!(s.eta(100_000) < 1.0);
        assert!(s.check(None, true).is_empty());
    }

    #[test]
    fn check_reports_phi_and_exponents() {
        let s = ScheduleSet::with_derived_eta(1.0, 0.5, 1.0, 0.3, 1.0, 1).unwrap();
        let diags = s.check(Some(0.9), true);
        assert!(diags.iter().any(|d| d.contains("2τ_γ < τ_α")));
        assert!(diags.iter().any(|d| d.contains("phi = 1 below")));
    }
}
