use std::fmt;
use std::sync::Arc;

use rand::seq::index;

use super::GradientSample;
use crate::error::{Error, Result};
use crate::rng::{setup_stream, SetupStream};

/// Adversarial oracle as a function of `(agent, round, x_i)`.
pub type AttackFn = Arc<dyn Fn(usize, u64, &[f64]) -> Vec<f64> + Send + Sync>;

/// Where a constant attack vector is nonzero.
#[derive(Debug, Clone, PartialEq)]
pub enum Support {
    All,
    /// The coordinates the agent's honest gradients live on.
    Measured,
    Mask(Vec<bool>),
}

#[derive(Clone)]
pub enum AttackMode {
    Constant { value: f64, support: Support },
    SignFlip,
    Zero,
    Custom(AttackFn),
}

impl fmt::Debug for AttackMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttackMode::Constant { value, support } => f
                .debug_struct("Constant")
                .field("value", value)
                .field("support", support)
                .finish(),
            AttackMode::SignFlip => f.write_str("SignFlip"),
            AttackMode::Zero => f.write_str("Zero"),
            AttackMode::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// The attacked set `A` and what its oracles return instead of honest samples.
#[derive(Debug, Clone)]
pub struct AttackSpec {
    attacked: Vec<bool>,
    mode: AttackMode,
}

impl AttackSpec {
    pub fn none(n: usize) -> Self {
        Self {
            attacked: vec![false; n],
            mode: AttackMode::Zero,
        }
    }

    pub fn new(n: usize, attacked: &[usize], mode: AttackMode) -> Result<Self> {
        let mut mask = vec![false; n];
        for &i in attacked {
            if i >= n {
                return Err(Error::InvalidArgument(format!("attacked agent {i} out of range for {n} agents")));
            }
            if mask[i] {
                return Err(Error::InvalidArgument(format!("agent {i} listed twice in the attacked set")));
            }
            mask[i] = true;
        }
        Ok(Self { attacked: mask, mode })
    }

    /// `count` agents drawn uniformly without replacement.
    pub fn random(n: usize, count: usize, mode: AttackMode, seed: u64) -> Result<Self> {
        if count > n {
            return Err(Error::InvalidArgument(format!("cannot attack {count} of {n} agents")));
        }
        let mut rng = setup_stream(seed, SetupStream::AttackedSet);
        let mut ids = index::sample(&mut rng, n, count).into_vec();
        ids.sort_unstable();
        Self::new(n, &ids, mode)
    }

    pub fn n(&self) -> usize {
        self.attacked.len()
    }

    pub fn mode(&self) -> &AttackMode {
        &self.mode
    }

    pub fn is_attacked(&self, agent: usize) -> bool {
        self.attacked[agent]
    }

    pub fn attacked(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.attacked[i]).collect()
    }

    pub fn unattacked(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| !self.attacked[i]).collect()
    }

    /// Attacked fraction `rho = |A| / n`.
    pub fn rho(&self) -> f64 {
        self.attacked.iter().filter(|&&a| a).count() as f64 / self.n() as f64
    }

    /// Whether an attacked agent's output depends on its honest sample.
    pub fn needs_honest(&self, agent: usize) -> bool {
        !self.attacked[agent] || matches!(self.mode, AttackMode::SignFlip)
    }

    /// Passes honest samples through for unattacked agents and substitutes
    /// the adversarial vector otherwise.
    pub fn apply(
        &self,
        agent: usize,
        round: u64,
        x: &[f64],
        honest: Option<GradientSample>,
        measured: Option<&[usize]>,
    ) -> Result<GradientSample> {
        if !self.attacked[agent] {
            return honest.ok_or_else(|| {
                Error::InvalidArgument(format!("unattacked agent {agent} has no honest sample"))
            });
        }
        let d = x.len();
        let m = match &self.mode {
            AttackMode::Zero => vec![0.0; d],
            AttackMode::SignFlip => {
                let h = honest.ok_or_else(|| {
                    Error::InvalidArgument("sign-flip attack needs the honest sample".into())
                })?;
                h.m.into_iter().map(|v| -v).collect()
            }
            AttackMode::Constant { value, support } => match support {
                Support::All => vec![*value; d],
                Support::Measured => {
                    let mut m = vec![0.0; d];
                    match measured {
                        Some(rows) => rows.iter().for_each(|&j| m[j] = *value),
                        None => m.fill(*value),
                    }
                    m
                }
                Support::Mask(mask) => {
                    if mask.len() != d {
                        return Err(Error::InvalidArgument(format!(
                            "support mask has length {}, expected {d}",
                            mask.len()
                        )));
                    }
                    mask.iter().map(|&on| if on { *value } else { 0.0 }).collect()
                }
            },
            AttackMode::Custom(f) => {
                let m = f(agent, round, x);
                if m.len() != d {
                    return Err(Error::InvalidArgument(format!(
                        "custom attack returned length {}, expected {d}",
                        m.len()
                    )));
                }
                m
            }
        };
        let out = GradientSample { m, agent, round };
        if !out.is_finite() {
            return Err(Error::AttackOutputInvalid { agent, round });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(agent: usize, m: Vec<f64>) -> GradientSample {
        GradientSample { m, agent, round: 3 }
    }

    #[test]
    fn pass_through_for_every_mode() {
        let modes = [
            AttackMode::Zero,
            AttackMode::SignFlip,
            AttackMode::Constant { value: -200.0, support: Support::Measured },
            AttackMode::Custom(Arc::new(|_, _, x: &[f64]| vec![f64::NAN; x.len()])),
        ];
        for mode in modes {
            let a = AttackSpec::new(3, &[1], mode).unwrap();
            let h = sample(0, vec![1.0, -2.0]);
            assert_eq!(a.apply(0, 3, &[0.0; 2], Some(h.clone()), None).unwrap(), h);
        }
    }

    #[test]
    fn constant_vector_attack() {
        let a = AttackSpec::new(2, &[0], AttackMode::Constant { value: 0.714, support: Support::All }).unwrap();
        let out = a.apply(0, 0, &vec![0.0; 784], None, None).unwrap();
        assert_eq!(out.m.len(), 784);
        assert!(out.m.iter().all(|&v| v == 0.714));
    }

    #[test]
    fn measured_support() {
        let a = AttackSpec::new(2, &[0], AttackMode::Constant { value: -200.0, support: Support::Measured }).unwrap();
        let out = a.apply(0, 0, &[0.0; 4], None, Some(&[1, 3])).unwrap();
        assert_eq!(out.m, vec![0.0, -200.0, 0.0, -200.0]);
    }

    #[test]
    fn sign_flip_negates() {
        let a = AttackSpec::new(2, &[1], AttackMode::SignFlip).unwrap();
        let out = a.apply(1, 0, &[0.0; 2], Some(sample(1, vec![1.5, -2.0])), None).unwrap();
        assert_eq!(out.m, vec![-1.5, 2.0]);
        assert!(a.apply(1, 0, &[0.0; 2], None, None).is_err());
    }

    #[test]
    fn non_finite_custom_output_is_rejected() {
        let f: AttackFn = Arc::new(|_, _, x: &[f64]| vec![f64::INFINITY; x.len()]);
        let a = AttackSpec::new(1, &[0], AttackMode::Custom(f)).unwrap();
        assert!(matches!(
            a.apply(0, 7, &[0.0], None, None),
            Err(Error::AttackOutputInvalid { agent: 0, round: 7 })
        ));
    }

    #[test]
    fn random_set_is_seeded() {
        let a = AttackSpec::random(625, 100, AttackMode::Zero, 5).unwrap();
        let b = AttackSpec::random(625, 100, AttackMode::Zero, 5).unwrap();
        assert_eq!(a.attacked(), b.attacked());
        assert_eq!(a.attacked().len(), 100);
        assert!((a.rho() - 0.16).abs() < 1e-15);
        assert_eq!(a.unattacked().len(), 525);
        assert!(AttackSpec::new(3, &[1, 1], AttackMode::Zero).is_err());
    }
}
