//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "problem":   {"kind": "grid_estimation", "rows": 5, "cols": 5, "sensing_radius": 2.0,
//!                 "theta_range": [-40.0, 180.0], "noise_std": 3.1622776601683795},
//!   "topology":  {"kind": "grid", "rows": 5, "cols": 5, "link_radius": 1.4142135623730951},
//!   "algorithm": {"kind": "clipvrg",
//!                 "alpha": {"c": 2.0, "tau": 0.82, "phi": "auto"},
//!                 "gamma": {"c": 60.0, "tau": 0.17, "phi": "auto"},
//!                 "eta":   {"c": 1.0, "phi": "auto"}},
//!   "attack":    {"count": 4, "mode": "constant", "value": -200.0, "support": "measured"},
//!   "rounds": 100000,
//!   "seed": 1,
//!   "cadence": {"log_spaced": 20}
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub topology: TopologyConfig,
    pub algorithm: AlgorithmConfig,
    #[serde(default)]
    pub attack: AttackConfig,
    pub rounds: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub cadence: Cadence,
    /// Divisor of the max-l2 error; defaults to the number of agents.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_scale: Option<f64>,
    /// Common initial value of every coordinate of every agent.
    #[serde(default)]
    pub x0: f64,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub enforce_attack_fraction: bool,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub enforce_exponents: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    GridEstimation {
        rows: usize,
        cols: usize,
        sensing_radius: f64,
        theta_range: [f64; 2],
        noise_std: f64,
    },
    Classification {
        data: DataSource,
        lambda: f64,
        batch_size: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Synthetic {
        n_points: usize,
        d: usize,
        margin: f64,
        test_fraction: f64,
    },
    Csv {
        train: PathBuf,
        test: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologyConfig {
    Grid {
        rows: usize,
        cols: usize,
        link_radius: f64,
    },
    Geometric {
        n: usize,
        radius: f64,
    },
    CycleK {
        n: usize,
        k: usize,
    },
    Complete {
        n: usize,
    },
}

impl TopologyConfig {
    pub fn num_agents(&self) -> usize {
        match *self {
            TopologyConfig::Grid { rows, cols, .. } => rows * cols,
            TopologyConfig::Geometric { n, .. }
            | TopologyConfig::CycleK { n, .. }
            | TopologyConfig::Complete { n } => n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiKeyword {
    Auto,
}

/// Offset `phi`: a positive integer or `"auto"` (smallest value meeting the
/// consensus requirement for the network's `beta`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhiConfig {
    Fixed(u64),
    Keyword(PhiKeyword),
}

impl Default for PhiConfig {
    fn default() -> Self {
        PhiConfig::Fixed(1)
    }
}

pub const PHI_AUTO: PhiConfig = PhiConfig::Keyword(PhiKeyword::Auto);

/// `{c, tau, phi}`; `tau` may be omitted where it is implied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default)]
    pub phi: PhiConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgorithmConfig {
    Clipvrg {
        alpha: ScheduleConfig,
        gamma: ScheduleConfig,
        /// `tau` defaults to `2 (tau_alpha + tau_gamma) / 3`.
        eta: ScheduleConfig,
        /// Use `tau_alpha = 5/6`, `tau_gamma = 1/6`.
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        optimal_exponents: bool,
    },
    Dsgd {
        alpha: ScheduleConfig,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackModeConfig {
    #[default]
    Constant,
    SignFlip,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportConfig {
    #[default]
    All,
    Measured,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackConfig {
    /// Number of agents attacked, drawn from the seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    /// Explicit attacked agents (takes precedence over `count`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ids: Option<Vec<usize>>,
    #[serde(default)]
    pub mode: AttackModeConfig,
    #[serde(default)]
    pub value: f64,
    #[serde(default)]
    pub support: SupportConfig,
}

impl AttackConfig {
    pub fn attacked_count(&self) -> usize {
        match (&self.ids, self.count) {
            (Some(ids), _) => ids.len(),
            (None, Some(c)) => c,
            (None, None) => 0,
        }
    }
}

/// Which rounds get a metrics row. `t = 0` and the final round always do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cadence {
    Every(u64),
    /// Roughly this many geometrically spaced rounds per decade.
    LogSpaced(u32),
}

impl Default for Cadence {
    fn default() -> Self {
        Cadence::Every(1)
    }
}

impl Cadence {
    pub fn records(&self, t: u64, rounds: u64) -> bool {
        if t == 0 || t == rounds {
            return true;
        }
        match *self {
            Cadence::Every(k) => k <= 1 || t.is_multiple_of(k),
            Cadence::LogSpaced(per_decade) => {
                let per_decade = per_decade.max(1) as f64;
                // record t when floor(per_decade * log10(t)) increases
                let level = |s: u64| (per_decade * (s as f64).log10()).floor();
                t < 10 || level(t) > level(t - 1)
            }
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn num_agents(&self) -> usize {
        self.topology.num_agents()
    }
}
