//! Decentralized optimization under adversarial oracle attacks: CLIP-VRG,
//! a DSGD baseline, network and problem builders, and run metrics.
// `!(x <= y)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod oracles;
pub mod par;
pub mod rng;
pub mod schedules;
pub mod sweep;
pub mod topology;

pub use config::ExperimentConfig;
pub use engine::{AgentState, Algorithm, Oracles, Simulation};
pub use error::{Error, Result};
pub use experiment::{run_experiment, validate_config, Experiment, RunSummary, ValidationReport};
pub use par::Execution;
pub use schedules::{Schedule, ScheduleSet};
