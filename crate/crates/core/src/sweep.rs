//! One-parameter sweeps over a base configuration.

use std::fmt;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::config::{AlgorithmConfig, ExperimentConfig, ProblemConfig};
use crate::error::{Error, Result};
use crate::experiment::{validate_config, Experiment, RunSummary};
use crate::par::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    AttackCount,
    NoiseStd,
    TauAlpha,
    TauGamma,
    Seed,
    /// Joint `tau_alpha:tau_gamma` pairs.
    Exponents,
}

impl SweepParam {
    pub const ALL: [SweepParam; 6] = [
        SweepParam::AttackCount,
        SweepParam::NoiseStd,
        SweepParam::TauAlpha,
        SweepParam::TauGamma,
        SweepParam::Seed,
        SweepParam::Exponents,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::AttackCount => "attack_count",
            SweepParam::NoiseStd => "noise_std",
            SweepParam::TauAlpha => "tau_alpha",
            SweepParam::TauGamma => "tau_gamma",
            SweepParam::Seed => "seed",
            SweepParam::Exponents => "exponents",
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|p| p.name()).collect();
                Error::InvalidArgument(format!("unknown sweep parameter {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

fn parse<T: FromStr>(param: SweepParam, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("{param}: cannot parse {value:?}")))
}

fn set_taus(cfg: &mut ExperimentConfig, ta: Option<f64>, tg: Option<f64>) -> Result<()> {
    match &mut cfg.algorithm {
        AlgorithmConfig::Clipvrg {
            alpha,
            gamma,
            eta,
            optimal_exponents,
        } => {
            if *optimal_exponents {
                alpha.tau = Some(crate::schedules::OPTIMAL_TAU_ALPHA);
                gamma.tau = Some(crate::schedules::OPTIMAL_TAU_GAMMA);
                *optimal_exponents = false;
            }
            if let Some(ta) = ta {
                alpha.tau = Some(ta);
            }
            if let Some(tg) = tg {
                gamma.tau = Some(tg);
            }
            // keep the derived estimator exponent in step
            eta.tau = None;
            Ok(())
        }
        AlgorithmConfig::Dsgd { alpha } => match (ta, tg) {
            (Some(ta), None) => {
                alpha.tau = Some(ta);
                Ok(())
            }
            _ => Err(Error::InvalidArgument("the DSGD baseline has no clipping exponent".into())),
        },
    }
}

/// `base` with one parameter replaced.
pub fn apply(base: &ExperimentConfig, param: SweepParam, value: &str) -> Result<ExperimentConfig> {
    let mut cfg = base.clone();
    match param {
        SweepParam::AttackCount => {
            cfg.attack.count = Some(parse(param, value)?);
            cfg.attack.ids = None;
        }
        SweepParam::NoiseStd => match &mut cfg.problem {
            ProblemConfig::GridEstimation { noise_std, .. } => *noise_std = parse(param, value)?,
            ProblemConfig::Classification { .. } => {
                return Err(Error::InvalidArgument("noise_std applies to grid estimation only".into()))
            }
        },
        SweepParam::TauAlpha => set_taus(&mut cfg, Some(parse(param, value)?), None)?,
        SweepParam::TauGamma => set_taus(&mut cfg, None, Some(parse(param, value)?))?,
        SweepParam::Seed => cfg.seed = parse(param, value)?,
        SweepParam::Exponents => {
            let (a, g) = value
                .split_once(':')
                .ok_or_else(|| Error::InvalidArgument(format!("exponents: expected tau_alpha:tau_gamma, got {value:?}")))?;
            set_taus(&mut cfg, Some(parse(param, a)?), Some(parse(param, g)?))?;
        }
    }
    cfg.output = None;
    Ok(cfg)
}

#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub value: String,
    /// Enforced validation failures; the run is skipped when non-empty.
    pub failures: Vec<String>,
    pub summary: Option<RunSummary>,
    /// Error raised by a feasible run.
    pub error: Option<String>,
}

impl SweepEntry {
    pub fn feasible(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Serialize)]
struct SummaryRecord<'a> {
    param: &'a str,
    value: &'a str,
    feasible: bool,
    t: Option<u64>,
    max_l2_error: Option<f64>,
    consensus_error: Option<f64>,
    avg_subopt: Option<f64>,
    avg_accuracy: Option<f64>,
    fitted_error_exponent: Option<f64>,
    note: String,
}

fn file_label(value: &str) -> String {
    value
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

/// Runs `base` once per value. Infeasible values are reported and skipped.
/// With `out_dir`, writes `<param>_<value>.csv` per run and `sweep_summary.csv`.
pub fn run_sweep(
    base: &ExperimentConfig,
    param: SweepParam,
    values: &[String],
    out_dir: Option<&Path>,
    exec: Execution,
) -> Result<Vec<SweepEntry>> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one value".into()));
    }
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
    }
    let mut entries = Vec::with_capacity(values.len());
    for value in values {
        let cfg = apply(base, param, value)?;
        let report = validate_config(&cfg);
        let failures: Vec<String> = report.failures().map(|c| format!("{}: {}", c.name, c.detail)).collect();
        let mut entry = SweepEntry {
            value: value.clone(),
            failures,
            summary: None,
            error: None,
        };
        if entry.feasible() {
            let outcome = Experiment::build(&cfg).and_then(|exp| match out_dir {
                Some(dir) => {
                    let path = dir.join(format!("{param}_{}.csv", file_label(value)));
                    exp.run(exec, Some(BufWriter::new(File::create(path)?)))
                }
                None => exp.run::<std::io::Sink>(exec, None),
            });
            match outcome {
                Ok(s) => entry.summary = Some(s),
                Err(e @ Error::Io(_)) | Err(e @ Error::Csv(_)) => return Err(e),
                Err(e) => entry.error = Some(e.to_string()),
            }
        }
        entries.push(entry);
    }
    if let Some(dir) = out_dir {
        write_summary(&dir.join("sweep_summary.csv"), param, &entries)?;
    }
    Ok(entries)
}

fn write_summary(path: &Path, param: SweepParam, entries: &[SweepEntry]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for e in entries {
        let row = e.summary.as_ref().map(|s| s.final_row());
        let note = if !e.feasible() {
            format!("infeasible: {}", e.failures.join("; "))
        } else {
            e.error.clone().unwrap_or_default()
        };
        w.serialize(SummaryRecord {
            param: param.name(),
            value: &e.value,
            feasible: e.feasible(),
            t: row.map(|r| r.t),
            max_l2_error: row.map(|r| r.max_l2_error),
            consensus_error: row.map(|r| r.consensus_error),
            avg_subopt: row.map(|r| r.avg_subopt),
            avg_accuracy: row.and_then(|r| r.avg_accuracy),
            fitted_error_exponent: e.summary.as_ref().and_then(|s| s.fitted_error_exponent),
            note,
        })?;
    }
    if param == SweepParam::Seed {
        let finals: Vec<_> = entries.iter().filter_map(|e| e.summary.as_ref().map(|s| s.final_row())).collect();
        if !finals.is_empty() {
            let stat = |f: fn(&crate::metrics::MetricsRow) -> f64| -> [f64; 3] {
                let v: Vec<f64> = finals.iter().map(|r| f(r)).collect();
                [
                    v.iter().sum::<f64>() / v.len() as f64,
                    v.iter().copied().fold(f64::INFINITY, f64::min),
                    v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                ]
            };
            let err = stat(|r| r.max_l2_error);
            let cons = stat(|r| r.consensus_error);
            let sub = stat(|r| r.avg_subopt);
            let acc = finals
                .iter()
                .all(|r| r.avg_accuracy.is_some())
                .then(|| stat(|r| r.avg_accuracy.unwrap_or_default()));
            for (k, label) in ["mean", "min", "max"].into_iter().enumerate() {
                w.serialize(SummaryRecord {
                    param: param.name(),
                    value: label,
                    feasible: true,
                    t: Some(finals[0].t),
                    max_l2_error: Some(err[k]),
                    consensus_error: Some(cons[k]),
                    avg_subopt: Some(sub[k]),
                    avg_accuracy: acc.map(|a| a[k]),
                    fitted_error_exponent: None,
                    note: format!("{label} over {} seeds", finals.len()),
                })?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
