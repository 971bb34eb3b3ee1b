mod common;

use clipvrg::config::{AlgorithmConfig, Cadence};
use clipvrg::experiment::{validate_config, CheckStatus};
use clipvrg::sweep::{apply, run_sweep, SweepParam};
use clipvrg::{Error, Execution, Experiment};

#[test]
fn full_grid_config_validates() {
    let cfg = common::load_config("grid_full.json");
    let report = validate_config(&cfg);
    assert!(report.is_ok(), "{report}");
    let kappa = report.curvature.unwrap().kappa;
    assert!((4.0..=4.7).contains(&kappa), "kappa {kappa}");
    // phi = 1 as in the published schedules: reported, not enforced
    let phi = report.check("phi").unwrap();
    assert_eq!(phi.status, CheckStatus::Fail);
    assert!(!phi.enforced);
}

#[test]
fn too_many_attacked_agents_fail_validation() {
    let mut cfg = common::load_config("grid_full.json");
    cfg.attack.count = Some(130);
    let report = validate_config(&cfg);
    let check = report.check("attack_fraction").unwrap();
    assert_eq!(check.status, CheckStatus::Fail, "{report}");
    assert!(130 > report.max_attacked.unwrap());
    assert!(matches!(report.into_result(), Err(Error::Validation(_))));

    cfg.enforce_attack_fraction = false;
    assert!(validate_config(&cfg).is_ok());
}

#[test]
fn bad_exponents_name_the_violated_constraint() {
    let mut cfg = common::load_config("grid_desk.json");
    if let AlgorithmConfig::Clipvrg { alpha, gamma, .. } = &mut cfg.algorithm {
        alpha.tau = Some(0.5);
        gamma.tau = Some(0.3);
    }
    let report = validate_config(&cfg);
    let check = report.check("exponents").unwrap();
    assert_eq!(check.status, CheckStatus::Fail);
    assert!(check.detail.contains("2τ_γ < τ_α"), "{}", check.detail);
    assert!(Experiment::build(&cfg).is_err());
}

#[test]
fn disconnected_topology_is_reported() {
    let mut cfg = common::load_config("grid_desk.json");
    cfg.topology = clipvrg::config::TopologyConfig::Grid { rows: 5, cols: 5, link_radius: 0.5 };
    let report = validate_config(&cfg);
    assert_eq!(report.check("connectivity").unwrap().status, CheckStatus::Fail);
    assert!(!report.is_ok());
}

#[test]
fn shipped_configs_are_valid() {
    for name in [
        "grid_desk.json",
        "grid_desk_dsgd.json",
        "grid_desk_optimal_noattack.json",
        "grid_full.json",
        "grid_full_dsgd.json",
        "classification_desk.json",
        "classification_desk_dsgd.json",
    ] {
        let report = validate_config(&common::load_config(name));
        assert!(report.is_ok(), "{name}:\n{report}");
    }
}

fn short(name: &str, rounds: u64) -> clipvrg::ExperimentConfig {
    let mut cfg = common::load_config(name);
    cfg.rounds = rounds;
    cfg.cadence = Cadence::Every(50);
    cfg
}

#[test]
fn seed_sweep_writes_runs_and_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let values: Vec<String> = (1..=5).map(|s| s.to_string()).collect();
    let entries = run_sweep(&short("grid_desk.json", 200), SweepParam::Seed, &values, Some(dir.path()), Execution::Sequential).unwrap();
    assert_eq!(entries.len(), 5);
    for v in &values {
        let csv = std::fs::read_to_string(dir.path().join(format!("seed_{v}.csv"))).unwrap();
        assert!(csv.starts_with(clipvrg::metrics::CSV_HEADER));
    }
    let summary = std::fs::read_to_string(dir.path().join("sweep_summary.csv")).unwrap();
    let labels: Vec<&str> = summary.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(labels, vec!["1", "2", "3", "4", "5", "mean", "min", "max"]);
}

#[test]
fn attack_count_sweep_flags_infeasible_entry() {
    let base = short("grid_desk.json", 100);
    let b_max = validate_config(&base).max_attacked.unwrap();
    let values = vec!["0".to_string(), (b_max - 1).to_string(), (b_max + 10).to_string()];
    let entries = run_sweep(&base, SweepParam::AttackCount, &values, None, Execution::Sequential).unwrap();
    assert!(entries[0].feasible() && entries[0].summary.is_some());
    assert!(entries[1].feasible() && entries[1].summary.is_some());
    assert!(!entries[2].feasible() && entries[2].summary.is_none());
}

#[test]
fn exponent_sweep_accepts_both_published_pairs() {
    let base = short("grid_desk.json", 100);
    let values = vec!["0.8333333333333334:0.16666666666666666".to_string(), "0.82:0.17".to_string()];
    let entries = run_sweep(&base, SweepParam::Exponents, &values, None, Execution::Sequential).unwrap();
    assert!(entries.iter().all(|e| e.feasible() && e.summary.is_some()));
    assert!(apply(&base, SweepParam::TauGamma, "0.3").is_ok());
    assert!(!validate_config(&apply(&base, SweepParam::TauGamma, "0.45").unwrap()).is_ok());
    assert!("bogus".parse::<SweepParam>().is_err());
}

#[test]
fn summary_tracks_every_round() {
    let cfg = short("grid_desk.json", 300);
    let s = Experiment::build(&cfg).unwrap().run::<std::io::Sink>(Execution::Sequential, None).unwrap();
    assert_eq!(s.rows.first().unwrap().t, 0);
    assert_eq!(s.final_row().t, 300);
    assert_eq!(s.rows.len(), 7);
    assert!(s.min_lemma1_margin.unwrap() >= -1e-10);
    assert!(s.max_clip_excess.unwrap() <= 1e-12);
    assert!(s.max_average_residual <= 1e-10);
    assert!(s.rows.iter().all(|r| r.lemma1_bound.is_some() && r.mean_estimator_error.is_some() && r.avg_accuracy.is_none()));
}
