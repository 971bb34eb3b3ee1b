use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use clipvrg::experiment::{run_tightness_demo, TightnessVariant};
use clipvrg::sweep::{run_sweep, SweepParam};
use clipvrg::{run_experiment, validate_config, Error, Execution, ExperimentConfig, Result};

#[derive(Parser)]
#[command(name = "clipvrg", version, about = "Resilient decentralized SGD experiments")]
struct Cli {
    /// Worker threads for per-agent work (0 = all cores). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,

    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check every assumption of a config and print the numbers behind each verdict.
    Validate {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run one experiment and write its metrics CSV.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output CSV (defaults to the config's `output`, else no file).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a config once per value of one parameter.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// attack_count, noise_std, tau_alpha, tau_gamma, seed or exponents (tau_alpha:tau_gamma).
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Directory for the per-value CSVs and sweep_summary.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// 2m agents on a complete graph with half of them attacked: the boundary rho = 1/(1+kappa).
    TightnessDemo {
        #[arg(long, default_value_t = 5)]
        m: usize,
        #[arg(long, default_value_t = 100_000)]
        rounds: u64,
        #[arg(long, value_enum, default_value_t = Variant::All)]
        variant: Variant,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    /// Half of the agents attacked.
    Half,
    /// No agent attacked.
    Honest,
    /// Every agent attacked.
    Attacked,
    /// All three.
    All,
}

fn validate(args: &ConfigArgs) -> Result<()> {
    let report = validate_config(&args.load()?);
    print!("{report}");
    report.into_result().map(|_| println!("config is valid"))
}

fn run(args: &ConfigArgs, out: Option<&Path>) -> Result<()> {
    let cfg = args.load()?;
    let summary = run_experiment(&cfg, out, Execution::Parallel)?;
    if let Some(path) = out.or(cfg.output.as_deref()) {
        println!("wrote {}", path.display());
    }
    print!("{summary}");
    Ok(())
}

fn sweep(args: &ConfigArgs, param: &str, values: &[String], out: Option<&Path>) -> Result<()> {
    let cfg = args.load()?;
    let param: SweepParam = param.parse()?;
    let entries = run_sweep(&cfg, param, values, out, Execution::Parallel)?;
    println!("{:<16} {:<10} {:>14} {:>14} {:>14}", param.name(), "status", "max_l2_error", "consensus", "avg_subopt");
    for e in &entries {
        match (&e.summary, &e.error) {
            (Some(s), _) => {
                let r = s.final_row();
                println!(
                    "{:<16} {:<10} {:>14.6e} {:>14.6e} {:>14.6e}",
                    e.value, "ok", r.max_l2_error, r.consensus_error, r.avg_subopt
                );
            }
            (None, Some(err)) => println!("{:<16} {:<10} {err}", e.value, "error"),
            (None, None) => println!("{:<16} {:<10} {}", e.value, "infeasible", e.failures.join("; ")),
        }
    }
    if let Some(dir) = out {
        println!("wrote {}", dir.join("sweep_summary.csv").display());
    }
    Ok(())
}

fn tightness(m: usize, rounds: u64, variant: Variant) -> Result<()> {
    let variants: &[TightnessVariant] = match variant {
        Variant::Half => &[TightnessVariant::HalfAttacked],
        Variant::Honest => &[TightnessVariant::HonestOnly],
        Variant::Attacked => &[TightnessVariant::AllAttacked],
        Variant::All => &[
            TightnessVariant::HonestOnly,
            TightnessVariant::HalfAttacked,
            TightnessVariant::AllAttacked,
        ],
    };
    println!("{} agents, kappa = 1, {rounds} rounds; honest minimizer 0, simulated minimizer 1", 2 * m);
    for &v in variants {
        let s = run_tightness_demo(m, rounds, v, Execution::Parallel)?;
        println!(
            "{:<14} mean iterate {:>10.6}  max |x_i| {:>10.6}",
            format!("{:?}", s.variant),
            s.final_mean,
            s.final_max_abs
        );
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Validate { config } => validate(config),
        Command::Run { config, out } => run(config, out.as_deref()),
        Command::Sweep {
            config,
            param,
            values,
            out,
        } => sweep(config, param, values, out.as_deref()),
        Command::TightnessDemo { m, rounds, variant } => tightness(*m, *rounds, *variant),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match clipvrg::par::with_threads(cli.threads, || dispatch(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                Error::Validation(items) => {
                    eprintln!("validation failed:");
                    for item in items {
                        eprintln!("  {item}");
                    }
                }
                other => eprintln!("error: {other}"),
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
