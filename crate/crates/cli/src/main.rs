use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gilbert_rare::EstimatorKind;
use gilbert_rare_cli::commands::{self, VerifyOptions};

#[derive(Parser)]
#[command(
    name = "gilbert-rare",
    about = "Rare-event probability estimation for random geometric graphs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a table experiment from a config file; writes CSV and text reports.
    Table {
        config: PathBuf,
        /// Override a config key, e.g. --set base_seed=7 (repeatable).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run a scaling-regime study (fixed window or growing window).
    Regime {
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run the oracle verification suite; nonzero exit on any failed check.
    Verify {
        #[arg(long)]
        seed: Option<u64>,
        /// Divide probe/trial budgets by this factor (smoke runs).
        #[arg(long, default_value_t = 1)]
        scale_down: u64,
        /// Inject an unsound blocker into the importance sampler to
        /// demonstrate that the agreement check catches it (expect failure).
        #[arg(long)]
        inject_fault: bool,
    },
    /// Replay one trial with full likelihood and blocked-volume traces.
    Trial {
        /// Stream to replay as `seed,trial_id`.
        #[arg(long, value_name = "SEED,ID")]
        replay: String,
        config: PathBuf,
        /// Estimator to replay: nmc, cmc, or is.
        #[arg(long, default_value = "is")]
        estimator: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn parse_estimator(raw: &str) -> Result<EstimatorKind, String> {
    match raw {
        "nmc" => Ok(EstimatorKind::Naive),
        "cmc" => Ok(EstimatorKind::Conditional),
        "is" => Ok(EstimatorKind::ImportanceSampling),
        other => Err(format!("unknown estimator `{other}` (expected nmc, cmc, is)")),
    }
}

fn run() -> Result<(), String> {
    commands::init_thread_pool();
    let cli = Cli::parse();
    match cli.command {
        Command::Table { config, overrides } => {
            let cfg = commands::load_table_config(&config, &overrides)?;
            let (csv, txt) = commands::run_table(&cfg)?;
            println!("wrote {} and {}", csv.display(), txt.display());
            println!("{}", std::fs::read_to_string(&txt).map_err(|e| e.to_string())?);
            Ok(())
        }
        Command::Regime { config, overrides } => {
            let cfg = commands::load_regime_config(&config, &overrides)?;
            let (csv, txt) = commands::run_regime(&cfg)?;
            println!("wrote {} and {}", csv.display(), txt.display());
            println!("{}", std::fs::read_to_string(&txt).map_err(|e| e.to_string())?);
            Ok(())
        }
        Command::Verify { seed, scale_down, inject_fault } => {
            let opts = VerifyOptions {
                seed: seed.unwrap_or(424242),
                scale_down,
                inject_fault,
            };
            if inject_fault {
                println!("fault injection active: the agreement check is expected to fail");
            }
            let results = commands::verify(&opts);
            let mut all_passed = true;
            for r in &results {
                println!("{}: {} - {}", r.name, if r.passed { "PASS" } else { "FAIL" }, r.detail);
                all_passed &= r.passed;
            }
            if all_passed {
                Ok(())
            } else {
                Err("verification failed".into())
            }
        }
        Command::Trial { replay, config, estimator, overrides } => {
            let (seed, id) = replay
                .split_once(',')
                .ok_or("expected --replay SEED,ID")
                .and_then(|(s, i)| {
                    Ok((
                        s.trim().parse::<u64>().map_err(|_| "seed must be an integer")?,
                        i.trim().parse::<u64>().map_err(|_| "trial id must be an integer")?,
                    ))
                })
                .map_err(|e| e.to_string())?;
            let cfg = commands::load_table_config(&config, &overrides)?;
            let kind = parse_estimator(&estimator)?;
            print!("{}", commands::trial_replay(&cfg, kind, seed, id)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
