//! `delphi` — run expert-assisted value-search experiments, play the
//! abstract cube game, and verify recorded runs.
//!
//! Exit codes: 0 success, 1 run failures present, 2 config error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use delphi_cli::config::{AlgoMode, ExperimentConfig};
use delphi_cli::{budgets_csv, compare_oracle_budgets, run_experiment, verify_run_dir};

#[derive(Parser)]
#[command(name = "delphi", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded experiment sweep from a JSON config.
    Run(RunArgs),
    /// Run the abstract cube game with a planner (config mode `cubegame`).
    Cubegame(RunArgs),
    /// Verify a finished run directory (Eluder audit, retention,
    /// accounting cross-checks).
    Verify { run_dir: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    /// Extra seeds appended to the config's list.
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker thread count (overrides the config).
    #[arg(long)]
    workers: Option<usize>,
    /// Hyperparameter override, `key=value`; repeatable.
    #[arg(long = "override")]
    overrides: Vec<String>,
    /// Sweep oracle budgets instead of a single run; writes budgets.csv.
    #[arg(long, value_delimiter = ',')]
    budgets: Vec<u64>,
}

fn load_config(args: &RunArgs, forced_mode: Option<AlgoMode>) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| format!("cannot read {}: {e}", args.config.display()))?;
    let mut config = ExperimentConfig::from_json(&text).map_err(|e| format!("{e:#}"))?;
    if let Some(mode) = forced_mode {
        if config.mode != mode {
            return Err(format!("this subcommand requires config mode {mode:?}"));
        }
    }
    config.seeds.extend(args.seeds.iter().copied());
    if let Some(out) = &args.out {
        config.out_dir = Some(out.clone());
    }
    if let Some(workers) = args.workers {
        config.workers = workers;
    }
    for spec in &args.overrides {
        config.apply_override(spec).map_err(|e| format!("{e:#}"))?;
    }
    config.validate().map_err(|e| format!("{e:#}"))?;
    Ok(config)
}

fn execute(args: &RunArgs, forced_mode: Option<AlgoMode>) -> ExitCode {
    let config = match load_config(args, forced_mode) {
        Ok(config) => config,
        Err(message) => {
            eprintln!("config error: {message}");
            return ExitCode::from(2);
        }
    };
    if !args.budgets.is_empty() {
        return match compare_oracle_budgets(&config, &args.budgets) {
            Ok(rows) => {
                let csv = budgets_csv(&rows);
                print!("{csv}");
                if let Some(dir) = &config.out_dir {
                    if let Err(e) = std::fs::create_dir_all(dir)
                        .and_then(|_| std::fs::write(dir.join("budgets.csv"), csv))
                    {
                        eprintln!("write error: {e}");
                        return ExitCode::from(1);
                    }
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("run error: {e:#}");
                ExitCode::from(1)
            }
        };
    }
    match run_experiment(&config) {
        Ok(report) => {
            let agg = &report.aggregate;
            println!(
                "{} runs, {} completed, {} failed; success rate {:.3}; oracle calls mean {:.2} max {}",
                agg.runs,
                agg.completed,
                agg.failed,
                agg.success_rate,
                agg.mean_oracle_calls,
                agg.max_oracle_calls
            );
            if report.all_completed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("run error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => execute(&args, None),
        Command::Cubegame(args) => execute(&args, Some(AlgoMode::Cubegame)),
        Command::Verify { run_dir } => match verify_run_dir(&run_dir) {
            Ok(lines) => {
                let mut all = true;
                for line in &lines {
                    let status = if line.passed { "PASS" } else { "FAIL" };
                    println!("[{status}] {} — {}", line.name, line.detail);
                    all &= line.passed;
                }
                if all {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => {
                eprintln!("verify error: {e:#}");
                ExitCode::from(2)
            }
        },
    }
}
