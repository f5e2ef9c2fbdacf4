use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nsregret_cli::commands::oracle::OracleArgs;
use nsregret_cli::commands::verify::Fault;
use nsregret_cli::commands::{decompose, gen, oracle, partition, run, scaling, verify};
use nsregret_cli::config::{workers_from_env, ExperimentConfig, Overrides};
use nsregret_cli::error::{CliError, CliResult};

/// Dynamic-regret experiments for strongly adaptive online learners.
#[derive(Debug, Parser)]
#[command(name = "nsregret", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Run a single seed instead of the configured list.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Parallel cells (NSREGRET_WORKERS takes precedence).
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    /// Solver and KKT tolerance.
    #[arg(long, global = true, value_name = "FLOAT")]
    tol: Option<f64>,
}

#[derive(Debug, Args)]
struct InstanceArgs {
    /// Instance CSV (`t,k,y`), or for `partition` also a solution CSV (`t,k,u`).
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    /// Path-length budget C_n (default: file metadata, then config).
    #[arg(long)]
    budget: Option<f64>,
    /// Box half-width B (default: file metadata, then config).
    #[arg(long)]
    bound: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every (n, C_n, seed) cell and write results.csv.
    Run,
    /// Sweep the horizon or budget and fit the regret exponent.
    Scaling,
    /// Solve the squared-loss oracle and certify it.
    Oracle(InstanceArgs),
    /// Build the key partition of an oracle sequence.
    Partition(InstanceArgs),
    /// Split each run's regret into per-bin T1/T2/T3 terms.
    Decompose,
    /// Run the fixed-seed property suites.
    Verify {
        #[arg(long, hide = true, value_enum)]
        inject_fault: Option<Fault>,
    },
    /// Write an instance CSV.
    Gen {
        /// Emit the constructive example of this even horizon instead.
        #[arg(long, value_name = "N")]
        paper_example: Option<usize>,
    },
}

fn execute(cli: Cli) -> CliResult<()> {
    let over = Overrides {
        seed: cli.seed,
        out: cli.out,
        workers: workers_from_env(cli.workers)?,
        tol: cli.tol,
    };
    let cfg = ExperimentConfig::resolve(cli.config.as_deref(), &over)?;
    let instance_args = |a: &InstanceArgs| OracleArgs {
        budget: a.budget,
        bound: a.bound,
    };
    match &cli.command {
        Command::Run => {
            let s = run::cmd_run(&cfg)?;
            println!("wrote {} ({} rows)", s.results.display(), s.rows.len());
        }
        Command::Scaling => {
            let s = scaling::cmd_scaling(&cfg)?;
            let r = &s.report;
            println!(
                "slope {:.4} (95% CI [{:.4}, {:.4}], r² {:.4}); wrote {}",
                r.slope,
                r.slope_ci[0],
                r.slope_ci[1],
                r.r_squared,
                s.json.display()
            );
        }
        Command::Oracle(a) => {
            let s = oracle::cmd_oracle(&cfg, &a.input, instance_args(a))?;
            println!(
                "λ = {}, objective = {}, TV = {}; wrote {} and {}",
                s.report.lambda,
                s.report.objective,
                s.report.tv,
                s.solution_path.display(),
                s.kkt_path.display()
            );
            if !s.report.pass {
                return Err(CliError::numerical(format!(
                    "KKT residuals exceed tolerance: {:?}",
                    s.report.kkt
                )));
            }
        }
        Command::Partition(a) => {
            let s = partition::cmd_partition(&cfg, &a.input, instance_args(a))?;
            println!("{} bins; wrote {}", s.partition.bins.len(), s.path.display());
        }
        Command::Decompose => {
            for s in decompose::cmd_decompose(&cfg)? {
                println!(
                    "n={} C={} seed={}: T1={:.6} T2={:.6} T3={:.6} total={:.6} regret={:.6}",
                    s.n, s.budget, s.seed, s.t1, s.t2, s.t3, s.total, s.dynamic_regret
                );
            }
        }
        Command::Verify { inject_fault } => {
            let report = verify::cmd_verify(&cfg, *inject_fault)?;
            let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::numerical(e.to_string()))?;
            println!("{text}");
            if !report.pass {
                let failed: Vec<&str> = report.suites.iter().filter(|s| !s.pass).map(|s| s.name.as_str()).collect();
                return Err(CliError::numerical(format!("failed suites: {}", failed.join(", "))));
            }
        }
        Command::Gen { paper_example } => {
            let path = gen::cmd_gen(&cfg, *paper_example)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
