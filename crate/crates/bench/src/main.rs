use std::process::ExitCode;

use clap::{Parser, Subcommand};

use psca_bench::config::RunArgs;
use psca_bench::report::write_file;
use psca_bench::{scaling_study, BenchError, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "psca-bench",
    version,
    about = "Run SCA / P-SCA experiments and scaling studies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one seed (or a sweep with --seeds) and write CSV and JSON reports.
    Run(RunArgs),
    /// Fit the iteration-count power law in 1/eps.
    Scaling {
        #[command(flatten)]
        run: RunArgs,
        /// Strictly decreasing tolerances, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        eps_list: Vec<f64>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(BenchError::Config(violations)) => {
            eprintln!("invalid configuration:");
            for v in violations {
                eprintln!("  - {v}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> psca_bench::Result<bool> {
    match cli.command {
        Command::Run(args) => {
            let cfg = ExperimentConfig::from(args);
            let out = psca_bench::run_experiment(&cfg)?;
            for (run, path) in out.runs.iter().zip(&out.report_paths) {
                match &run.report.error {
                    None => println!(
                        "seed {}: {} after {} iterations, f_out = {:.6e} -> {}",
                        run.seed,
                        run.report.termination.as_deref().unwrap_or("-"),
                        run.report.iterations,
                        run.report.f_out.unwrap_or(f64::NAN),
                        path.display()
                    ),
                    Some(e) => println!("seed {}: error: {e} -> {}", run.seed, path.display()),
                }
            }
            if let (Some(agg), Some(path)) = (&out.aggregate, &out.aggregate_path) {
                println!(
                    "eps-SOSP rate {}/{} (95% CI [{:.3}, {:.3}]) -> {}",
                    agg.sosp_count,
                    agg.runs,
                    agg.sosp_rate_ci95.0,
                    agg.sosp_rate_ci95.1,
                    path.display()
                );
            }
            Ok(out.all_ok())
        }
        Command::Scaling { run, eps_list } => {
            let cfg = ExperimentConfig::from(run);
            let seeds = cfg.seeds.unwrap_or(1);
            let table = scaling_study(&cfg, &eps_list, seeds)?;
            for row in &table.rows {
                println!(
                    "eps = {:.3e}  median iterations = {}{}",
                    row.eps,
                    row.median_iterations.map_or("-".into(), |m| format!("{m}")),
                    if row.flagged { "  [flagged, excluded]" } else { "" }
                );
            }
            match table.fit {
                Some(f) => println!("slope = {:.4} ± {:.4} (95%)", f.slope, f.slope_ci95),
                None => println!("slope unavailable: fewer than two unflagged rows"),
            }
            let path = cfg.out_dir.join(format!(
                "scaling_{}_{}.json",
                cfg.algo.as_str(),
                psca_bench::experiment::sanitize(&cfg.problem)
            ));
            write_file(&path, &serde_json::to_string_pretty(&table)?)?;
            println!("table -> {}", path.display());
            Ok(table.rows.iter().all(|r| !r.flagged))
        }
    }
}
