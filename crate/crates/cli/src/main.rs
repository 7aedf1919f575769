use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use fwal::experiments::{
    bench_lmo_vs_projection, run_covariance_experiment, solve_problem_file, write_bench_csv, ExperimentConfig,
    ProblemFile,
};
use fwal::verify::{run_all, VerifyOptions};
use fwal::FwalError;

#[derive(Parser, Debug)]
#[command(name = "fwal", version, about = "Frank-Wolfe augmented Lagrangian solver")]
struct Cli {
    /// Seed for every random draw (overrides the config file's seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for CSV/JSON outputs.
    #[arg(long, global = true, default_value = "fwal-out")]
    out_dir: PathBuf,
    /// Wall-clock budget in seconds (per method for cov-exp).
    #[arg(long, global = true)]
    budget_s: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the problem described by a JSON file.
    Solve { problem: PathBuf },
    /// Run the covariance estimation experiment (FW-AL against forward-backward).
    CovExp { config: PathBuf },
    /// Time the trace-ball oracle against the trace-ball projection.
    BenchLmo {
        #[arg(long, value_delimiter = ',', default_value = "100,200,400")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        trials: usize,
    },
    /// Run the randomized self-checks.
    Verify {
        /// Full-size suites instead of the quick ones.
        #[arg(long)]
        full: bool,
    },
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: ErrorBody<'a>,
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    let report = ErrorReport {
        error: ErrorBody { kind, message },
    };
    eprintln!("{}", serde_json::to_string(&report).expect("error report serializes"));
    ExitCode::from(code)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, FwalError> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn print<T: Serialize>(value: &T) -> Result<(), FwalError> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode, FwalError> {
    match cli.command {
        Command::Solve { problem } => {
            let mut pf: ProblemFile = read_json(&problem)?;
            if let Some(b) = cli.budget_s {
                pf.solver.time_budget_s = Some(b);
            }
            if let Some(s) = cli.seed {
                pf.solver.seed = s;
            }
            let report = solve_problem_file(&pf, Some(&cli.out_dir))?;
            print(&report)?;
        }
        Command::CovExp { config } => {
            let mut cfg: ExperimentConfig = read_json(&config)?;
            if let Some(b) = cli.budget_s {
                cfg.time_budget_s = b;
                cfg.fwal.time_budget_s = Some(b);
                cfg.gfb.time_budget_s = Some(b);
            }
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let summary = run_covariance_experiment(&cfg, &cli.out_dir)?;
            print(&summary)?;
        }
        Command::BenchLmo { dims, trials } => {
            let rows = bench_lmo_vs_projection(&dims, trials, cli.seed.unwrap_or(0))?;
            std::fs::create_dir_all(&cli.out_dir)?;
            write_bench_csv(BufWriter::new(File::create(cli.out_dir.join("bench_lmo.csv"))?), &rows)?;
            write_bench_csv(std::io::stdout().lock(), &rows)?;
        }
        Command::Verify { full } => {
            let seed = cli.seed.unwrap_or(0);
            let opts = if full {
                VerifyOptions {
                    seed,
                    ..VerifyOptions::default()
                }
            } else {
                VerifyOptions::quick(seed)
            };
            let checks = run_all(&opts)?;
            print(&checks)?;
            let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
            if !failed.is_empty() {
                return Ok(fail(
                    "verification_failed",
                    format!("failed checks: {}", failed.join(", ")),
                    1,
                ));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim().to_string(), 2),
    };
    if let Some(b) = cli.budget_s {
        if !(b > 0.0) {
            return fail("usage", format!("--budget-s must be positive, got {b}"), 2);
        }
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => fail(e.kind(), e.to_string(), 1),
    }
}
