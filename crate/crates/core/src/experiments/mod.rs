//! Synthetic covariance experiment, oracle benchmark and problem files.

mod bench;
mod covariance;
mod problem_file;
mod runner;

pub use bench::{bench_lmo_vs_projection, bench_matrix, loglog_slope, write_bench_csv, BenchRow};
pub use covariance::{block_sizes, gen_covariance_instance, support_metrics, CovarianceInstance, SupportMetrics};
pub use problem_file::{solve_problem_file, ProblemFile, SolveReport};
pub use runner::{
    covariance_problem, run_covariance, run_covariance_experiment, ErrorInfo, ExperimentConfig, ExperimentRun,
    ExperimentSummary, MethodSummary, SupportSample,
};
