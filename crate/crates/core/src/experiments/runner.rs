use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use web_time::Instant;

use super::covariance::{gen_covariance_instance, support_metrics, CovarianceInstance, SupportMetrics};
use crate::error::{FwalError, Result};
use crate::gfb::{GfbConfig, GfbSolver};
use crate::linalg::LanczosOptions;
use crate::oracles::{ConstraintSet, PsdL1Ball, PsdTraceBall};
use crate::problem::{SmoothObjective, SplitProblem, SquaredDistance};
use crate::solver::{write_trace_csv, FwalSolver, IterateRecord, SolverConfig, StopReason};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub d: usize,
    /// Number of samples; defaults to `d`.
    pub n: Option<usize>,
    pub sigma: f64,
    pub n_blocks: usize,
    pub threshold_keep: f64,
    pub seed: u64,
    pub normalize_empirical: bool,
    /// ℓ1 radius; defaults to `1.1·‖thresholded Σ‖₁`.
    pub beta1: Option<f64>,
    /// Trace radius; defaults to `1.1·tr(thresholded Σ)`.
    pub beta2: Option<f64>,
    pub psd_l1_diagonal_only: bool,
    /// Eigensolver settings of the trace-ball oracle.
    pub lanczos: Option<LanczosOptions>,
    pub lambda: f64,
    pub fwal: SolverConfig,
    pub gfb: GfbConfig,
    /// Wall-clock budget per method, applied unless a method sets its own.
    pub time_budget_s: f64,
    pub support_threshold: f64,
    /// Iterations between support samples, per method.
    pub fwal_sample_every: usize,
    pub gfb_sample_every: usize,
    pub run_fwal: bool,
    pub run_gfb: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            d: 100,
            n: None,
            sigma: 0.6,
            n_blocks: 5,
            threshold_keep: 0.9,
            seed: 0,
            normalize_empirical: true,
            beta1: None,
            beta2: None,
            psd_l1_diagonal_only: false,
            lanczos: None,
            lambda: 1.0,
            fwal: SolverConfig {
                max_outer_iters: usize::MAX,
                record_every: 10,
                ..SolverConfig::default()
            },
            gfb: GfbConfig {
                max_iters: usize::MAX,
                ..GfbConfig::default()
            },
            time_budget_s: 60.0,
            support_threshold: 1e-2,
            fwal_sample_every: 100,
            gfb_sample_every: 5,
            run_fwal: true,
            run_gfb: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_blocks == 0 || self.d < 2 * self.n_blocks {
            return Err(FwalError::InvalidArgument(format!(
                "need d ≥ 2·n_blocks, got d={} and {} blocks",
                self.d, self.n_blocks
            )));
        }
        if !(self.time_budget_s > 0.0) || !(self.lambda > 0.0) {
            return Err(FwalError::InvalidArgument("budget and lambda must be positive".into()));
        }
        if self.fwal_sample_every == 0 || self.gfb_sample_every == 0 {
            return Err(FwalError::InvalidArgument("sample cadences must be at least 1".into()));
        }
        for b in [self.beta1, self.beta2].into_iter().flatten() {
            if !(b > 0.0) {
                return Err(FwalError::InvalidArgument("radii must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn instance(&self) -> Result<CovarianceInstance> {
        gen_covariance_instance(
            self.d,
            self.n.unwrap_or(self.d),
            self.sigma,
            self.n_blocks,
            self.threshold_keep,
            self.normalize_empirical,
            self.seed,
        )
    }

    /// `(β₁, β₂)` for an instance.
    pub fn radii(&self, inst: &CovarianceInstance) -> (f64, f64) {
        // an all-zero truth would give zero radii; fall back to unit balls
        let pos = |v: f64| if v > 0.0 { v } else { 1.0 };
        (
            self.beta1.unwrap_or_else(|| pos(1.1 * inst.true_cov.l1_norm())),
            self.beta2.unwrap_or_else(|| pos(1.1 * inst.true_cov.trace())),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportSample {
    pub t: usize,
    pub wall_time_s: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
}

impl From<&FwalError> for ErrorInfo {
    fn from(e: &FwalError) -> Self {
        ErrorInfo {
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub error: Option<ErrorInfo>,
    pub stop: Option<StopReason>,
    pub iterations: usize,
    pub wall_time_s: f64,
    pub final_objective: f64,
    pub final_feasibility: f64,
    pub min_feasibility: f64,
    pub final_support: SupportMetrics,
    pub support_samples: Vec<SupportSample>,
    pub trace_csv: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub d: usize,
    pub n: usize,
    pub sigma: f64,
    pub n_blocks: usize,
    pub threshold_keep: f64,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub lambda: f64,
    pub support_size: usize,
    pub time_budget_s: f64,
    pub methods: Vec<MethodSummary>,
}

/// Everything a run produced, before anything is written.
#[derive(Clone, Debug)]
pub struct ExperimentRun {
    pub summary: ExperimentSummary,
    pub traces: Vec<(String, Vec<IterateRecord>)>,
    /// Final estimates (row-major `d×d`) per method.
    pub estimates: Vec<(String, Vec<f64>)>,
}

/// A split problem with its loss and sets.
pub type CovarianceProblem = (SplitProblem, Arc<dyn SmoothObjective>, Vec<Arc<dyn ConstraintSet>>);

/// The split problem `min ‖S − Σ̂‖²` over `𝒳₁ ∩ 𝒳₂` with two matrix copies.
pub fn covariance_problem(
    inst: &CovarianceInstance,
    beta1: f64,
    beta2: f64,
    diagonal_only: bool,
    lanczos: Option<LanczosOptions>,
    lambda: f64,
) -> Result<CovarianceProblem> {
    let d = inst.d;
    let loss: Arc<dyn SmoothObjective> = Arc::new(SquaredDistance::new(inst.empirical.as_slice().to_vec()));
    let sets: Vec<Arc<dyn ConstraintSet>> = vec![
        Arc::new(PsdL1Ball {
            side: d,
            radius: beta1,
            diagonal_only,
        }),
        Arc::new(PsdTraceBall {
            lanczos: lanczos.unwrap_or_default(),
            ..PsdTraceBall::new(d, beta2)
        }),
    ];
    let p = SplitProblem::intersection(loss.clone(), sets.clone(), lambda)?;
    Ok((p, loss, sets))
}

fn sample(t: usize, wall: f64, m: SupportMetrics) -> SupportSample {
    SupportSample {
        t,
        wall_time_s: wall,
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
    }
}

fn nan_metrics() -> SupportMetrics {
    SupportMetrics {
        precision: f64::NAN,
        recall: f64::NAN,
        f1: f64::NAN,
        fraction_recovered: f64::NAN,
    }
}

fn failed(method: &str, e: &FwalError) -> MethodSummary {
    MethodSummary {
        method: method.into(),
        error: Some(e.into()),
        stop: None,
        iterations: 0,
        wall_time_s: 0.0,
        final_objective: f64::NAN,
        final_feasibility: f64::NAN,
        min_feasibility: f64::NAN,
        final_support: nan_metrics(),
        support_samples: Vec::new(),
        trace_csv: None,
    }
}

fn min_feasibility(trace: &[IterateRecord]) -> f64 {
    trace.iter().map(|r| r.feasibility).fold(f64::INFINITY, f64::min)
}

fn run_fwal(
    cfg: &ExperimentConfig,
    inst: &CovarianceInstance,
    p: &SplitProblem,
) -> (MethodSummary, Vec<IterateRecord>, Vec<f64>) {
    let mut scfg = cfg.fwal.clone();
    scfg.time_budget_s = scfg.time_budget_s.or(Some(cfg.time_budget_s));
    if scfg.lambda.is_none() {
        scfg.lambda = Some(cfg.lambda);
    }
    let mut solver = match FwalSolver::new(p, &scfg) {
        Ok(s) => s,
        Err(e) => return (failed("fwal", &e), Vec::new(), Vec::new()),
    };
    let mut samples = Vec::new();
    let mut sample_err = None;
    let every = cfg.fwal_sample_every;
    let thr = cfg.support_threshold;
    solver.reset_clock();
    let result = solver.run(|s, info| {
        if s.iterations() % every == 0 {
            match support_metrics(s.x().block(0), &inst.support_mask, thr) {
                Ok(m) => samples.push(sample(s.iterations(), info.record.wall_time_s, m)),
                Err(e) => sample_err = Some(e),
            }
        }
        true
    });
    let (out, error) = match result {
        Ok(out) => (out, None),
        Err(e) => (*e.partial, Some(e.error)),
    };
    let error = error.or(sample_err);
    let estimate = out.x.block(0).to_vec();
    let final_support = support_metrics(&estimate, &inst.support_mask, thr).unwrap_or_else(|_| nan_metrics());
    let last = out.trace.last();
    let summary = MethodSummary {
        method: "fwal".into(),
        error: error.as_ref().map(ErrorInfo::from),
        stop: error.is_none().then_some(out.stop),
        iterations: out.iterations,
        wall_time_s: last.map_or(0.0, |r| r.wall_time_s),
        final_objective: last.map_or(f64::NAN, |r| r.objective),
        final_feasibility: last.map_or(f64::NAN, |r| r.feasibility),
        min_feasibility: min_feasibility(&out.trace),
        final_support,
        support_samples: samples,
        trace_csv: None,
    };
    (summary, out.trace, estimate)
}

fn run_gfb(
    cfg: &ExperimentConfig,
    inst: &CovarianceInstance,
    loss: Arc<dyn SmoothObjective>,
    sets: Vec<Arc<dyn ConstraintSet>>,
) -> (MethodSummary, Vec<IterateRecord>, Vec<f64>) {
    let mut gcfg = cfg.gfb.clone();
    gcfg.time_budget_s = gcfg.time_budget_s.or(Some(cfg.time_budget_s));
    let d2 = inst.d * inst.d;
    let solver = match GfbSolver::new(loss.clone(), sets, &gcfg, &vec![0.0; d2]) {
        Ok(s) => s,
        Err(e) => return (failed("gfb", &e), Vec::new(), Vec::new()),
    };
    let mut samples = Vec::new();
    let mut last_x = vec![0.0; d2];
    let mut trace_so_far = Vec::new();
    let every = cfg.gfb_sample_every;
    let thr = cfg.support_threshold;
    let start = Instant::now();
    let result = solver.run_with(|s, rec| {
        if s.iterations() % every == 0 {
            if let Ok(m) = support_metrics(s.x(), &inst.support_mask, thr) {
                samples.push(sample(s.iterations(), rec.wall_time_s, m));
            }
        }
        last_x.copy_from_slice(s.x());
        trace_so_far.push(rec.clone());
        true
    });
    let (x, trace, stop, iterations, error) = match result {
        Ok(out) => (out.x, out.trace, Some(out.stop), out.iterations, None),
        Err(e) => {
            let n = trace_so_far.len();
            (last_x, trace_so_far, None, n, Some(e))
        }
    };
    let final_support = support_metrics(&x, &inst.support_mask, thr).unwrap_or_else(|_| nan_metrics());
    let last = trace.last();
    let summary = MethodSummary {
        method: "gfb".into(),
        error: error.as_ref().map(ErrorInfo::from),
        stop,
        iterations,
        wall_time_s: last.map_or(start.elapsed().as_secs_f64(), |r| r.wall_time_s),
        final_objective: loss.value(&x),
        final_feasibility: last.map_or(f64::NAN, |r| r.feasibility),
        min_feasibility: min_feasibility(&trace),
        final_support,
        support_samples: samples,
        trace_csv: None,
    };
    (summary, trace, x)
}

/// Runs both methods on the generated instance under equal budgets. Solver
/// failures are recorded in the summary and do not stop the other method.
pub fn run_covariance(cfg: &ExperimentConfig) -> Result<ExperimentRun> {
    cfg.validate()?;
    let inst = cfg.instance()?;
    let (beta1, beta2) = cfg.radii(&inst);
    let (p, loss, sets) = covariance_problem(&inst, beta1, beta2, cfg.psd_l1_diagonal_only, cfg.lanczos, cfg.lambda)?;
    let mut methods = Vec::new();
    let mut traces = Vec::new();
    let mut estimates = Vec::new();
    if cfg.run_fwal {
        let (s, t, x) = run_fwal(cfg, &inst, &p);
        methods.push(s);
        traces.push(("fwal".to_string(), t));
        estimates.push(("fwal".to_string(), x));
    }
    if cfg.run_gfb {
        let (s, t, x) = run_gfb(cfg, &inst, loss, sets);
        methods.push(s);
        traces.push(("gfb".to_string(), t));
        estimates.push(("gfb".to_string(), x));
    }
    Ok(ExperimentRun {
        summary: ExperimentSummary {
            d: inst.d,
            n: inst.n,
            sigma: inst.sigma,
            n_blocks: inst.n_blocks,
            threshold_keep: inst.threshold_keep,
            seed: cfg.seed,
            beta1,
            beta2,
            lambda: cfg.lambda,
            support_size: inst.support_mask.iter().filter(|m| **m).count(),
            time_budget_s: cfg.time_budget_s,
            methods,
        },
        traces,
        estimates,
    })
}

/// Runs the experiment and writes `<method>_trace.csv` files plus
/// `summary.json` into `out_dir`.
pub fn run_covariance_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentSummary> {
    std::fs::create_dir_all(out_dir)?;
    let mut run = run_covariance(cfg)?;
    for ((name, trace), m) in run.traces.iter().zip(run.summary.methods.iter_mut()) {
        let file = format!("{name}_trace.csv");
        write_trace_csv(BufWriter::new(File::create(out_dir.join(&file))?), trace)?;
        m.trace_csv = Some(file);
    }
    let f = BufWriter::new(File::create(out_dir.join("summary.json"))?);
    serde_json::to_writer_pretty(f, &run.summary)?;
    Ok(run.summary)
}
