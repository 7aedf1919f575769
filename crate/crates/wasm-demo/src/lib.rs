//! Browser bindings. Every export takes and returns a JSON string; the
//! `run_*` functions hold the logic and are callable natively.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use fwal::experiments::{
    bench_lmo_vs_projection, loglog_slope, run_covariance, BenchRow, ExperimentConfig, ExperimentSummary,
};
use fwal::oracles::{ConstraintSet, L1Ball, VertexPolytope};
use fwal::problem::{SplitProblem, SquaredDistance};
use fwal::solver::{FwalSolver, InnerMethod, SolverConfig, StepSizeSchedule};
use fwal::{FwalError, Result};

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntersectionRequest {
    pub target: [f64; 2],
    pub l1_radius: f64,
    pub polygon: Vec<[f64; 2]>,
    pub lambda: f64,
    pub schedule: StepSizeSchedule,
    pub inner: InnerMethod,
    pub iterations: usize,
}

impl Default for IntersectionRequest {
    fn default() -> Self {
        IntersectionRequest {
            target: [1.5, 1.2],
            l1_radius: 1.0,
            polygon: vec![[-0.2, -0.6], [1.4, 0.1], [0.1, 1.3]],
            lambda: 1.0,
            schedule: StepSizeSchedule::Constant { eta0: 0.1 },
            inner: InnerMethod::Afw,
            iterations: 300,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IntersectionResponse {
    /// Per block, the iterate after each outer iteration (starting point first).
    pub paths: [Vec<[f64; 2]>; 2],
    pub feasibility: Vec<f64>,
    pub objective: Vec<f64>,
    pub fw_gap: Vec<f64>,
    pub drop_steps: usize,
    pub active_atoms: Option<usize>,
}

/// Closest point to `target` in the intersection of an ℓ1 ball and a
/// polygon, solved by FW-AL with one copy of the point per set.
pub fn run_intersection(req: &IntersectionRequest) -> Result<IntersectionResponse> {
    if req.iterations == 0 || req.iterations > 100_000 {
        return Err(FwalError::InvalidArgument("iterations must be in 1..=100000".into()));
    }
    let polygon = VertexPolytope::new(req.polygon.iter().map(|v| v.to_vec()).collect())?;
    let sets: Vec<Arc<dyn ConstraintSet>> = vec![
        Arc::new(L1Ball {
            dim: 2,
            radius: req.l1_radius,
        }),
        Arc::new(polygon),
    ];
    let loss = Arc::new(SquaredDistance::new(req.target.to_vec()));
    let p = SplitProblem::intersection(loss, sets, req.lambda)?;
    let cfg = SolverConfig {
        schedule: Some(req.schedule),
        inner: Some(req.inner),
        max_outer_iters: req.iterations,
        ..SolverConfig::default()
    };
    let mut solver = FwalSolver::new(&p, &cfg)?;
    let point = |x: &[f64], k: usize| [x[2 * k], x[2 * k + 1]];
    let mut paths = [
        vec![point(solver.x().as_slice(), 0)],
        vec![point(solver.x().as_slice(), 1)],
    ];
    let (mut feasibility, mut objective, mut fw_gap) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..req.iterations {
        let info = solver.step()?;
        for (k, path) in paths.iter_mut().enumerate() {
            path.push(point(solver.x().as_slice(), k));
        }
        feasibility.push(info.record.feasibility);
        objective.push(info.record.objective);
        fw_gap.push(info.record.fw_gap);
    }
    Ok(IntersectionResponse {
        paths,
        feasibility,
        objective,
        fw_gap,
        drop_steps: solver.drop_steps(),
        active_atoms: solver.active().map(|a| a.len()),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CovarianceResponse {
    pub summary: ExperimentSummary,
    pub truth: Vec<f64>,
    pub support: Vec<bool>,
    pub empirical: Vec<f64>,
    /// Final estimates per method, row-major.
    pub estimates: Vec<(String, Vec<f64>)>,
    /// `(t, feasibility)` per method.
    pub feasibility: Vec<(String, Vec<(usize, f64)>)>,
}

/// A small covariance experiment; the config uses the CLI's schema.
pub fn run_covariance_demo(cfg: &ExperimentConfig) -> Result<CovarianceResponse> {
    if cfg.d > 80 {
        return Err(FwalError::InvalidArgument("the demo is limited to d ≤ 80".into()));
    }
    let inst = cfg.instance()?;
    let run = run_covariance(cfg)?;
    Ok(CovarianceResponse {
        summary: run.summary,
        truth: inst.true_cov.into_vec(),
        support: inst.support_mask,
        empirical: inst.empirical.into_vec(),
        estimates: run.estimates,
        feasibility: run
            .traces
            .into_iter()
            .map(|(name, trace)| (name, trace.iter().map(|r| (r.t, r.feasibility)).collect()))
            .collect(),
    })
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchRequest {
    pub dims: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
}

impl Default for BenchRequest {
    fn default() -> Self {
        BenchRequest {
            dims: vec![25, 50, 100],
            trials: 3,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchResponse {
    pub rows: Vec<BenchRow>,
    pub lmo_slope: f64,
    pub proj_slope: f64,
}

/// Oracle vs projection timings on the trace ball.
pub fn run_bench(req: &BenchRequest) -> Result<BenchResponse> {
    if req.dims.iter().any(|d| *d > 300) {
        return Err(FwalError::InvalidArgument(
            "the demo is limited to dimensions ≤ 300".into(),
        ));
    }
    let rows = bench_lmo_vs_projection(&req.dims, req.trials, req.seed)?;
    let (lmo_slope, proj_slope) = if rows.len() >= 2 {
        (loglog_slope(&rows, |r| r.lmo_ms)?, loglog_slope(&rows, |r| r.proj_ms)?)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(BenchResponse {
        rows,
        lmo_slope,
        proj_slope,
    })
}

fn call<Req, Resp>(json: &str, f: impl FnOnce(&Req) -> Result<Resp>) -> std::result::Result<String, JsError>
where
    Req: for<'de> Deserialize<'de>,
    Resp: Serialize,
{
    let req: Req = serde_json::from_str(json).map_err(|e| JsError::new(&format!("bad request: {e}")))?;
    let resp = f(&req).map_err(|e| JsError::new(&format!("{}: {e}", e.kind())))?;
    serde_json::to_string(&resp).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn intersection(request: &str) -> std::result::Result<String, JsError> {
    call(request, run_intersection)
}

#[wasm_bindgen]
pub fn covariance(request: &str) -> std::result::Result<String, JsError> {
    call(request, run_covariance_demo)
}

#[wasm_bindgen]
pub fn bench(request: &str) -> std::result::Result<String, JsError> {
    call(request, run_bench)
}
