//! The augmented-Lagrangian Frank-Wolfe outer loop.

mod schedule;
mod trace;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use web_time::Instant;

use crate::error::{FwalError, Result};
use crate::inner::{afw_nondrop_step, drop_cap, fw_step, ActiveSet, StepReport};
use crate::linalg::{dot, norm, norm_sq};
use crate::problem::{BlockVector, SplitProblem};

pub use schedule::StepSizeSchedule;
pub use trace::{
    fit_rate, least_squares, rate_fit, read_trace_csv, write_trace_csv, IterateRecord, LineFit, RateFit, RateModel,
    TraceField, RATE_FLOOR, TRACE_HEADER,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerMethod {
    Fw,
    Afw,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Overrides the problem's penalty when set.
    pub lambda: Option<f64>,
    /// Defaults to a constant `λ/10`.
    pub schedule: Option<StepSizeSchedule>,
    /// Defaults to away steps when every block set is a polytope.
    pub inner: Option<InnerMethod>,
    pub max_outer_iters: usize,
    pub time_budget_s: Option<f64>,
    pub stop_feasibility_tol: f64,
    pub stop_gap_tol: f64,
    /// Trace cadence.
    pub record_every: usize,
    /// Cadence of the expensive dual-value estimate (when enabled).
    pub diagnostics_every: usize,
    pub dual_value_estimate: bool,
    pub inner_certificate_tol: f64,
    /// Abort when feasibility grows by this factor over `divergence_window`
    /// iterations; 0 disables the check.
    pub divergence_factor: f64,
    pub divergence_window: usize,
    /// Seeds the randomized parts of a solve (trace-ball Lanczos starts in
    /// problem files); the iteration itself is deterministic.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            lambda: None,
            schedule: None,
            inner: None,
            max_outer_iters: 10_000,
            time_budget_s: None,
            stop_feasibility_tol: 1e-6,
            stop_gap_tol: 1e-6,
            record_every: 1,
            diagnostics_every: 100,
            dual_value_estimate: false,
            inner_certificate_tol: 1e-6,
            divergence_factor: 10.0,
            divergence_window: 100,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(FwalError::InvalidArgument(m.to_string()));
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return bad("lambda must be positive");
            }
        }
        if let Some(s) = &self.schedule {
            s.validate()?;
        }
        if self.max_outer_iters == 0 {
            return bad("max_outer_iters must be at least 1");
        }
        if let Some(b) = self.time_budget_s {
            if !(b > 0.0) {
                return bad("time budget must be positive");
            }
        }
        if !(self.stop_feasibility_tol > 0.0 && self.stop_gap_tol > 0.0 && self.inner_certificate_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.record_every == 0 || self.diagnostics_every == 0 || self.divergence_window == 0 {
            return bad("cadences must be at least 1");
        }
        if self.divergence_factor < 0.0 {
            return bad("divergence factor must be non-negative");
        }
        Ok(())
    }

    /// The schedule actually used for penalty `lambda`.
    pub fn resolved_schedule(&self, lambda: f64) -> StepSizeSchedule {
        self.schedule
            .unwrap_or(StepSizeSchedule::Constant { eta0: lambda / 10.0 })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIterations,
    TimeBudget,
}

#[derive(Clone, Debug)]
pub struct SolveOutput {
    pub x: BlockVector,
    pub y: Vec<f64>,
    pub trace: Vec<IterateRecord>,
    pub iterations: usize,
    pub drop_steps: usize,
    pub stop: StopReason,
    pub active: Option<ActiveSet>,
}

/// A failed solve, with the last valid state.
#[derive(Debug, thiserror::Error)]
#[error("{error}")]
pub struct SolveError {
    pub error: FwalError,
    pub partial: Box<SolveOutput>,
}

/// Drops the partial state, so `?` works in functions returning [`Result`].
impl From<SolveError> for FwalError {
    fn from(e: SolveError) -> Self {
        e.error
    }
}

/// Diagnostics for the most recent outer iteration.
#[derive(Clone, Debug)]
pub struct StepInfo {
    pub report: StepReport,
    pub eta: f64,
    pub record: IterateRecord,
}

/// Step-by-step driver. Each [`FwalSolver::step`] performs one inner step on
/// `𝓛(·, y_t)` followed by the dual update `y_{t+1} = y_t + η_t M x_{t+1}`.
#[derive(Debug)]
pub struct FwalSolver {
    p: SplitProblem,
    cfg: SolverConfig,
    schedule: StepSizeSchedule,
    inner: InnerMethod,
    x: BlockVector,
    y: Vec<f64>,
    active: Option<ActiveSet>,
    t: usize,
    drops: usize,
    feas_window: VecDeque<f64>,
    feas_peak: f64,
    start: Instant,
}

impl FwalSolver {
    pub fn new(p: &SplitProblem, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let p = match cfg.lambda {
            Some(l) => p.with_lambda(l)?,
            None => p.clone(),
        };
        let inner = match cfg.inner {
            Some(InnerMethod::Afw) if !p.all_polytopes() => {
                return Err(FwalError::Unsupported(
                    "away steps need every block set to be a polytope".into(),
                ))
            }
            Some(m) => m,
            None if p.all_polytopes() => InnerMethod::Afw,
            None => InnerMethod::Fw,
        };
        let schedule = cfg.resolved_schedule(p.lambda());
        schedule.validate()?;
        let (x, atoms) = p.initial_vertex()?;
        let active = (inner == InnerMethod::Afw).then(|| ActiveSet::singleton(atoms));
        let y = vec![0.0; p.dual_dim()];
        Ok(FwalSolver {
            p,
            cfg: cfg.clone(),
            schedule,
            inner,
            x,
            y,
            active,
            t: 0,
            drops: 0,
            feas_window: VecDeque::new(),
            feas_peak: 0.0,
            start: Instant::now(),
        })
    }

    pub fn problem(&self) -> &SplitProblem {
        &self.p
    }
    pub fn x(&self) -> &BlockVector {
        &self.x
    }
    pub fn y(&self) -> &[f64] {
        &self.y
    }
    pub fn active(&self) -> Option<&ActiveSet> {
        self.active.as_ref()
    }
    pub fn iterations(&self) -> usize {
        self.t
    }
    pub fn drop_steps(&self) -> usize {
        self.drops
    }
    pub fn inner_method(&self) -> InnerMethod {
        self.inner
    }
    pub fn schedule(&self) -> StepSizeSchedule {
        self.schedule
    }
    pub fn elapsed_s(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    /// Restarts the wall clock used in records and the time budget.
    pub fn reset_clock(&mut self) {
        self.start = Instant::now();
    }

    pub fn step(&mut self) -> Result<StepInfo> {
        let (x_next, active, report) = match self.inner {
            InnerMethod::Fw => {
                let (x, r) = fw_step(&self.p, &self.x, &self.y)?;
                (x, None, r)
            }
            InnerMethod::Afw => {
                let active = self
                    .active
                    .as_ref()
                    .ok_or_else(|| FwalError::Invariant("away steps without an active set".into()))?;
                let (x, a, r) = afw_nondrop_step(&self.p, &self.x, active, &self.y, drop_cap(self.t))?;
                (x, Some(a), r)
            }
        };
        let mx = self.p.operator().apply_vec(x_next.as_slice());
        let feasibility = norm(&mx);
        let eta = self.schedule.eta(self.t);
        let objective = self.p.objective().value(x_next.as_slice());
        let lagrangian = objective + dot(&self.y, &mx) + 0.5 * self.p.lambda() * norm_sq(&mx);
        if !(lagrangian.is_finite() && feasibility.is_finite()) {
            return Err(FwalError::NonFinite("iterate"));
        }
        let dual_norm = norm(&self.y);
        let mut y_next = self.y.clone();
        crate::linalg::axpy(eta, &mx, &mut y_next);

        self.check_divergence(feasibility)?;
        self.x = x_next;
        if active.is_some() {
            self.active = active;
        }
        self.y = y_next;
        self.t += 1;
        self.drops += report.drop_steps_taken;

        let mut record = IterateRecord {
            t: self.t,
            wall_time_s: self.elapsed_s(),
            lagrangian,
            fw_gap: report.fw_gap,
            feasibility,
            dual_norm,
            objective,
            drop_steps_cum: self.drops,
            primal_gap_bound: Some(report.fw_gap),
            dual_value_estimate: None,
        };
        if self.cfg.dual_value_estimate && self.t.is_multiple_of(self.cfg.diagnostics_every) {
            let est = estimate_inner_solution(&self.p, &self.y, self.cfg.inner_certificate_tol, 10_000)?;
            record.dual_value_estimate = Some(self.p.lagrangian_value(&est.x, &self.y)? - est.certificate);
        }
        Ok(StepInfo { report, eta, record })
    }

    fn check_divergence(&mut self, feasibility: f64) -> Result<()> {
        if self.cfg.divergence_factor == 0.0 {
            return Ok(());
        }
        let w = self.cfg.divergence_window;
        self.feas_window.push_back(feasibility);
        if self.feas_window.len() > w + 1 {
            self.feas_window.pop_front();
        }
        self.feas_peak = self.feas_peak.max(feasibility);
        // the floor keeps round-off level noise from counting as growth
        let floor = 1e-6 * self.feas_peak.max(1.0);
        if self.t >= 2 * w && self.feas_window.len() == w + 1 {
            let old = self.feas_window[0];
            if feasibility > self.cfg.divergence_factor * old.max(floor) {
                return Err(FwalError::Divergence {
                    iteration: self.t + 1,
                    message: format!(
                        "feasibility grew from {old:.3e} to {feasibility:.3e} in {w} iterations; \
                         reduce the dual step size eta0 (currently {})",
                        self.schedule.eta0()
                    ),
                });
            }
        }
        Ok(())
    }

    fn snapshot(&self, trace: Vec<IterateRecord>, stop: StopReason) -> SolveOutput {
        SolveOutput {
            x: self.x.clone(),
            y: self.y.clone(),
            trace,
            iterations: self.t,
            drop_steps: self.drops,
            stop,
            active: self.active.clone(),
        }
    }

    /// Runs until the stopping test or a budget triggers. `observe` sees every
    /// outer iteration and may stop the run early by returning `false`.
    pub fn run<F>(mut self, mut observe: F) -> std::result::Result<SolveOutput, SolveError>
    where
        F: FnMut(&FwalSolver, &StepInfo) -> bool,
    {
        let mut trace = Vec::new();
        let stop = loop {
            let info = match self.step() {
                Ok(i) => i,
                Err(error) => {
                    return Err(SolveError {
                        error,
                        partial: Box::new(self.snapshot(trace, StopReason::MaxIterations)),
                    })
                }
            };
            let converged =
                info.record.feasibility <= self.cfg.stop_feasibility_tol && info.record.fw_gap <= self.cfg.stop_gap_tol;
            let out_of_iters = self.t >= self.cfg.max_outer_iters;
            let out_of_time = self.cfg.time_budget_s.is_some_and(|b| info.record.wall_time_s >= b);
            let keep_going = observe(&self, &info);
            let last = converged || out_of_iters || out_of_time || !keep_going;
            if last || self.t.is_multiple_of(self.cfg.record_every) {
                trace.push(info.record);
            }
            if converged {
                break StopReason::Converged;
            }
            if out_of_time {
                break StopReason::TimeBudget;
            }
            if last {
                break StopReason::MaxIterations;
            }
        };
        Ok(self.snapshot(trace, stop))
    }
}

/// Solves `min f(x) s.t. x ∈ 𝒳, Mx = 0` from the deterministic starting vertex.
pub fn fwal_solve(p: &SplitProblem, cfg: &SolverConfig) -> std::result::Result<SolveOutput, SolveError> {
    let solver = FwalSolver::new(p, cfg).map_err(|error| SolveError {
        error,
        partial: Box::new(SolveOutput {
            x: BlockVector::zeros(p.block_dims()),
            y: vec![0.0; p.dual_dim()],
            trace: Vec::new(),
            iterations: 0,
            drop_steps: 0,
            stop: StopReason::MaxIterations,
            active: None,
        }),
    })?;
    solver.run(|_, _| true)
}

#[derive(Clone, Debug)]
pub struct InnerEstimate {
    pub x: BlockVector,
    /// Final Frank-Wolfe gap; bounds `𝓛(x̂, y) − d(y)`.
    pub certificate: f64,
    pub steps: usize,
    pub converged: bool,
}

/// Approximates `argmin_{x ∈ 𝒳} 𝓛(x, y)` by running inner steps (away steps
/// on polytopes) until the gap drops below `tol` or `max_steps` is reached.
pub fn estimate_inner_solution(p: &SplitProblem, y: &[f64], tol: f64, max_steps: usize) -> Result<InnerEstimate> {
    if !(tol > 0.0) {
        return Err(FwalError::InvalidArgument(
            "certificate tolerance must be positive".into(),
        ));
    }
    let (mut x, atoms) = p.initial_vertex()?;
    let mut active = p.all_polytopes().then(|| ActiveSet::singleton(atoms));
    let mut steps = 0;
    loop {
        let (nx, report) = match &active {
            Some(a) => {
                let (nx, na, r) = afw_nondrop_step(p, &x, a, y, drop_cap(steps))?;
                active = Some(na);
                (nx, r)
            }
            None => fw_step(p, &x, y)?,
        };
        // the report's gap certifies the point the step started from
        if report.fw_gap <= tol {
            return Ok(InnerEstimate {
                x,
                certificate: report.fw_gap,
                steps,
                converged: true,
            });
        }
        x = nx;
        steps += 1;
        if steps >= max_steps {
            let certificate = crate::inner::fw_duality_gap(p, &x, y)?;
            return Ok(InnerEstimate {
                x,
                certificate,
                steps,
                converged: certificate <= tol,
            });
        }
    }
}
