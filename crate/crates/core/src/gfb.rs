//! Generalized forward-backward splitting over an intersection of sets, the
//! projection-based baseline.
//!
//! Trace rows use the solver's CSV schema: `lagrangian` holds the objective,
//! `fw_gap`, `dual_norm` and `drop_steps_cum` are 0 placeholders, and
//! `feasibility` measures how far apart the per-set projected points are
//! (`‖p₁ − p_k‖` stacked over `k ≥ 2`, the same quantity as `‖Mx‖` for the
//! intersection encoding).

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use web_time::Instant;

use crate::error::{check_len, FwalError, Result};
use crate::linalg::dist_sq;
use crate::oracles::ConstraintSet;
use crate::problem::SmoothObjective;
use crate::solver::{IterateRecord, StopReason};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GfbConfig {
    /// Gradient step; defaults to `1/L`.
    pub gamma: Option<f64>,
    /// Per-set weights; default uniform.
    pub weights: Option<Vec<f64>>,
    pub relaxation: f64,
    pub max_iters: usize,
    /// Stop once `‖x_{t+1} − x_t‖` falls below this.
    pub tol: f64,
    pub time_budget_s: Option<f64>,
    pub record_every: usize,
    /// Abort when the objective grows by this factor over
    /// `divergence_window` iterations; 0 disables the check.
    pub divergence_factor: f64,
    pub divergence_window: usize,
}

impl Default for GfbConfig {
    fn default() -> Self {
        GfbConfig {
            gamma: None,
            weights: None,
            relaxation: 1.0,
            max_iters: 10_000,
            tol: 1e-10,
            time_budget_s: None,
            record_every: 1,
            divergence_factor: 10.0,
            divergence_window: 100,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GfbOutput {
    pub x: Vec<f64>,
    pub trace: Vec<IterateRecord>,
    pub iterations: usize,
    pub stop: StopReason,
}

#[derive(Debug)]
pub struct GfbSolver {
    objective: Arc<dyn SmoothObjective>,
    sets: Vec<Arc<dyn ConstraintSet>>,
    gamma: f64,
    weights: Vec<f64>,
    mu: f64,
    z: Vec<Vec<f64>>,
    x: Vec<f64>,
    t: usize,
    movement: f64,
    obj_window: VecDeque<f64>,
    obj_scale: f64,
    cfg: GfbConfig,
    start: Instant,
}

impl GfbSolver {
    pub fn new(
        objective: Arc<dyn SmoothObjective>,
        sets: Vec<Arc<dyn ConstraintSet>>,
        cfg: &GfbConfig,
        x0: &[f64],
    ) -> Result<Self> {
        let d = objective.dim();
        check_len(d, x0.len(), "starting point")?;
        if sets.is_empty() {
            return Err(FwalError::InvalidArgument(
                "forward-backward needs at least one set".into(),
            ));
        }
        for s in &sets {
            check_len(d, s.dim(), "set dimension")?;
            if !s.has_projection() {
                return Err(FwalError::Unsupported(format!("set {} has no projection", s.name())));
            }
        }
        let k = sets.len();
        let weights = cfg.weights.clone().unwrap_or_else(|| vec![1.0 / k as f64; k]);
        check_len(k, weights.len(), "set weights")?;
        if weights.iter().any(|w| !(*w > 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
            return Err(FwalError::InvalidArgument(
                "weights must be positive and sum to one".into(),
            ));
        }
        let gamma = match cfg.gamma {
            Some(g) => g,
            None => {
                let l = objective
                    .smoothness()
                    .ok_or_else(|| FwalError::InvalidArgument("objective has no smoothness bound; set gamma".into()))?;
                if l > 0.0 {
                    1.0 / l
                } else {
                    1.0
                }
            }
        };
        if !(gamma > 0.0) || objective.smoothness().is_some_and(|l| gamma * l >= 2.0) {
            return Err(FwalError::InvalidArgument(format!(
                "gradient step {gamma} outside (0, 2/L)"
            )));
        }
        if !(cfg.relaxation > 0.0 && cfg.relaxation <= 1.0) {
            return Err(FwalError::InvalidArgument("relaxation must lie in (0, 1]".into()));
        }
        if cfg.max_iters == 0 || cfg.record_every == 0 || cfg.divergence_window == 0 || !(cfg.tol >= 0.0) {
            return Err(FwalError::InvalidArgument("invalid iteration limits".into()));
        }
        let f0 = objective.value(x0);
        Ok(GfbSolver {
            objective,
            z: vec![x0.to_vec(); k],
            x: x0.to_vec(),
            sets,
            gamma,
            weights,
            mu: cfg.relaxation,
            t: 0,
            movement: f64::INFINITY,
            obj_window: VecDeque::new(),
            obj_scale: f0.abs().max(1.0),
            cfg: cfg.clone(),
            start: Instant::now(),
        })
    }

    /// Starts from explicit auxiliary points `z_k`; the iterate is their
    /// weighted mean. Fixed points of the iteration need the right `z_k`,
    /// not just the right mean.
    pub fn with_auxiliary(
        objective: Arc<dyn SmoothObjective>,
        sets: Vec<Arc<dyn ConstraintSet>>,
        cfg: &GfbConfig,
        z0: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let d = objective.dim();
        let mut s = Self::new(objective, sets, cfg, &vec![0.0; d])?;
        check_len(s.sets.len(), z0.len(), "auxiliary points")?;
        let mut x = vec![0.0; d];
        for (z, w) in z0.iter().zip(&s.weights) {
            check_len(d, z.len(), "auxiliary point")?;
            crate::linalg::axpy(*w, z, &mut x);
        }
        s.obj_scale = s.objective.value(&x).abs().max(1.0);
        s.z = z0;
        s.x = x;
        Ok(s)
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn iterations(&self) -> usize {
        self.t
    }
    pub fn movement(&self) -> f64 {
        self.movement
    }
    pub fn reset_clock(&mut self) {
        self.start = Instant::now();
    }

    pub fn step(&mut self) -> Result<IterateRecord> {
        let d = self.x.len();
        let mut grad = vec![0.0; d];
        self.objective.gradient(&self.x, &mut grad);
        let mut projected = Vec::with_capacity(self.sets.len());
        let mut next = vec![0.0; d];
        for ((z, set), w) in self.z.iter_mut().zip(&self.sets).zip(&self.weights) {
            let arg: Vec<f64> = (0..d).map(|i| 2.0 * self.x[i] - z[i] - self.gamma * grad[i]).collect();
            let p = set.project(&arg)?;
            for i in 0..d {
                z[i] += self.mu * (p[i] - self.x[i]);
                next[i] += w * z[i];
            }
            projected.push(p);
        }
        if !crate::linalg::all_finite(&next) {
            return Err(FwalError::NonFinite("forward-backward iterate"));
        }
        let feasibility = projected[1..]
            .iter()
            .map(|p| dist_sq(&projected[0], p))
            .sum::<f64>()
            .sqrt();
        self.movement = dist_sq(&next, &self.x).sqrt();
        self.x = next;
        self.t += 1;
        let objective = self.objective.value(&self.x);
        self.check_divergence(objective)?;
        Ok(IterateRecord {
            t: self.t,
            wall_time_s: self.start.elapsed().as_secs_f64(),
            lagrangian: objective,
            fw_gap: 0.0,
            feasibility,
            dual_norm: 0.0,
            objective,
            drop_steps_cum: 0,
            primal_gap_bound: None,
            dual_value_estimate: None,
        })
    }

    fn check_divergence(&mut self, objective: f64) -> Result<()> {
        if !objective.is_finite() {
            return Err(FwalError::NonFinite("forward-backward objective"));
        }
        if self.cfg.divergence_factor == 0.0 {
            return Ok(());
        }
        let w = self.cfg.divergence_window;
        self.obj_window.push_back(objective);
        if self.obj_window.len() > w + 1 {
            self.obj_window.pop_front();
        }
        let floor = 1e-6 * self.obj_scale;
        if self.obj_window.len() == w + 1 {
            let old = self.obj_window[0];
            if objective > self.cfg.divergence_factor * old.abs().max(floor) {
                return Err(FwalError::Divergence {
                    iteration: self.t,
                    message: format!(
                        "objective grew from {old:.3e} to {objective:.3e} in {w} iterations; reduce gamma (currently {})",
                        self.gamma
                    ),
                });
            }
        }
        Ok(())
    }

    pub fn run(self) -> Result<GfbOutput> {
        self.run_with(|_, _| true)
    }

    /// Like [`GfbSolver::run`], with an observer that sees every iteration
    /// and may stop the run by returning `false`.
    pub fn run_with<F>(mut self, mut observe: F) -> Result<GfbOutput>
    where
        F: FnMut(&GfbSolver, &IterateRecord) -> bool,
    {
        let mut trace = Vec::new();
        let stop = loop {
            let rec = self.step()?;
            let done = self.movement <= self.cfg.tol;
            let out_of_time = self.cfg.time_budget_s.is_some_and(|b| rec.wall_time_s >= b);
            let out_of_iters = self.t >= self.cfg.max_iters;
            let keep_going = observe(&self, &rec);
            let last = done || out_of_time || out_of_iters || !keep_going;
            if last || self.t.is_multiple_of(self.cfg.record_every) {
                trace.push(rec);
            }
            if done {
                break StopReason::Converged;
            }
            if out_of_time {
                break StopReason::TimeBudget;
            }
            if last {
                break StopReason::MaxIterations;
            }
        };
        Ok(GfbOutput {
            x: self.x,
            trace,
            iterations: self.t,
            stop,
        })
    }
}

/// Minimizes `f` over `∩ 𝒳_k` starting from `x0`.
pub fn gfb_solve(
    objective: Arc<dyn SmoothObjective>,
    sets: Vec<Arc<dyn ConstraintSet>>,
    cfg: &GfbConfig,
    x0: &[f64],
) -> Result<GfbOutput> {
    GfbSolver::new(objective, sets, cfg, x0)?.run()
}

/// Largest eigenvalue estimate of a symmetric linear map, for step sizes.
pub fn estimate_smoothness<F: Fn(&[f64], &mut [f64])>(apply: F, dim: usize, seed: u64) -> f64 {
    crate::linalg::power_iteration(apply, dim, 200, seed)
}
