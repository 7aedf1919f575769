use serde::{Deserialize, Serialize};

use super::active_set::ActiveSet;
use super::line_search::{line_search, quadratic_step, LineSearchMode, GOLDEN_TOL};
use crate::error::{FwalError, Result};
use crate::linalg::{dist_sq, dot, norm_sq};
use crate::oracles::Atom;
use crate::problem::{BlockVector, SplitProblem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Fw,
    Away,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub kind: StepKind,
    pub gamma: f64,
    pub gamma_max: f64,
    pub drop_steps_taken: usize,
    /// Frank-Wolfe gap at the input point.
    pub fw_gap: f64,
    /// Away gap at the input point (0 for plain FW steps).
    pub away_gap: f64,
    /// 𝓛(x, y) at the input point.
    pub lagrangian_before: f64,
}

/// Per-call cap on consecutive drop steps inside one away-step call at outer
/// iteration `t`. Exceeding it means the bookkeeping is broken.
pub fn drop_cap(t: usize) -> usize {
    10 * (t + 2)
}

/// Step size along `d` on `[0, γ_max]`: closed form when 𝓛 is quadratic in
/// `γ`, golden section otherwise.
fn step_size(p: &SplitProblem, x: &[f64], d: &[f64], y: &[f64], slope: f64, gamma_max: f64) -> Result<f64> {
    if slope >= 0.0 {
        return Ok(0.0);
    }
    if let Some(curv) = p.curvature_along(d) {
        if !curv.is_finite() {
            return Err(FwalError::NonFinite("line search curvature"));
        }
        return Ok(quadratic_step(slope, curv, gamma_max));
    }
    let mut buf = vec![0.0; x.len()];
    line_search(
        |g| {
            for ((b, xi), di) in buf.iter_mut().zip(x).zip(d) {
                *b = xi + g * di;
            }
            p.value_unchecked(&buf, y)
        },
        gamma_max,
        LineSearchMode::GoldenSection,
        GOLDEN_TOL,
    )
}

fn check_dual(p: &SplitProblem, x: &BlockVector, y: &[f64]) -> Result<()> {
    crate::error::check_len(p.block_dims().iter().sum(), x.len(), "iterate")?;
    crate::error::check_len(p.dual_dim(), y.len(), "dual variable")
}

/// One Frank-Wolfe step with line search on `𝓛(·, y)`. Also returns the
/// oracle output so callers can keep their own bookkeeping.
pub fn fw_step_with_atom(p: &SplitProblem, x: &BlockVector, y: &[f64]) -> Result<(BlockVector, StepReport, Vec<Atom>)> {
    check_dual(p, x, y)?;
    let xs = x.as_slice();
    let e = p.evaluate_unchecked(xs, y);
    let atoms = p.lmo(&e.grad)?;
    let mut d = p.densify(&atoms);
    for (di, xi) in d.iter_mut().zip(xs) {
        *di -= xi;
    }
    let slope = dot(&e.grad, &d);
    let gap = (-slope).max(0.0);
    let gamma = step_size(p, xs, &d, y, slope, 1.0)?;
    let mut next = xs.to_vec();
    if gamma >= 1.0 {
        next = p.densify(&atoms);
    } else if gamma > 0.0 {
        crate::linalg::axpy(gamma, &d, &mut next);
    }
    let report = StepReport {
        kind: StepKind::Fw,
        gamma,
        gamma_max: 1.0,
        drop_steps_taken: 0,
        fw_gap: gap,
        away_gap: 0.0,
        lagrangian_before: e.value,
    };
    Ok((x.with_data(next)?, report, atoms))
}

pub fn fw_step(p: &SplitProblem, x: &BlockVector, y: &[f64]) -> Result<(BlockVector, StepReport)> {
    fw_step_with_atom(p, x, y).map(|(x, r, _)| (x, r))
}

/// Away-step Frank-Wolfe: takes drop steps until one non-drop step has been
/// executed. `max_drops` bounds the drop steps of this call (see [`drop_cap`]).
pub fn afw_nondrop_step(
    p: &SplitProblem,
    x: &BlockVector,
    active: &ActiveSet,
    y: &[f64],
    max_drops: usize,
) -> Result<(BlockVector, ActiveSet, StepReport)> {
    check_dual(p, x, y)?;
    if !p.all_polytopes() {
        return Err(FwalError::Unsupported(
            "away steps need every block set to be a polytope".into(),
        ));
    }
    let scale = 1.0 + norm_sq(x.as_slice()).sqrt();
    active.check(p, x.as_slice(), 1e-8 * scale)?;
    let mut active = active.clone();
    let mut cur = active.reconstruct(p);
    let mut drops = 0;
    let mut first: Option<(f64, f64, f64)> = None;
    loop {
        let e = p.evaluate_unchecked(&cur, y);
        let s = p.lmo(&e.grad)?;
        let gx = dot(&e.grad, &cur);
        let g_fw = gx - p.atoms_dot(&s, &e.grad);
        let (away_idx, g_away) = if active.len() < 2 {
            (None, 0.0)
        } else {
            let (i, best) = active
                .atoms()
                .iter()
                .enumerate()
                .map(|(i, a)| (i, p.atoms_dot(a, &e.grad)))
                .fold((0, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc });
            (Some(i), best - gx)
        };
        let (gap_fw, gap_a, l0) = *first.get_or_insert((g_fw.max(0.0), g_away.max(0.0), e.value));

        let take_away = away_idx.is_some() && g_away > g_fw;
        if !take_away {
            let mut d = p.densify(&s);
            for (di, xi) in d.iter_mut().zip(&cur) {
                *di -= xi;
            }
            let gamma = step_size(p, &cur, &d, y, -g_fw, 1.0)?;
            active.apply_fw(s, gamma);
            let report = StepReport {
                kind: StepKind::Fw,
                gamma,
                gamma_max: 1.0,
                drop_steps_taken: drops,
                fw_gap: gap_fw,
                away_gap: gap_a,
                lagrangian_before: l0,
            };
            return Ok((x.with_data(active.reconstruct(p))?, active, report));
        }

        let v = away_idx.unwrap();
        let alpha = active.weights()[v];
        let gamma_max = alpha / (1.0 - alpha);
        let mut d = cur.clone();
        p.add_atoms(&active.atoms()[v], -1.0, &mut d);
        let gamma = step_size(p, &cur, &d, y, -g_away, gamma_max)?;
        let is_drop = gamma >= gamma_max;
        active.apply_away(v, gamma, is_drop);
        cur = active.reconstruct(p);
        if !is_drop {
            let report = StepReport {
                kind: StepKind::Away,
                gamma,
                gamma_max,
                drop_steps_taken: drops,
                fw_gap: gap_fw,
                away_gap: gap_a,
                lagrangian_before: l0,
            };
            return Ok((x.with_data(cur)?, active, report));
        }
        drops += 1;
        if drops > max_drops {
            return Err(FwalError::Invariant(format!(
                "{drops} drop steps in one away-step call (cap {max_drops})"
            )));
        }
    }
}

/// `⟨∇𝓛(x,y), x − s⟩` with `s` the blockwise oracle output.
pub fn fw_duality_gap(p: &SplitProblem, x: &BlockVector, y: &[f64]) -> Result<f64> {
    check_dual(p, x, y)?;
    let e = p.evaluate_unchecked(x.as_slice(), y);
    let s = p.lmo(&e.grad)?;
    Ok(dot(&e.grad, x.as_slice()) - p.atoms_dot(&s, &e.grad))
}

/// Distance between an iterate and its active-set expansion.
pub fn reconstruction_error(p: &SplitProblem, x: &BlockVector, active: &ActiveSet) -> f64 {
    dist_sq(&active.reconstruct(p), x.as_slice()).sqrt()
}
