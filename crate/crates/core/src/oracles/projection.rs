//! Euclidean projections, used by the forward-backward baseline.

use crate::error::{FwalError, Result};
use crate::linalg::{jacobi_eig, SymMatrix};

/// Eigensolver tolerance used by the trace-ball projection.
pub const PROJECTION_EIG_TOL: f64 = 1e-13;

/// Threshold `θ ≥ 0` such that `Σ max(v_i − θ, 0) = total`, assuming the
/// nonnegative entries of `v` sum to more than `total`.
fn simplex_threshold(v: &[f64], total: f64) -> f64 {
    let mut sorted: Vec<f64> = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - total) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    theta
}

/// Projection onto `{z : ‖z‖₁ ≤ β}` by sort-and-threshold soft shrinkage.
pub fn project_l1_ball(x: &[f64], beta: f64) -> Result<Vec<f64>> {
    check_radius(beta)?;
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    if l1 <= beta {
        return Ok(x.to_vec());
    }
    let abs: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let theta = simplex_threshold(&abs, beta);
    Ok(x.iter().map(|v| v.signum() * (v.abs() - theta).max(0.0)).collect())
}

/// Projection onto the probability simplex `{z ≥ 0, Σz = 1}`.
pub fn project_simplex(x: &[f64]) -> Vec<f64> {
    let theta = simplex_threshold_signed(x, 1.0);
    x.iter().map(|v| (v - theta).max(0.0)).collect()
}

/// Projection onto `{z ≥ 0, Σz ≤ β}`.
pub fn project_capped_simplex(x: &[f64], beta: f64) -> Result<Vec<f64>> {
    check_radius(beta)?;
    let clamped: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    if clamped.iter().sum::<f64>() <= beta {
        return Ok(clamped);
    }
    let theta = simplex_threshold(&clamped, beta);
    Ok(clamped.iter().map(|v| (v - theta).max(0.0)).collect())
}

// like simplex_threshold but θ may be negative (sum of positives below total)
fn simplex_threshold_signed(v: &[f64], total: f64) -> f64 {
    let mut sorted: Vec<f64> = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = sorted[0] - total;
    for (j, u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - total) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    theta
}

/// Projection onto `{S ⪰ 0, tr S ≤ β₂}`: eigendecompose, clamp the spectrum
/// at zero, project it onto the ℓ1 ball of radius β₂ and reassemble.
pub fn project_trace_ball_psd(s: &SymMatrix, beta2: f64) -> Result<SymMatrix> {
    check_radius(beta2)?;
    let eig = jacobi_eig(s, PROJECTION_EIG_TOL)?;
    let values = project_capped_simplex(&eig.eigenvalues, beta2)?;
    Ok(eig.reassemble(&values))
}

fn check_radius(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(FwalError::InvalidArgument(format!(
            "radius must be positive, got {beta}"
        )))
    }
}
