use serde::{Deserialize, Serialize};

use crate::error::{FwalError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineSearchMode {
    /// Parabola through `φ(0)`, `φ(γ_max/2)`, `φ(γ_max)`; exact for quadratics.
    ExactQuadratic,
    GoldenSection,
}

pub const GOLDEN_TOL: f64 = 1e-10;

/// `argmin_{γ ∈ [0, γ_max]} φ(γ)` for convex `φ`. The result never does
/// worse than `γ = 0`, and boundary minimizers are returned exactly.
pub fn line_search<F>(mut phi: F, gamma_max: f64, mode: LineSearchMode, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    if !(gamma_max > 0.0) || !gamma_max.is_finite() {
        return Err(FwalError::InvalidArgument(format!(
            "line search needs a positive step bound, got {gamma_max}"
        )));
    }
    let mut eval = |g: f64| {
        let v = phi(g);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(FwalError::NonFinite("line search objective"))
        }
    };
    let f0 = eval(0.0)?;
    let fmax = eval(gamma_max)?;
    let (gamma, fg) = match mode {
        LineSearchMode::ExactQuadratic => {
            let h = 0.5 * gamma_max;
            let fmid = eval(h)?;
            let a = (fmax - 2.0 * fmid + f0) / (2.0 * h * h);
            let b = (4.0 * fmid - 3.0 * f0 - fmax) / (2.0 * h);
            let g = quadratic_step(b, 2.0 * a, gamma_max);
            (g, eval(g)?)
        }
        LineSearchMode::GoldenSection => {
            let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
            let (mut lo, mut hi) = (0.0, gamma_max);
            let mut c = hi - inv_phi * (hi - lo);
            let mut d = lo + inv_phi * (hi - lo);
            let mut fc = eval(c)?;
            let mut fd = eval(d)?;
            while hi - lo > tol * gamma_max {
                if fc <= fd {
                    hi = d;
                    d = c;
                    fd = fc;
                    c = hi - inv_phi * (hi - lo);
                    fc = eval(c)?;
                } else {
                    lo = c;
                    c = d;
                    fc = fd;
                    d = lo + inv_phi * (hi - lo);
                    fd = eval(d)?;
                }
            }
            let g = 0.5 * (lo + hi);
            (g, eval(g)?)
        }
    };
    // the endpoints win ties so that drop steps are detected exactly
    if fmax <= fg && fmax <= f0 {
        Ok(gamma_max)
    } else if f0 <= fg {
        Ok(0.0)
    } else {
        Ok(gamma)
    }
}

/// Minimizer over `[0, γ_max]` of `slope·γ + curvature·γ²/2`.
pub fn quadratic_step(slope: f64, curvature: f64, gamma_max: f64) -> f64 {
    if curvature > 0.0 {
        (-slope / curvature).clamp(0.0, gamma_max)
    } else if slope < 0.0 {
        gamma_max
    } else {
        0.0
    }
}
