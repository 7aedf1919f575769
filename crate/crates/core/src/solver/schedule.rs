use serde::{Deserialize, Serialize};

use crate::error::{FwalError, Result};

/// Dual step sizes `η_t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StepSizeSchedule {
    Constant {
        eta0: f64,
    },
    /// `2η₀/(t+2)`
    Harmonic {
        eta0: f64,
    },
    /// Constant for `warm_iters` steps, then harmonic with the clock reset.
    Warm {
        eta0: f64,
        warm_iters: usize,
    },
}

impl StepSizeSchedule {
    pub fn eta(&self, t: usize) -> f64 {
        match *self {
            StepSizeSchedule::Constant { eta0 } => eta0,
            StepSizeSchedule::Harmonic { eta0 } => 2.0 * eta0 / (t as f64 + 2.0),
            StepSizeSchedule::Warm { eta0, warm_iters } => {
                if t < warm_iters {
                    eta0
                } else {
                    2.0 * eta0 / ((t - warm_iters) as f64 + 2.0)
                }
            }
        }
    }

    pub fn eta0(&self) -> f64 {
        match *self {
            StepSizeSchedule::Constant { eta0 }
            | StepSizeSchedule::Harmonic { eta0 }
            | StepSizeSchedule::Warm { eta0, .. } => eta0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let e = self.eta0();
        if e > 0.0 && e.is_finite() {
            Ok(())
        } else {
            Err(FwalError::InvalidArgument(format!(
                "step size must be positive, got {e}"
            )))
        }
    }
}
