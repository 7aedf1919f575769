//! Inner-loop steps on `𝓛(·, y)` for a fixed dual variable.

mod active_set;
mod line_search;
mod steps;

pub use active_set::ActiveSet;
pub use line_search::{line_search, quadratic_step, LineSearchMode, GOLDEN_TOL};
pub use steps::{
    afw_nondrop_step, drop_cap, fw_duality_gap, fw_step, fw_step_with_atom, reconstruction_error, StepKind, StepReport,
};

#[cfg(test)]
mod tests;
