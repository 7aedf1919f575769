//! Frank-Wolfe augmented Lagrangian splitting: one copy of the variable per
//! set, each touched only through its linear minimization oracle.
//!
//! ```
//! # fn main() -> fwal::Result<()> {
//! use std::sync::Arc;
//! use fwal::oracles::{ConstraintSet, L1Ball, Simplex};
//! use fwal::problem::{SplitProblem, SquaredDistance};
//! use fwal::solver::{fwal_solve, SolverConfig};
//!
//! let sets: Vec<Arc<dyn ConstraintSet>> = vec![
//!     Arc::new(Simplex { dim: 3 }),
//!     Arc::new(L1Ball { dim: 3, radius: 1.0 }),
//! ];
//! let loss = Arc::new(SquaredDistance::new(vec![1.0, 0.5, -0.2]));
//! let p = SplitProblem::intersection(loss, sets, 1.0)?;
//! let out = fwal_solve(&p, &SolverConfig::default())?;
//! println!("{:?} after {} iterations", out.stop, out.iterations);
//! # Ok(())
//! # }
//! ```

pub mod error;
pub mod linalg;

pub use error::{FwalError, Result};
pub mod experiments;
pub mod gfb;
pub mod inner;
pub mod oracles;
pub mod problem;
pub mod solver;
pub mod verify;
