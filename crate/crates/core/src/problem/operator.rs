use serde::{Deserialize, Serialize};

use crate::error::{check_len, FwalError, Result};
use crate::linalg::power_iteration;

/// The linear coupling `M = [A₁, …, A_K]`; feasibility means `Mx = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ConsistencyOperator {
    /// All blocks equal. Encoded as a star around the first block:
    /// `Mx = (x¹ − x², …, x¹ − xᴷ)`.
    Intersection { blocks: usize, block_dim: usize },
    /// Explicit `A_k`, each `out_dim × d_k` in row-major order.
    Explicit {
        out_dim: usize,
        block_dims: Vec<usize>,
        matrices: Vec<Vec<f64>>,
    },
}

/// `M` for the intersection of `k` sets living in `R^block_dim`.
pub fn intersection_operator(k: usize, block_dim: usize) -> Result<ConsistencyOperator> {
    if k < 2 {
        return Err(FwalError::InvalidArgument(format!(
            "an intersection needs at least two blocks, got {k}"
        )));
    }
    Ok(ConsistencyOperator::Intersection { blocks: k, block_dim })
}

impl ConsistencyOperator {
    pub fn explicit(out_dim: usize, block_dims: Vec<usize>, matrices: Vec<Vec<f64>>) -> Result<Self> {
        check_len(block_dims.len(), matrices.len(), "operator blocks")?;
        for (d, a) in block_dims.iter().zip(&matrices) {
            check_len(out_dim * d, a.len(), "operator block storage")?;
        }
        Ok(ConsistencyOperator::Explicit {
            out_dim,
            block_dims,
            matrices,
        })
    }

    /// An operator with no rows, for single-set problems.
    pub fn none(block_dims: Vec<usize>) -> Self {
        let matrices = vec![Vec::new(); block_dims.len()];
        ConsistencyOperator::Explicit {
            out_dim: 0,
            block_dims,
            matrices,
        }
    }

    pub fn block_dims(&self) -> Vec<usize> {
        match self {
            ConsistencyOperator::Intersection { blocks, block_dim } => vec![*block_dim; *blocks],
            ConsistencyOperator::Explicit { block_dims, .. } => block_dims.clone(),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.block_dims().iter().sum()
    }

    pub fn out_dim(&self) -> usize {
        match self {
            ConsistencyOperator::Intersection { blocks, block_dim } => (blocks - 1) * block_dim,
            ConsistencyOperator::Explicit { out_dim, .. } => *out_dim,
        }
    }

    /// `out = M x` with `x` the flattened block vector.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        match self {
            ConsistencyOperator::Intersection { blocks, block_dim } => {
                let d = *block_dim;
                let hub = &x[..d];
                for k in 1..*blocks {
                    let xk = &x[k * d..(k + 1) * d];
                    let o = &mut out[(k - 1) * d..k * d];
                    for ((oi, h), v) in o.iter_mut().zip(hub).zip(xk) {
                        *oi = h - v;
                    }
                }
            }
            ConsistencyOperator::Explicit {
                out_dim,
                block_dims,
                matrices,
            } => {
                out.iter_mut().for_each(|v| *v = 0.0);
                let mut off = 0;
                for (d, a) in block_dims.iter().zip(matrices) {
                    let xk = &x[off..off + d];
                    for r in 0..*out_dim {
                        out[r] += crate::linalg::dot(&a[r * d..(r + 1) * d], xk);
                    }
                    off += d;
                }
            }
        }
    }

    pub fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.out_dim()];
        self.apply(x, &mut out);
        out
    }

    /// `out = Mᵀ y`, overwriting `out`.
    pub fn adjoint(&self, y: &[f64], out: &mut [f64]) {
        match self {
            ConsistencyOperator::Intersection { blocks, block_dim } => {
                let d = *block_dim;
                out[..d].iter_mut().for_each(|v| *v = 0.0);
                for k in 1..*blocks {
                    let yk = &y[(k - 1) * d..k * d];
                    for i in 0..d {
                        out[i] += yk[i];
                        out[k * d + i] = -yk[i];
                    }
                }
            }
            ConsistencyOperator::Explicit {
                out_dim,
                block_dims,
                matrices,
            } => {
                let mut off = 0;
                for (d, a) in block_dims.iter().zip(matrices) {
                    let ok = &mut out[off..off + d];
                    ok.iter_mut().for_each(|v| *v = 0.0);
                    for r in 0..*out_dim {
                        crate::linalg::axpy(y[r], &a[r * d..(r + 1) * d], ok);
                    }
                    off += d;
                }
            }
        }
    }

    pub fn adjoint_vec(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.in_dim()];
        self.adjoint(y, &mut out);
        out
    }

    /// `‖MᵀM‖`, the spectral norm of the Gram operator.
    pub fn gram_norm(&self) -> f64 {
        match self {
            // MᵀM has eigenvalue K on (K−1, −1, …, −1) ⊗ v
            ConsistencyOperator::Intersection { blocks, .. } => *blocks as f64,
            ConsistencyOperator::Explicit { out_dim: 0, .. } => 0.0,
            ConsistencyOperator::Explicit { .. } => {
                let m = self.out_dim();
                power_iteration(
                    |x, out| {
                        let mut t = vec![0.0; m];
                        self.apply(x, &mut t);
                        self.adjoint(&t, out);
                    },
                    self.in_dim(),
                    500,
                    17,
                )
            }
        }
    }
}
