use serde::{Deserialize, Serialize};

use super::{canonical_sign, dot, SymMatrix};
use crate::error::{FwalError, Result};

pub const DEFAULT_MAX_SWEEPS: usize = 100;

/// Eigenvalues sorted in non-increasing order with matching orthonormal
/// eigenvectors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Reassembles `V diag(values) Vᵀ` with replacement eigenvalues.
    pub fn reassemble(&self, values: &[f64]) -> SymMatrix {
        let n = self.dim();
        let mut data = vec![0.0; n * n];
        for (lam, v) in values.iter().zip(&self.eigenvectors) {
            if *lam == 0.0 {
                continue;
            }
            for i in 0..n {
                let li = lam * v[i];
                if li == 0.0 {
                    continue;
                }
                let row = &mut data[i * n..(i + 1) * n];
                for (r, vj) in row.iter_mut().zip(v) {
                    *r += li * vj;
                }
            }
        }
        SymMatrix::symmetrize(n, data).expect("reassembled matrix is finite")
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.reassemble(&self.eigenvalues)
    }

    /// `max_ij |(VᵀV − I)_ij|`
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, vi) in self.eigenvectors.iter().enumerate() {
            for (j, vj) in self.eigenvectors.iter().enumerate().take(i + 1) {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(vi, vj) - target).abs());
            }
        }
        worst
    }

    pub fn smallest(&self) -> (f64, &[f64]) {
        let k = self.dim() - 1;
        (self.eigenvalues[k], &self.eigenvectors[k])
    }

    pub fn largest(&self) -> (f64, &[f64]) {
        (self.eigenvalues[0], &self.eigenvectors[0])
    }
}

/// Cyclic Jacobi eigendecomposition. Sweeps until the off-diagonal
/// Frobenius norm drops below `tol * (1 + ‖A‖_F)`.
pub fn jacobi_eig(a: &SymMatrix, tol: f64) -> Result<EigenDecomposition> {
    jacobi_eig_with_limit(a, tol, DEFAULT_MAX_SWEEPS)
}

pub fn jacobi_eig_with_limit(a: &SymMatrix, tol: f64, max_sweeps: usize) -> Result<EigenDecomposition> {
    if !(tol > 0.0) {
        return Err(FwalError::InvalidArgument(format!(
            "jacobi tolerance must be positive, got {tol}"
        )));
    }
    let n = a.dim();
    if n == 0 {
        return Ok(EigenDecomposition {
            eigenvalues: vec![],
            eigenvectors: vec![],
        });
    }
    let mut m = a.as_slice().to_vec();
    // rows of `vt` are the eigenvector estimates
    let mut vt = vec![0.0; n * n];
    for i in 0..n {
        vt[i * n + i] = 1.0;
    }
    let threshold = tol * (1.0 + a.frobenius_norm());
    let mut row_p = vec![0.0; n];
    let mut row_q = vec![0.0; n];

    let mut converged = false;
    let mut off = off_diagonal_norm(&m, n);
    for _sweep in 0..max_sweeps {
        if off <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.is_finite() {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                } else {
                    0.0
                };
                if t == 0.0 {
                    continue;
                }
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                row_p.copy_from_slice(&m[p * n..(p + 1) * n]);
                row_q.copy_from_slice(&m[q * n..(q + 1) * n]);
                for k in 0..n {
                    let (akp, akq) = (row_p[k], row_q[k]);
                    row_p[k] = c * akp - s * akq;
                    row_q[k] = s * akp + c * akq;
                }
                row_p[p] = app - t * apq;
                row_q[q] = aqq + t * apq;
                row_p[q] = 0.0;
                row_q[p] = 0.0;
                m[p * n..(p + 1) * n].copy_from_slice(&row_p);
                m[q * n..(q + 1) * n].copy_from_slice(&row_q);
                for k in 0..n {
                    m[k * n + p] = row_p[k];
                    m[k * n + q] = row_q[k];
                }

                let (vp, vq) = split_rows(&mut vt, n, p, q);
                for (x, y) in vp.iter_mut().zip(vq.iter_mut()) {
                    let (a0, b0) = (*x, *y);
                    *x = c * a0 - s * b0;
                    *y = s * a0 + c * b0;
                }
            }
        }
        off = off_diagonal_norm(&m, n);
    }
    if !converged && off > threshold {
        return Err(FwalError::EigenNotConverged {
            sweeps: max_sweeps,
            residual: off,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]).then(i.cmp(&j)));
    let eigenvalues = order.iter().map(|&i| m[i * n + i]).collect();
    let eigenvectors = order
        .iter()
        .map(|&i| {
            let mut v = vt[i * n..(i + 1) * n].to_vec();
            canonical_sign(&mut v);
            v
        })
        .collect();
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(m: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[i * n + j] * m[i * n + j];
            }
        }
    }
    s.sqrt()
}

fn split_rows(data: &mut [f64], n: usize, p: usize, q: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert!(p < q);
    let (head, tail) = data.split_at_mut(q * n);
    (&mut head[p * n..(p + 1) * n], &mut tail[..n])
}
