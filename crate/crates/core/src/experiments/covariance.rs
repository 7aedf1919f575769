use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, FwalError, Result};
use crate::linalg::{jacobi_eig, SymMatrix};

/// Synthetic sparse + low-rank covariance estimation instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceInstance {
    pub d: usize,
    pub n: usize,
    pub sigma: f64,
    pub n_blocks: usize,
    pub threshold_keep: f64,
    /// Block-diagonal covariance after thresholding.
    pub true_cov: SymMatrix,
    pub empirical: SymMatrix,
    /// Row-major `|Σ_ij| > threshold_keep` pattern.
    pub support_mask: Vec<bool>,
}

/// Block sizes: `⌊d/n_blocks⌋` each, remainder added to the last block.
pub fn block_sizes(d: usize, n_blocks: usize) -> Vec<usize> {
    let base = d / n_blocks;
    let mut sizes = vec![base; n_blocks];
    if let Some(last) = sizes.last_mut() {
        *last += d - base * n_blocks;
    }
    sizes
}

/// Draws `Σ = blockdiag(v_b v_bᵀ)` with `v_b ~ U[−1, 1]`, zeroes entries with
/// `|Σ_ij| ≤ threshold_keep`, then samples `x_i = L g_i + σ ε_i` where
/// `L Lᵀ` is the PSD part of the thresholded `Σ`. The empirical matrix is
/// `Σ x_i x_iᵀ`, divided by `n` when `normalize` is set.
pub fn gen_covariance_instance(
    d: usize,
    n: usize,
    sigma: f64,
    n_blocks: usize,
    threshold_keep: f64,
    normalize: bool,
    seed: u64,
) -> Result<CovarianceInstance> {
    if d == 0 || n == 0 || n_blocks == 0 || n_blocks > d {
        return Err(FwalError::InvalidArgument(format!(
            "invalid instance sizes d={d}, n={n}, blocks={n_blocks}"
        )));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) || !(threshold_keep >= 0.0) {
        return Err(FwalError::InvalidArgument(
            "sigma and threshold must be non-negative".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes = block_sizes(d, n_blocks);
    let mut cov = vec![0.0; d * d];
    // per block: offset and row-major square-root factor
    let mut factors = Vec::with_capacity(n_blocks);
    let mut off = 0;
    for &b in &sizes {
        let v: Vec<f64> = (0..b).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let block = SymMatrix::from_fn(b, |i, j| {
            let s = v[i] * v[j];
            if s.abs() > threshold_keep {
                s
            } else {
                0.0
            }
        });
        for i in 0..b {
            for j in 0..b {
                cov[(off + i) * d + off + j] = block.get(i, j);
            }
        }
        let eig = jacobi_eig(&block, 1e-14)?;
        let mut l = vec![0.0; b * b];
        for (k, (lam, u)) in eig.eigenvalues.iter().zip(&eig.eigenvectors).enumerate() {
            let s = lam.max(0.0).sqrt();
            for i in 0..b {
                l[i * b + k] = u[i] * s;
            }
        }
        factors.push((off, b, l));
        off += b;
    }
    let true_cov = SymMatrix::from_row_major(d, cov)?;
    let support_mask = true_cov.as_slice().iter().map(|v| *v != 0.0).collect();

    let mut emp = vec![0.0; d * d];
    let mut x = vec![0.0; d];
    for _ in 0..n {
        x.iter_mut().for_each(|v| *v = 0.0);
        for (off, b, l) in &factors {
            let g: Vec<f64> = (0..*b).map(|_| rng.sample(StandardNormal)).collect();
            for i in 0..*b {
                x[off + i] = (0..*b).map(|k| l[i * b + k] * g[k]).sum();
            }
        }
        for v in x.iter_mut() {
            let e: f64 = rng.sample(StandardNormal);
            *v += sigma * e;
        }
        for i in 0..d {
            let xi = x[i];
            let row = &mut emp[i * d..(i + 1) * d];
            for (r, xj) in row.iter_mut().zip(&x) {
                *r += xi * xj;
            }
        }
    }
    if normalize {
        emp.iter_mut().for_each(|v| *v /= n as f64);
    }
    Ok(CovarianceInstance {
        d,
        n,
        sigma,
        n_blocks,
        threshold_keep,
        true_cov,
        empirical: SymMatrix::symmetrize(d, emp)?,
        support_mask,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub fraction_recovered: f64,
}

/// Entrywise support recovery of `|estimate| > threshold` against `truth`.
/// An empty prediction has precision 1, an empty truth recall 1.
pub fn support_metrics(estimate: &[f64], truth: &[bool], threshold: f64) -> Result<SupportMetrics> {
    check_len(truth.len(), estimate.len(), "support estimate")?;
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (v, t) in estimate.iter().zip(truth) {
        match (v.abs() > threshold, *t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => {}
        }
    }
    let precision = if tp + fp == 0 {
        1.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if tp + fneg == 0 {
        1.0
    } else {
        tp as f64 / (tp + fneg) as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(SupportMetrics {
        precision,
        recall,
        f1,
        fraction_recovered: recall,
    })
}
