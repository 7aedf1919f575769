//! Dense vectors and symmetric matrices, plus the two eigensolvers used by
//! the oracles: cyclic Jacobi for full decompositions and Lanczos for a
//! single extreme eigenpair.

mod jacobi;
mod lanczos;

pub use jacobi::{jacobi_eig, jacobi_eig_with_limit, EigenDecomposition, DEFAULT_MAX_SWEEPS};
pub use lanczos::{lanczos_extreme, Extreme, LanczosOptions, RitzPair};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, FwalError, Result};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v *= alpha);
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// Flips `v` so that its largest-magnitude entry (first one on ties) is
/// positive. Eigenvectors are only defined up to sign; this pins one.
pub fn canonical_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() + 1e-14 {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        scale(-1.0, v);
    }
}

/// Dense symmetric matrix, stored full-square in row-major order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SymMatrixRepr", into = "SymMatrixRepr")]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SymMatrixRepr {
    dim: usize,
    data: Vec<f64>,
}

impl TryFrom<SymMatrixRepr> for SymMatrix {
    type Error = FwalError;
    fn try_from(r: SymMatrixRepr) -> Result<Self> {
        SymMatrix::from_row_major(r.dim, r.data)
    }
}

impl From<SymMatrix> for SymMatrixRepr {
    fn from(m: SymMatrix) -> Self {
        SymMatrixRepr {
            dim: m.dim,
            data: m.data,
        }
    }
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diag(&vec![1.0; dim])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut m = Self::zeros(dim);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * dim + i] = d;
        }
        m
    }

    /// `scale * u uᵀ`.
    pub fn rank_one(scale: f64, u: &[f64]) -> Self {
        let dim = u.len();
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            let si = scale * u[i];
            for j in 0..dim {
                data[i * dim + j] = si * u[j];
            }
        }
        SymMatrix { dim, data }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..=i {
                let v = f(i, j);
                data[i * dim + j] = v;
                data[j * dim + i] = v;
            }
        }
        SymMatrix { dim, data }
    }

    /// Builds a symmetric matrix from full row-major storage. Rejects input
    /// whose asymmetry exceeds `1e-12 * (1 + max|a_ij|)`, then averages
    /// `(A + Aᵀ)/2` so the stored matrix is exactly symmetric.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        check_len(dim * dim, data.len(), "symmetric matrix storage")?;
        if !all_finite(&data) {
            return Err(FwalError::NonFinite("symmetric matrix entries"));
        }
        let max_abs = data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tolerance = 1e-12 * (1.0 + max_abs);
        let mut asymmetry = 0.0f64;
        for i in 0..dim {
            for j in 0..i {
                asymmetry = asymmetry.max((data[i * dim + j] - data[j * dim + i]).abs());
            }
        }
        if asymmetry > tolerance {
            return Err(FwalError::NotSymmetric { asymmetry, tolerance });
        }
        Ok(Self::symmetrize_unchecked(dim, data))
    }

    /// Averages `(A + Aᵀ)/2` without a tolerance check.
    pub fn symmetrize(dim: usize, data: Vec<f64>) -> Result<Self> {
        check_len(dim * dim, data.len(), "symmetric matrix storage")?;
        if !all_finite(&data) {
            return Err(FwalError::NonFinite("symmetric matrix entries"));
        }
        Ok(Self::symmetrize_unchecked(dim, data))
    }

    fn symmetrize_unchecked(dim: usize, mut data: Vec<f64>) -> Self {
        for i in 0..dim {
            for j in 0..i {
                let avg = 0.5 * (data[i * dim + j] + data[j * dim + i]);
                data[i * dim + j] = avg;
                data[j * dim + i] = avg;
            }
        }
        SymMatrix { dim, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            check_len(dim, row.len(), "symmetric matrix row")?;
            data.extend_from_slice(row);
        }
        Self::from_row_major(dim, data)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    /// Entrywise ℓ1 norm `Σ_ij |a_ij|`.
    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), x);
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.matvec(x, &mut out);
        out
    }

    /// `uᵀ A u`
    pub fn quad_form(&self, u: &[f64]) -> f64 {
        (0..self.dim).map(|i| u[i] * dot(self.row(i), u)).sum()
    }

    pub fn add(&self, other: &SymMatrix) -> Result<SymMatrix> {
        check_len(self.dim, other.dim, "matrix addition")?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(SymMatrix { dim: self.dim, data })
    }

    pub fn scaled(&self, alpha: f64) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|v| alpha * v).collect(),
        }
    }
}

/// `Σ_ij A_ij B_ij`
pub fn frob_inner(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    check_len(a.dim(), b.dim(), "frobenius inner product")?;
    Ok(dot(a.as_slice(), b.as_slice()))
}

/// Symmetric matrix with standard normal entries on and above the diagonal.
pub fn random_symmetric<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> SymMatrix {
    SymMatrix::from_fn(dim, |_, _| rng.sample(StandardNormal))
}

pub fn random_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            scale(1.0 / n, &mut v);
            return v;
        }
    }
}

/// Largest eigenvalue magnitude of a symmetric PSD operator by power
/// iteration. Used to set gradient step sizes from a smoothness bound.
pub fn power_iteration<F>(matvec: F, dim: usize, iters: usize, seed: u64) -> f64
where
    F: Fn(&[f64], &mut [f64]),
{
    use rand::SeedableRng;
    if dim == 0 {
        return 0.0;
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut v = random_unit_vector(dim, &mut rng);
    let mut w = vec![0.0; dim];
    let mut estimate = 0.0;
    for _ in 0..iters {
        matvec(&v, &mut w);
        let n = norm(&w);
        if n == 0.0 {
            return 0.0;
        }
        estimate = n;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / n;
        }
    }
    estimate
}
