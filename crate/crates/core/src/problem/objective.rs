use std::fmt::Debug;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, FwalError, Result};
use crate::linalg::{dot, jacobi_eig, norm_sq, SymMatrix};

/// Smooth convex objective on a flat vector.
pub trait SmoothObjective: Debug + Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Writes `∇f(x)` into `out`.
    fn gradient(&self, x: &[f64], out: &mut [f64]);

    /// Lipschitz constant of the gradient, when known.
    fn smoothness(&self) -> Option<f64> {
        None
    }

    fn strong_convexity(&self) -> Option<f64> {
        None
    }

    fn is_quadratic(&self) -> bool {
        false
    }

    /// `dᵀ ∇²f d`; only meaningful (and only provided) for quadratics.
    fn curvature(&self, _d: &[f64]) -> Option<f64> {
        None
    }
}

/// `weight · ‖x − target‖²`
#[derive(Clone, Debug)]
pub struct SquaredDistance {
    pub target: Vec<f64>,
    pub weight: f64,
}

impl SquaredDistance {
    pub fn new(target: Vec<f64>) -> Self {
        SquaredDistance { target, weight: 1.0 }
    }
}

impl SmoothObjective for SquaredDistance {
    fn dim(&self) -> usize {
        self.target.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.weight * crate::linalg::dist_sq(x, &self.target)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for ((o, xi), ti) in out.iter_mut().zip(x).zip(&self.target) {
            *o = 2.0 * self.weight * (xi - ti);
        }
    }
    fn smoothness(&self) -> Option<f64> {
        Some(2.0 * self.weight)
    }
    fn strong_convexity(&self) -> Option<f64> {
        Some(2.0 * self.weight)
    }
    fn is_quadratic(&self) -> bool {
        true
    }
    fn curvature(&self, d: &[f64]) -> Option<f64> {
        Some(2.0 * self.weight * norm_sq(d))
    }
}

/// `½ xᵀQx + bᵀx` with `Q` symmetric positive semidefinite.
#[derive(Clone, Debug)]
pub struct Quadratic {
    q: SymMatrix,
    b: Vec<f64>,
    max_eig: f64,
    min_eig: f64,
}

impl Quadratic {
    pub fn new(q: SymMatrix, b: Vec<f64>) -> Result<Self> {
        check_len(q.dim(), b.len(), "quadratic linear term")?;
        let eig = jacobi_eig(&q, 1e-14)?;
        let max_eig = eig.eigenvalues.first().copied().unwrap_or(0.0);
        let min_eig = eig.eigenvalues.last().copied().unwrap_or(0.0);
        if min_eig < -1e-10 * (1.0 + max_eig.abs()) {
            return Err(FwalError::InvalidArgument(format!(
                "quadratic term is not positive semidefinite (smallest eigenvalue {min_eig})"
            )));
        }
        Ok(Quadratic {
            q,
            b,
            max_eig,
            min_eig: min_eig.max(0.0),
        })
    }

    /// `½ (x − c)ᵀQ(x − c)` up to a constant.
    pub fn centered(q: SymMatrix, center: &[f64]) -> Result<Self> {
        let qc = q.mul_vec(center);
        Self::new(q, qc.into_iter().map(|v| -v).collect())
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.q
    }

    pub fn linear(&self) -> &[f64] {
        &self.b
    }
}

impl SmoothObjective for Quadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.q.quad_form(x) + dot(&self.b, x)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        self.q.matvec(x, out);
        crate::linalg::axpy(1.0, &self.b, out);
    }
    fn smoothness(&self) -> Option<f64> {
        Some(self.max_eig)
    }
    fn strong_convexity(&self) -> Option<f64> {
        Some(self.min_eig)
    }
    fn is_quadratic(&self) -> bool {
        true
    }
    fn curvature(&self, d: &[f64]) -> Option<f64> {
        Some(self.q.quad_form(d))
    }
}

/// Mean logistic loss `(1/n) Σ log(1 + exp(−y_i a_iᵀx))` with labels ±1.
#[derive(Clone, Debug)]
pub struct Logistic {
    features: Vec<Vec<f64>>,
    labels: Vec<f64>,
    lipschitz: f64,
}

impl Logistic {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        check_len(features.len(), labels.len(), "logistic labels")?;
        let p = features
            .first()
            .map(Vec::len)
            .ok_or_else(|| FwalError::InvalidArgument("logistic loss needs samples".into()))?;
        for a in &features {
            check_len(p, a.len(), "logistic feature row")?;
        }
        if labels.iter().any(|y| *y != 1.0 && *y != -1.0) {
            return Err(FwalError::InvalidArgument("logistic labels must be ±1".into()));
        }
        // ‖A‖²/(4n) bounded through the Frobenius norm
        let n = features.len() as f64;
        let fro: f64 = features.iter().map(|a| norm_sq(a)).sum();
        Ok(Logistic {
            features,
            labels,
            lipschitz: fro / (4.0 * n),
        })
    }
}

fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl SmoothObjective for Logistic {
    fn dim(&self) -> usize {
        self.features[0].len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        let n = self.labels.len() as f64;
        self.features
            .iter()
            .zip(&self.labels)
            .map(|(a, y)| log1p_exp(-y * dot(a, x)))
            .sum::<f64>()
            / n
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let n = self.labels.len() as f64;
        out.iter_mut().for_each(|v| *v = 0.0);
        for (a, y) in self.features.iter().zip(&self.labels) {
            let coef = -y * sigmoid(-y * dot(a, x)) / n;
            crate::linalg::axpy(coef, a, out);
        }
    }
    fn smoothness(&self) -> Option<f64> {
        Some(self.lipschitz)
    }
}

/// `f(x) = (1/K) Σ_k g(x⁽ᵏ⁾)`: one loss shared by every block of an
/// intersection problem. On the consistent set it equals `g`.
#[derive(Clone, Debug)]
pub struct Replicated {
    loss: Arc<dyn SmoothObjective>,
    blocks: usize,
}

impl Replicated {
    pub fn new(loss: Arc<dyn SmoothObjective>, blocks: usize) -> Result<Self> {
        if blocks == 0 {
            return Err(FwalError::InvalidArgument("replicated loss needs blocks".into()));
        }
        Ok(Replicated { loss, blocks })
    }

    pub fn loss(&self) -> &Arc<dyn SmoothObjective> {
        &self.loss
    }
}

impl SmoothObjective for Replicated {
    fn dim(&self) -> usize {
        self.blocks * self.loss.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        let d = self.loss.dim();
        x.chunks(d).map(|b| self.loss.value(b)).sum::<f64>() / self.blocks as f64
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let d = self.loss.dim();
        let w = 1.0 / self.blocks as f64;
        for (xb, ob) in x.chunks(d).zip(out.chunks_mut(d)) {
            self.loss.gradient(xb, ob);
            crate::linalg::scale(w, ob);
        }
    }
    fn smoothness(&self) -> Option<f64> {
        self.loss.smoothness().map(|l| l / self.blocks as f64)
    }
    fn strong_convexity(&self) -> Option<f64> {
        self.loss.strong_convexity().map(|m| m / self.blocks as f64)
    }
    fn is_quadratic(&self) -> bool {
        self.loss.is_quadratic()
    }
    fn curvature(&self, d: &[f64]) -> Option<f64> {
        let k = self.loss.dim();
        let mut total = 0.0;
        for db in d.chunks(k) {
            total += self.loss.curvature(db)?;
        }
        Some(total / self.blocks as f64)
    }
}

/// Serializable objective description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ObjectiveSpec {
    SquaredDistance {
        target: Vec<f64>,
        #[serde(default = "one")]
        weight: f64,
    },
    Quadratic {
        q: Vec<Vec<f64>>,
        b: Vec<f64>,
    },
    Logistic {
        features: Vec<Vec<f64>>,
        labels: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

impl ObjectiveSpec {
    pub fn build(&self) -> Result<Arc<dyn SmoothObjective>> {
        Ok(match self {
            ObjectiveSpec::SquaredDistance { target, weight } => {
                if !(*weight > 0.0) {
                    return Err(FwalError::InvalidArgument("weight must be positive".into()));
                }
                Arc::new(SquaredDistance {
                    target: target.clone(),
                    weight: *weight,
                })
            }
            ObjectiveSpec::Quadratic { q, b } => Arc::new(Quadratic::new(SymMatrix::from_rows(q)?, b.clone())?),
            ObjectiveSpec::Logistic { features, labels } => Arc::new(Logistic::new(features.clone(), labels.clone())?),
        })
    }
}
