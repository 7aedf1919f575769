//! Constraint sets seen through their linear minimization oracles, with
//! optional projections for the projection-based baseline.

mod atom;
mod lmo;
mod projection;

pub use atom::Atom;
pub use lmo::{lmo_l1_ball, lmo_psd_l1, lmo_psd_trace, lmo_simplex, lmo_vertex_index, lmo_vertex_polytope};
pub use projection::{
    project_capped_simplex, project_l1_ball, project_simplex, project_trace_ball_psd, PROJECTION_EIG_TOL,
};

use std::fmt::Debug;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, FwalError, Result};
use crate::linalg::{jacobi_eig, LanczosOptions, SymMatrix};

pub trait ConstraintSet: Debug + Send + Sync {
    /// Length of the (flattened) vectors this set lives in.
    fn dim(&self) -> usize;

    fn name(&self) -> &'static str;

    fn lmo(&self, direction: &[f64]) -> Result<Atom>;

    fn has_projection(&self) -> bool {
        false
    }

    fn project(&self, _x: &[f64]) -> Result<Vec<f64>> {
        Err(FwalError::Unsupported(format!("{} has no projection", self.name())))
    }

    /// Every LMO output is one of finitely many atoms, so away steps apply.
    fn is_polytope(&self) -> bool;

    /// Full atom list, when it is small enough to enumerate.
    fn vertices(&self) -> Option<Vec<Atom>> {
        None
    }

    fn contains(&self, x: &[f64], tol: f64) -> bool;

    /// Euclidean diameter.
    fn diameter(&self) -> f64;
}

/// `{z : ‖z‖₁ ≤ radius}`
#[derive(Clone, Debug)]
pub struct L1Ball {
    pub dim: usize,
    pub radius: f64,
}

impl ConstraintSet for L1Ball {
    fn dim(&self) -> usize {
        self.dim
    }
    fn name(&self) -> &'static str {
        "l1_ball"
    }
    fn lmo(&self, direction: &[f64]) -> Result<Atom> {
        check_len(self.dim, direction.len(), "l1-ball direction")?;
        lmo_l1_ball(direction, self.radius)
    }
    fn has_projection(&self) -> bool {
        true
    }
    fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim, x.len(), "l1-ball point")?;
        project_l1_ball(x, self.radius)
    }
    fn is_polytope(&self) -> bool {
        true
    }
    fn vertices(&self) -> Option<Vec<Atom>> {
        let mut out = Vec::with_capacity(2 * self.dim);
        for i in 0..self.dim {
            out.push(Atom::coordinate(i, self.radius));
            out.push(Atom::coordinate(i, -self.radius));
        }
        Some(out)
    }
    fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim && x.iter().map(|v| v.abs()).sum::<f64>() <= self.radius + tol
    }
    fn diameter(&self) -> f64 {
        2.0 * self.radius
    }
}

/// Probability simplex `{z ≥ 0, Σz = 1}`.
#[derive(Clone, Debug)]
pub struct Simplex {
    pub dim: usize,
}

impl ConstraintSet for Simplex {
    fn dim(&self) -> usize {
        self.dim
    }
    fn name(&self) -> &'static str {
        "simplex"
    }
    fn lmo(&self, direction: &[f64]) -> Result<Atom> {
        check_len(self.dim, direction.len(), "simplex direction")?;
        lmo_simplex(direction)
    }
    fn has_projection(&self) -> bool {
        true
    }
    fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim, x.len(), "simplex point")?;
        Ok(project_simplex(x))
    }
    fn is_polytope(&self) -> bool {
        true
    }
    fn vertices(&self) -> Option<Vec<Atom>> {
        Some((0..self.dim).map(|i| Atom::coordinate(i, 1.0)).collect())
    }
    fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim && x.iter().all(|v| *v >= -tol) && (x.iter().sum::<f64>() - 1.0).abs() <= tol
    }
    fn diameter(&self) -> f64 {
        if self.dim > 1 {
            std::f64::consts::SQRT_2
        } else {
            // a single point; keep the diameter positive
            f64::EPSILON
        }
    }
}

/// Convex hull of an explicit vertex list.
#[derive(Clone, Debug)]
pub struct VertexPolytope {
    vertices: Vec<Vec<f64>>,
}

impl VertexPolytope {
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let first = vertices
            .first()
            .ok_or_else(|| FwalError::InvalidArgument("polytope needs at least one vertex".into()))?;
        let dim = first.len();
        for v in &vertices {
            check_len(dim, v.len(), "polytope vertex")?;
        }
        Ok(VertexPolytope { vertices })
    }

    pub fn vertex_list(&self) -> &[Vec<f64>] {
        &self.vertices
    }
}

impl ConstraintSet for VertexPolytope {
    fn dim(&self) -> usize {
        self.vertices[0].len()
    }
    fn name(&self) -> &'static str {
        "vertex_polytope"
    }
    fn lmo(&self, direction: &[f64]) -> Result<Atom> {
        lmo_vertex_polytope(&self.vertices, direction)
    }
    fn is_polytope(&self) -> bool {
        true
    }
    fn vertices(&self) -> Option<Vec<Atom>> {
        Some(
            self.vertices
                .iter()
                .map(|v| Atom::Dense { values: v.clone() })
                .collect(),
        )
    }
    /// Approximate membership: distance to the hull by Frank-Wolfe on
    /// `‖z − x‖²`, which is enough for test support.
    fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        if self.vertices.iter().any(|v| crate::linalg::dist_sq(v, x) <= tol * tol) {
            return true;
        }
        // pairwise Frank-Wolfe on the barycentric weights of min ½‖z - x‖²
        let n = self.vertices.len();
        let mut w = vec![0.0; n];
        w[0] = 1.0;
        let mut z = self.vertices[0].clone();
        for _ in 0..100_000 {
            let g: Vec<f64> = z.iter().zip(x).map(|(a, b)| a - b).collect();
            let dist_sq = crate::linalg::norm_sq(&g);
            if dist_sq <= tol * tol {
                return true;
            }
            let scores: Vec<f64> = self.vertices.iter().map(|v| crate::linalg::dot(v, &g)).collect();
            let s = (0..n).fold(0, |b, k| if scores[k] < scores[b] { k } else { b });
            let zg = crate::linalg::dot(&z, &g);
            // dist² to the hull is at least dist² - 2⟨g, z - s⟩
            if dist_sq - 2.0 * (zg - scores[s]) > tol * tol {
                return false;
            }
            let a = (0..n)
                .filter(|&k| w[k] > 0.0)
                .fold(s, |b, k| if w[b] == 0.0 || scores[k] > scores[b] { k } else { b });
            if a == s {
                return false;
            }
            let d: Vec<f64> = self.vertices[s]
                .iter()
                .zip(&self.vertices[a])
                .map(|(p, q)| p - q)
                .collect();
            let dd = crate::linalg::norm_sq(&d);
            let gamma = ((scores[a] - scores[s]) / dd).min(w[a]);
            if !(gamma > 0.0) {
                return false;
            }
            w[s] += gamma;
            w[a] -= gamma;
            crate::linalg::axpy(gamma, &d, &mut z);
        }
        false
    }
    fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[..i] {
                best = best.max(crate::linalg::dist_sq(a, b));
            }
        }
        best.sqrt().max(f64::EPSILON)
    }
}

/// Sparse matrix set `{S ⪰ 0, ‖S‖₁ ≤ β₁}` as seen by its oracle: the atoms
/// are `β₁(E_ij + E_ji)/2` and `0`, so membership and projection refer to
/// their hull `{S = Sᵀ, S ≥ 0 entrywise, Σ S_ij ≤ β₁}`. With
/// `diagonal_only` the atoms are `β₁E_ii` and `0`, whose hull is PSD.
#[derive(Clone, Debug)]
pub struct PsdL1Ball {
    pub side: usize,
    pub radius: f64,
    pub diagonal_only: bool,
}

impl ConstraintSet for PsdL1Ball {
    fn dim(&self) -> usize {
        self.side * self.side
    }
    fn name(&self) -> &'static str {
        "psd_l1_ball"
    }
    fn lmo(&self, direction: &[f64]) -> Result<Atom> {
        if !(self.radius > 0.0) {
            return Err(FwalError::InvalidArgument("radius must be positive".into()));
        }
        lmo::lmo_psd_l1_flat(direction, self.side, self.radius, self.diagonal_only)
    }
    fn has_projection(&self) -> bool {
        true
    }
    fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim(), x.len(), "matrix point")?;
        let n = self.side;
        if self.diagonal_only {
            let diag: Vec<f64> = (0..n).map(|i| x[i * n + i]).collect();
            let p = project_capped_simplex(&diag, self.radius)?;
            let mut out = vec![0.0; n * n];
            for (i, v) in p.into_iter().enumerate() {
                out[i * n + i] = v;
            }
            return Ok(out);
        }
        let sym = SymMatrix::symmetrize(n, x.to_vec())?;
        project_capped_simplex(sym.as_slice(), self.radius)
    }
    fn is_polytope(&self) -> bool {
        true
    }
    fn vertices(&self) -> Option<Vec<Atom>> {
        let n = self.side;
        let mut out = vec![Atom::Zero];
        for i in 0..n {
            let cols = if self.diagonal_only { i..i + 1 } else { i..n };
            for j in cols {
                let entries = if i == j {
                    vec![(i * n + i, self.radius)]
                } else {
                    vec![(i * n + j, 0.5 * self.radius), (j * n + i, 0.5 * self.radius)]
                };
                out.push(Atom::Sparse { entries });
            }
        }
        Some(out)
    }
    fn contains(&self, x: &[f64], tol: f64) -> bool {
        let n = self.side;
        if x.len() != n * n {
            return false;
        }
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let v = x[i * n + j];
                if v < -tol || (x[j * n + i] - v).abs() > tol {
                    return false;
                }
                if self.diagonal_only && i != j && v.abs() > tol {
                    return false;
                }
                total += v.abs();
            }
        }
        total <= self.radius + tol
    }
    fn diameter(&self) -> f64 {
        if self.side > 1 {
            std::f64::consts::SQRT_2 * self.radius
        } else {
            self.radius
        }
    }
}

/// `{S ⪰ 0, tr S ≤ β₂}`; the oracle runs Lanczos for the smallest eigenpair.
#[derive(Clone, Debug)]
pub struct PsdTraceBall {
    pub side: usize,
    pub radius: f64,
    pub lanczos: LanczosOptions,
}

impl PsdTraceBall {
    pub fn new(side: usize, radius: f64) -> Self {
        PsdTraceBall {
            side,
            radius,
            lanczos: LanczosOptions::default(),
        }
    }
}

impl ConstraintSet for PsdTraceBall {
    fn dim(&self) -> usize {
        self.side * self.side
    }
    fn name(&self) -> &'static str {
        "psd_trace_ball"
    }
    fn lmo(&self, direction: &[f64]) -> Result<Atom> {
        if !(self.radius > 0.0) {
            return Err(FwalError::InvalidArgument("radius must be positive".into()));
        }
        let mut opts = self.lanczos;
        opts.max_iter = opts.max_iter.max(2);
        lmo::lmo_psd_trace_flat(direction, self.side, self.radius, opts)
    }
    fn has_projection(&self) -> bool {
        true
    }
    fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        let s = SymMatrix::symmetrize(self.side, x.to_vec())?;
        Ok(project_trace_ball_psd(&s, self.radius)?.into_vec())
    }
    fn is_polytope(&self) -> bool {
        false
    }
    fn contains(&self, x: &[f64], tol: f64) -> bool {
        let n = self.side;
        if x.len() != n * n {
            return false;
        }
        for i in 0..n {
            for j in 0..i {
                if (x[i * n + j] - x[j * n + i]).abs() > tol {
                    return false;
                }
            }
        }
        let Ok(s) = SymMatrix::symmetrize(n, x.to_vec()) else {
            return false;
        };
        match jacobi_eig(&s, 1e-13) {
            Ok(e) => e.smallest().0 >= -tol && s.trace() <= self.radius + tol,
            Err(_) => false,
        }
    }
    fn diameter(&self) -> f64 {
        if self.side > 1 {
            std::f64::consts::SQRT_2 * self.radius
        } else {
            self.radius
        }
    }
}

/// Serializable description of a constraint set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SetSpec {
    L1Ball {
        dim: usize,
        radius: f64,
    },
    Simplex {
        dim: usize,
    },
    VertexPolytope {
        vertices: Vec<Vec<f64>>,
    },
    PsdL1Ball {
        side: usize,
        radius: f64,
        #[serde(default)]
        diagonal_only: bool,
    },
    PsdTraceBall {
        side: usize,
        radius: f64,
        #[serde(default)]
        lanczos: Option<LanczosOptions>,
    },
}

impl SetSpec {
    pub fn build(&self) -> Result<Arc<dyn ConstraintSet>> {
        let positive = |r: f64| {
            if r > 0.0 && r.is_finite() {
                Ok(())
            } else {
                Err(FwalError::InvalidArgument(format!("radius must be positive, got {r}")))
            }
        };
        let nonempty = |d: usize| {
            if d > 0 {
                Ok(())
            } else {
                Err(FwalError::InvalidArgument("set dimension must be positive".into()))
            }
        };
        Ok(match self {
            SetSpec::L1Ball { dim, radius } => {
                nonempty(*dim)?;
                positive(*radius)?;
                Arc::new(L1Ball {
                    dim: *dim,
                    radius: *radius,
                })
            }
            SetSpec::Simplex { dim } => {
                nonempty(*dim)?;
                Arc::new(Simplex { dim: *dim })
            }
            SetSpec::VertexPolytope { vertices } => Arc::new(VertexPolytope::new(vertices.clone())?),
            SetSpec::PsdL1Ball {
                side,
                radius,
                diagonal_only,
            } => {
                nonempty(*side)?;
                positive(*radius)?;
                Arc::new(PsdL1Ball {
                    side: *side,
                    radius: *radius,
                    diagonal_only: *diagonal_only,
                })
            }
            SetSpec::PsdTraceBall { side, radius, lanczos } => {
                nonempty(*side)?;
                positive(*radius)?;
                Arc::new(PsdTraceBall {
                    side: *side,
                    radius: *radius,
                    lanczos: lanczos.unwrap_or_default(),
                })
            }
        })
    }
}
