//! The split problem `min f(x) s.t. x⁽ᵏ⁾ ∈ 𝒳_k, Mx = 0` and its augmented
//! Lagrangian `𝓛(x, y) = f(x) + ⟨y, Mx⟩ + (λ/2)‖Mx‖²`.

mod block;
mod objective;
mod operator;

pub use block::BlockVector;
pub use objective::{Logistic, ObjectiveSpec, Quadratic, Replicated, SmoothObjective, SquaredDistance};
pub use operator::{intersection_operator, ConsistencyOperator};

use std::sync::Arc;

use crate::error::{check_len, FwalError, Result};
use crate::linalg::{dot, norm, norm_sq};
use crate::oracles::{Atom, ConstraintSet};

pub const DEFAULT_LAMBDA: f64 = 1.0;

#[derive(Clone, Debug)]
pub struct SplitProblem {
    objective: Arc<dyn SmoothObjective>,
    sets: Vec<Arc<dyn ConstraintSet>>,
    op: ConsistencyOperator,
    lambda: f64,
    dims: Vec<usize>,
}

/// Value, gradient and `Mx` of the augmented Lagrangian at one point.
#[derive(Clone, Debug)]
pub struct LagrangianEval {
    pub value: f64,
    pub objective: f64,
    pub grad: Vec<f64>,
    pub mx: Vec<f64>,
}

impl SplitProblem {
    pub fn new(
        objective: Arc<dyn SmoothObjective>,
        sets: Vec<Arc<dyn ConstraintSet>>,
        op: ConsistencyOperator,
        lambda: f64,
    ) -> Result<Self> {
        if sets.is_empty() {
            return Err(FwalError::InvalidArgument("problem needs at least one set".into()));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(FwalError::InvalidArgument(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        let dims: Vec<usize> = sets.iter().map(|s| s.dim()).collect();
        let op_dims = op.block_dims();
        check_len(dims.len(), op_dims.len(), "operator block count")?;
        for (a, b) in dims.iter().zip(&op_dims) {
            check_len(*a, *b, "operator block dimension")?;
        }
        check_len(dims.iter().sum(), objective.dim(), "objective dimension")?;
        Ok(SplitProblem {
            objective,
            sets,
            op,
            lambda,
            dims,
        })
    }

    /// Intersection of `sets` (all of the same dimension) with the loss
    /// shared across blocks.
    pub fn intersection(
        loss: Arc<dyn SmoothObjective>,
        sets: Vec<Arc<dyn ConstraintSet>>,
        lambda: f64,
    ) -> Result<Self> {
        let k = sets.len();
        let d = sets.first().map(|s| s.dim()).unwrap_or(0);
        let op = intersection_operator(k, d)?;
        let objective = Arc::new(Replicated::new(loss, k)?);
        Self::new(objective, sets, op, lambda)
    }

    pub fn objective(&self) -> &Arc<dyn SmoothObjective> {
        &self.objective
    }

    pub fn sets(&self) -> &[Arc<dyn ConstraintSet>] {
        &self.sets
    }

    pub fn operator(&self) -> &ConsistencyOperator {
        &self.op
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.objective.clone(), self.sets.clone(), self.op.clone(), lambda)
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dual_dim(&self) -> usize {
        self.op.out_dim()
    }

    pub fn all_polytopes(&self) -> bool {
        self.sets.iter().all(|s| s.is_polytope())
    }

    /// `L_λ = L + λ‖MᵀM‖`, when `L` is known.
    pub fn lagrangian_smoothness(&self) -> Option<f64> {
        self.objective
            .smoothness()
            .map(|l| l + self.lambda * self.op.gram_norm())
    }

    /// Diameter of the product set.
    pub fn diameter(&self) -> f64 {
        self.sets.iter().map(|s| s.diameter().powi(2)).sum::<f64>().sqrt()
    }

    fn check_point(&self, x: &BlockVector, y: &[f64]) -> Result<()> {
        check_len(self.dims.len(), x.num_blocks(), "block count")?;
        for (a, b) in self.dims.iter().zip(x.block_dims()) {
            check_len(*a, b, "block dimension")?;
        }
        check_len(self.op.out_dim(), y.len(), "dual variable")
    }

    pub fn evaluate(&self, x: &BlockVector, y: &[f64]) -> Result<LagrangianEval> {
        self.check_point(x, y)?;
        Ok(self.evaluate_unchecked(x.as_slice(), y))
    }

    pub(crate) fn evaluate_unchecked(&self, x: &[f64], y: &[f64]) -> LagrangianEval {
        let mx = self.op.apply_vec(x);
        let objective = self.objective.value(x);
        let value = objective + dot(y, &mx) + 0.5 * self.lambda * norm_sq(&mx);
        let mut grad = vec![0.0; x.len()];
        self.objective.gradient(x, &mut grad);
        // Mᵀ(y + λ Mx)
        let shifted: Vec<f64> = y.iter().zip(&mx).map(|(a, b)| a + self.lambda * b).collect();
        let mut adj = vec![0.0; x.len()];
        self.op.adjoint(&shifted, &mut adj);
        crate::linalg::axpy(1.0, &adj, &mut grad);
        LagrangianEval {
            value,
            objective,
            grad,
            mx,
        }
    }

    pub(crate) fn value_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let mx = self.op.apply_vec(x);
        self.objective.value(x) + dot(y, &mx) + 0.5 * self.lambda * norm_sq(&mx)
    }

    pub fn lagrangian_value(&self, x: &BlockVector, y: &[f64]) -> Result<f64> {
        self.check_point(x, y)?;
        Ok(self.value_unchecked(x.as_slice(), y))
    }

    /// `∇f(x) + Mᵀy + λMᵀMx`
    pub fn lagrangian_grad(&self, x: &BlockVector, y: &[f64]) -> Result<BlockVector> {
        let e = self.evaluate(x, y)?;
        x.with_data(e.grad)
    }

    /// `‖Mx‖₂`
    pub fn feasibility(&self, x: &BlockVector) -> f64 {
        norm(&self.op.apply_vec(x.as_slice()))
    }

    /// Per-block oracle outputs for the direction `grad`.
    pub fn lmo(&self, grad: &[f64]) -> Result<Vec<Atom>> {
        let mut off = 0;
        let mut out = Vec::with_capacity(self.sets.len());
        for (set, d) in self.sets.iter().zip(&self.dims) {
            let atom = set.lmo(&grad[off..off + d])?;
            if !atom.is_finite() {
                return Err(FwalError::NonFinite("oracle output"));
            }
            out.push(atom);
            off += d;
        }
        Ok(out)
    }

    /// Densifies a product atom into the flat layout.
    pub fn densify(&self, atoms: &[Atom]) -> Vec<f64> {
        let mut out = vec![0.0; self.dims.iter().sum()];
        self.add_atoms(atoms, 1.0, &mut out);
        out
    }

    pub(crate) fn add_atoms(&self, atoms: &[Atom], coef: f64, out: &mut [f64]) {
        let mut off = 0;
        for (a, d) in atoms.iter().zip(&self.dims) {
            a.add_scaled_to(coef, &mut out[off..off + d]);
            off += d;
        }
    }

    pub(crate) fn atoms_dot(&self, atoms: &[Atom], g: &[f64]) -> f64 {
        let mut off = 0;
        let mut acc = 0.0;
        for (a, d) in atoms.iter().zip(&self.dims) {
            acc += a.dot(&g[off..off + d]);
            off += d;
        }
        acc
    }

    /// Blockwise membership.
    pub fn contains(&self, x: &BlockVector, tol: f64) -> bool {
        x.num_blocks() == self.sets.len() && self.sets.iter().zip(x.blocks()).all(|(s, b)| s.contains(b, tol))
    }

    /// Starting vertex: each block's oracle output for the zero direction.
    pub fn initial_vertex(&self) -> Result<(BlockVector, Vec<Atom>)> {
        let zero = vec![0.0; self.dims.iter().sum()];
        let atoms = self.lmo(&zero)?;
        let x = BlockVector::zeros(&self.dims).with_data(self.densify(&atoms))?;
        Ok((x, atoms))
    }

    /// Quadratic model of `γ ↦ 𝓛(x + γd, y)`: returns the curvature
    /// `dᵀ∇²f d + λ‖Md‖²` when the objective is quadratic.
    pub fn curvature_along(&self, d: &[f64]) -> Option<f64> {
        let c = self.objective.curvature(d)?;
        let md = self.op.apply_vec(d);
        Some(c + self.lambda * norm_sq(&md))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{L1Ball, Simplex};

    #[derive(Debug)]
    struct Zero(usize);
    impl SmoothObjective for Zero {
        fn dim(&self) -> usize {
            self.0
        }
        fn value(&self, _: &[f64]) -> f64 {
            0.0
        }
        fn gradient(&self, _: &[f64], out: &mut [f64]) {
            out.iter_mut().for_each(|v| *v = 0.0);
        }
        fn is_quadratic(&self) -> bool {
            true
        }
        fn curvature(&self, _: &[f64]) -> Option<f64> {
            Some(0.0)
        }
    }

    fn zero_problem(lambda: f64) -> SplitProblem {
        let sets: Vec<Arc<dyn ConstraintSet>> = vec![
            Arc::new(L1Ball { dim: 2, radius: 5.0 }),
            Arc::new(L1Ball { dim: 2, radius: 5.0 }),
        ];
        SplitProblem::new(Arc::new(Zero(4)), sets, intersection_operator(2, 2).unwrap(), lambda).unwrap()
    }

    #[test]
    fn lagrangian_value_by_hand() {
        let p = zero_problem(1.0);
        let x = BlockVector::from_blocks(vec![vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        // <(2,0),(1,0)> + 1/2 * 1
        assert_eq!(p.lagrangian_value(&x, &[2.0, 0.0]).unwrap(), 2.5);
        assert_eq!(p.feasibility(&x), 1.0);
        let feasible = BlockVector::from_blocks(vec![vec![0.3, 0.1], vec![0.3, 0.1]]).unwrap();
        assert_eq!(p.lagrangian_value(&feasible, &[9.0, -3.0]).unwrap(), 0.0);
        assert_eq!(p.feasibility(&feasible), 0.0);
    }

    #[test]
    fn lagrangian_grad_intersection_closed_form() {
        let p = zero_problem(2.0);
        let x = BlockVector::from_blocks(vec![vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap();
        let y = [0.5, -1.0];
        let g = p.lagrangian_grad(&x, &y).unwrap();
        // y + λ(u − v) = (0.5 + 2, −1 − 1)
        assert_eq!(g.block(0), &[2.5, -2.0]);
        assert_eq!(g.block(1), &[-2.5, 2.0]);
        let zero = p.lagrangian_grad(&BlockVector::zeros(&[2, 2]), &[0.0, 0.0]).unwrap();
        assert!(zero.as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn dimension_errors() {
        let p = zero_problem(1.0);
        let x = BlockVector::from_blocks(vec![vec![1.0], vec![0.0, 0.0]]).unwrap();
        assert!(p.lagrangian_value(&x, &[0.0, 0.0]).is_err());
        let x = BlockVector::zeros(&[2, 2]);
        assert!(p.lagrangian_value(&x, &[0.0]).is_err());
        let sets: Vec<Arc<dyn ConstraintSet>> = vec![Arc::new(Simplex { dim: 3 })];
        assert!(SplitProblem::new(Arc::new(Zero(3)), sets.clone(), ConsistencyOperator::none(vec![3]), 0.0).is_err());
        assert!(SplitProblem::new(Arc::new(Zero(2)), sets, ConsistencyOperator::none(vec![3]), 1.0).is_err());
    }

    #[test]
    fn initial_vertex_is_lmo_of_zero() {
        let p = zero_problem(1.0);
        let (x, atoms) = p.initial_vertex().unwrap();
        assert_eq!(x.as_slice(), &[5.0, 0.0, 5.0, 0.0]);
        assert_eq!(atoms.len(), 2);
    }
}
