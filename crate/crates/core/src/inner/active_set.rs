use crate::error::{FwalError, Result};
use crate::linalg::dist_sq;
use crate::oracles::Atom;
use crate::problem::SplitProblem;

/// Convex-combination expansion `x = Σ α_v v` over product atoms (one atom
/// per block). Weights stay strictly positive and sum to one.
#[derive(Clone, Debug, Default)]
pub struct ActiveSet {
    atoms: Vec<Vec<Atom>>,
    weights: Vec<f64>,
}

impl ActiveSet {
    pub fn singleton(atoms: Vec<Atom>) -> Self {
        ActiveSet {
            atoms: vec![atoms],
            weights: vec![1.0],
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[Vec<Atom>] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[Atom], f64)> {
        self.atoms.iter().map(Vec::as_slice).zip(self.weights.iter().copied())
    }

    pub fn find(&self, atoms: &[Atom]) -> Option<usize> {
        self.atoms
            .iter()
            .position(|a| a.len() == atoms.len() && a.iter().zip(atoms).all(|(u, v)| u.same_as(v)))
    }

    /// Weights after a Frank-Wolfe move of size `γ` toward `s`.
    pub(crate) fn apply_fw(&mut self, s: Vec<Atom>, gamma: f64) {
        if gamma >= 1.0 {
            self.atoms = vec![s];
            self.weights = vec![1.0];
            return;
        }
        if gamma <= 0.0 {
            return;
        }
        self.weights.iter_mut().for_each(|w| *w *= 1.0 - gamma);
        match self.find(&s) {
            Some(i) => self.weights[i] += gamma,
            None => {
                self.atoms.push(s);
                self.weights.push(gamma);
            }
        }
        self.cleanup();
    }

    /// Weights after an away move of size `γ` from atom `v`; `drop` removes
    /// the atom (the move used the full step `α_v/(1 − α_v)`).
    pub(crate) fn apply_away(&mut self, v: usize, gamma: f64, drop: bool) {
        self.weights.iter_mut().for_each(|w| *w *= 1.0 + gamma);
        if drop {
            self.atoms.remove(v);
            self.weights.remove(v);
        } else {
            self.weights[v] -= gamma;
        }
        self.cleanup();
    }

    fn cleanup(&mut self) {
        let mut i = 0;
        while i < self.weights.len() {
            if self.weights[i] <= 0.0 {
                self.weights.remove(i);
                self.atoms.remove(i);
            } else {
                i += 1;
            }
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-13 {
            self.weights.iter_mut().for_each(|w| *w /= total);
        }
    }

    /// `Σ α_v v` in the flat layout of `p`.
    pub fn reconstruct(&self, p: &SplitProblem) -> Vec<f64> {
        let mut out = vec![0.0; p.block_dims().iter().sum()];
        for (atoms, w) in self.iter() {
            p.add_atoms(atoms, w, &mut out);
        }
        out
    }

    /// Checks positivity, the unit sum, and that the expansion reproduces
    /// `x` within `tol`.
    pub fn check(&self, p: &SplitProblem, x: &[f64], tol: f64) -> Result<()> {
        if self.is_empty() {
            return Err(FwalError::Invariant("empty active set".into()));
        }
        if let Some(w) = self.weights.iter().find(|w| !(**w > 0.0)) {
            return Err(FwalError::Invariant(format!("non-positive active weight {w}")));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(FwalError::Invariant(format!("active weights sum to {total}")));
        }
        let err = dist_sq(&self.reconstruct(p), x).sqrt();
        if err > tol {
            return Err(FwalError::Invariant(format!(
                "active set reconstructs the iterate with error {err:e}"
            )));
        }
        Ok(())
    }
}
