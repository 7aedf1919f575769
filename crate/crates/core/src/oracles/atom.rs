use serde::{Deserialize, Serialize};

use crate::linalg::{axpy, dot};

/// Output of a linear minimization oracle: an extreme point of one
/// constraint set, kept in whatever sparse form the oracle produced it.
///
/// Matrix atoms live in the row-major flattening of a `side × side` matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Atom {
    /// The origin. Both matrix sets contain it and it can carry weight.
    Zero,
    /// Sparse coordinates `(flat index, value)`, sorted by index.
    Sparse {
        entries: Vec<(usize, f64)>,
    },
    /// `scale · u uᵀ` with `‖u‖ = 1`.
    RankOne {
        scale: f64,
        u: Vec<f64>,
    },
    Dense {
        values: Vec<f64>,
    },
}

const MATCH_TOL: f64 = 1e-12;

impl Atom {
    pub fn coordinate(index: usize, value: f64) -> Atom {
        Atom::Sparse {
            entries: vec![(index, value)],
        }
    }

    /// `⟨atom, g⟩` where `g` is the flattened dense direction.
    pub fn dot(&self, g: &[f64]) -> f64 {
        match self {
            Atom::Zero => 0.0,
            Atom::Sparse { entries } => entries.iter().map(|&(i, v)| v * g[i]).sum(),
            Atom::RankOne { scale, u } => {
                let side = u.len();
                let mut acc = 0.0;
                for (i, ui) in u.iter().enumerate() {
                    if *ui != 0.0 {
                        acc += ui * dot(&g[i * side..(i + 1) * side], u);
                    }
                }
                scale * acc
            }
            Atom::Dense { values } => dot(values, g),
        }
    }

    /// `out += coef · atom`
    pub fn add_scaled_to(&self, coef: f64, out: &mut [f64]) {
        if coef == 0.0 {
            return;
        }
        match self {
            Atom::Zero => {}
            Atom::Sparse { entries } => {
                for &(i, v) in entries {
                    out[i] += coef * v;
                }
            }
            Atom::RankOne { scale, u } => {
                let side = u.len();
                for (i, ui) in u.iter().enumerate() {
                    let c = coef * scale * ui;
                    if c != 0.0 {
                        axpy(c, u, &mut out[i * side..(i + 1) * side]);
                    }
                }
            }
            Atom::Dense { values } => axpy(coef, values, out),
        }
    }

    pub fn to_dense(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        self.add_scaled_to(1.0, &mut out);
        out
    }

    pub fn norm_sq(&self) -> f64 {
        match self {
            Atom::Zero => 0.0,
            Atom::Sparse { entries } => entries.iter().map(|(_, v)| v * v).sum(),
            Atom::RankOne { scale, u } => {
                let n = dot(u, u);
                scale * scale * n * n
            }
            Atom::Dense { values } => dot(values, values),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Atom::Zero => true,
            Atom::Sparse { entries } => entries.iter().all(|(_, v)| v.is_finite()),
            Atom::RankOne { scale, u } => scale.is_finite() && u.iter().all(|v| v.is_finite()),
            Atom::Dense { values } => values.iter().all(|v| v.is_finite()),
        }
    }

    /// Number of structurally nonzero entries contributed to the flattened
    /// vector (rank-one atoms report their dense support).
    pub fn support_len(&self) -> usize {
        match self {
            Atom::Zero => 0,
            Atom::Sparse { entries } => entries.iter().filter(|(_, v)| *v != 0.0).count(),
            Atom::RankOne { u, .. } => {
                let k = u.iter().filter(|v| **v != 0.0).count();
                k * k
            }
            Atom::Dense { values } => values.iter().filter(|v| **v != 0.0).count(),
        }
    }

    /// Identity used for active-set bookkeeping: same variant and entries
    /// equal within `1e-12`. Rank-one atoms compare up to the sign of `u`.
    pub fn same_as(&self, other: &Atom) -> bool {
        match (self, other) {
            (Atom::Zero, Atom::Zero) => true,
            (Atom::Sparse { entries: a }, Atom::Sparse { entries: b }) => {
                a.len() == b.len()
                    && a.iter()
                        .zip(b)
                        .all(|((i, x), (j, y))| i == j && (x - y).abs() <= MATCH_TOL)
            }
            (Atom::RankOne { scale: s, u }, Atom::RankOne { scale: t, u: w }) => {
                u.len() == w.len()
                    && (s - t).abs() <= MATCH_TOL * (1.0 + s.abs())
                    && (dot(u, w).abs() - 1.0).abs() <= MATCH_TOL
            }
            (Atom::Dense { values: a }, Atom::Dense { values: b }) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= MATCH_TOL)
            }
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_dot_and_densify_agree() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let a = Atom::RankOne {
            scale: 2.0,
            u: vec![h, h],
        };
        let dense = a.to_dense(4);
        for v in &dense {
            assert!((v - 1.0).abs() < 1e-15);
        }
        let g = [1.0, 2.0, 3.0, 4.0];
        assert!((a.dot(&g) - dot(&dense, &g)).abs() < 1e-14);
        assert!((a.norm_sq() - dot(&dense, &dense)).abs() < 1e-14);
    }

    #[test]
    fn rank_one_identity_ignores_sign() {
        let a = Atom::RankOne {
            scale: 1.0,
            u: vec![0.6, 0.8],
        };
        let b = Atom::RankOne {
            scale: 1.0,
            u: vec![-0.6, -0.8],
        };
        assert!(a.same_as(&b));
        assert!(!a.same_as(&Atom::Zero));
    }

    #[test]
    fn sparse_identity_needs_equal_entries() {
        assert!(Atom::coordinate(1, 2.0).same_as(&Atom::coordinate(1, 2.0)));
        assert!(!Atom::coordinate(1, 2.0).same_as(&Atom::coordinate(1, -2.0)));
        assert!(!Atom::coordinate(0, 2.0).same_as(&Atom::coordinate(1, 2.0)));
    }
}
