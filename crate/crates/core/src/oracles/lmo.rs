//! Linear minimization oracles. Each returns an extreme point minimizing
//! `⟨s, r⟩` over its set. Ties go to the lowest (lexicographic) index.

use super::Atom;
use crate::error::{check_len, FwalError, Result};
use crate::linalg::{lanczos_extreme, Extreme, LanczosOptions, SymMatrix};

/// `−β·sign(r_i)·e_i` at `i = argmax |r_i|`; `r = 0` gives `+β·e_1`.
pub fn lmo_l1_ball(r: &[f64], beta: f64) -> Result<Atom> {
    if r.is_empty() {
        return Err(FwalError::InvalidArgument("l1-ball oracle on an empty vector".into()));
    }
    check_radius(beta)?;
    let mut best = 0;
    for (i, v) in r.iter().enumerate() {
        if v.abs() > r[best].abs() {
            best = i;
        }
    }
    let value = if r[best] > 0.0 { -beta } else { beta };
    Ok(Atom::coordinate(best, value))
}

/// Vertex `e_i` of the probability simplex at `i = argmin r_i`.
pub fn lmo_simplex(r: &[f64]) -> Result<Atom> {
    if r.is_empty() {
        return Err(FwalError::InvalidArgument("simplex oracle on an empty vector".into()));
    }
    let mut best = 0;
    for (i, v) in r.iter().enumerate() {
        if *v < r[best] {
            best = i;
        }
    }
    Ok(Atom::coordinate(best, 1.0))
}

/// Index of the vertex minimizing `⟨v, r⟩`.
pub fn lmo_vertex_index(vertices: &[Vec<f64>], r: &[f64]) -> Result<usize> {
    if vertices.is_empty() {
        return Err(FwalError::InvalidArgument("polytope without vertices".into()));
    }
    let mut best = 0;
    let mut best_val = f64::INFINITY;
    for (k, v) in vertices.iter().enumerate() {
        check_len(r.len(), v.len(), "polytope vertex")?;
        let val = crate::linalg::dot(v, r);
        if val < best_val {
            best_val = val;
            best = k;
        }
    }
    Ok(best)
}

pub fn lmo_vertex_polytope(vertices: &[Vec<f64>], r: &[f64]) -> Result<Atom> {
    let k = lmo_vertex_index(vertices, r)?;
    Ok(Atom::Dense {
        values: vertices[k].clone(),
    })
}

/// Oracle for the sparse matrix set: `β₁(E_ij + E_ji)/2` at the
/// lexicographically first minimizer of `D_ij + D_ji`, or the zero atom
/// when that minimum is nonnegative. With `diagonal_only`, only `β₁E_ii`
/// and zero are candidates.
pub fn lmo_psd_l1(d: &SymMatrix, beta1: f64, diagonal_only: bool) -> Result<Atom> {
    check_radius(beta1)?;
    lmo_psd_l1_flat(d.as_slice(), d.dim(), beta1, diagonal_only)
}

pub(crate) fn lmo_psd_l1_flat(d: &[f64], side: usize, beta1: f64, diagonal_only: bool) -> Result<Atom> {
    check_len(side * side, d.len(), "matrix direction")?;
    let mut best = (0usize, 0usize);
    let mut best_val = f64::INFINITY;
    for i in 0..side {
        let cols = if diagonal_only { i..i + 1 } else { i..side };
        for j in cols {
            let v = d[i * side + j] + d[j * side + i];
            if v < best_val {
                best_val = v;
                best = (i, j);
            }
        }
    }
    if !(best_val < 0.0) {
        return Ok(Atom::Zero);
    }
    let (i, j) = best;
    let entries = if i == j {
        vec![(i * side + i, beta1)]
    } else {
        let half = 0.5 * beta1;
        let (a, b) = (i * side + j, j * side + i);
        vec![(a.min(b), half), (a.max(b), half)]
    };
    Ok(Atom::Sparse { entries })
}

/// Oracle for the PSD trace-norm ball: `β₂ u uᵀ` with `u` the eigenvector
/// of the most negative eigenvalue of `D`, or zero when `λ_min(D) ≥ −tol`.
pub fn lmo_psd_trace(d: &SymMatrix, beta2: f64, opts: LanczosOptions) -> Result<Atom> {
    check_radius(beta2)?;
    lmo_psd_trace_flat(d.as_slice(), d.dim(), beta2, opts)
}

pub(crate) fn lmo_psd_trace_flat(d: &[f64], side: usize, beta2: f64, opts: LanczosOptions) -> Result<Atom> {
    check_len(side * side, d.len(), "matrix direction")?;
    // direction may be slightly asymmetric from rounding; use its symmetric part
    let matvec = |x: &[f64], out: &mut [f64]| {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..side {
                acc += 0.5 * (d[i * side + j] + d[j * side + i]) * x[j];
            }
            *o = acc;
        }
    };
    let pair = lanczos_extreme(matvec, side, Extreme::Smallest, opts)?;
    if pair.eigenvalue < -opts.tol {
        Ok(Atom::RankOne {
            scale: beta2,
            u: pair.eigenvector,
        })
    } else {
        Ok(Atom::Zero)
    }
}

fn check_radius(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(FwalError::InvalidArgument(format!(
            "radius must be positive, got {beta}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, jacobi_eig, random_symmetric};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn l1_vertices(n: usize, beta: f64) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for i in 0..n {
            for s in [beta, -beta] {
                let mut v = vec![0.0; n];
                v[i] = s;
                out.push(v);
            }
        }
        out
    }

    fn brute_min(vertices: &[Vec<f64>], r: &[f64]) -> f64 {
        vertices.iter().map(|v| dot(v, r)).fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn l1_examples() {
        let r = [3.0, -1.0, 2.0];
        let a = lmo_l1_ball(&r, 2.0).unwrap();
        assert_eq!(a, Atom::coordinate(0, -2.0));
        assert_eq!(a.dot(&r), brute_min(&l1_vertices(3, 2.0), &r));

        assert_eq!(lmo_l1_ball(&[0.0, 0.0], 1.0).unwrap(), Atom::coordinate(0, 1.0));

        let r = [0.0, -5.0];
        let a = lmo_l1_ball(&r, 3.0).unwrap();
        assert_eq!(a, Atom::coordinate(1, 3.0));
        assert_eq!(a.dot(&r), brute_min(&l1_vertices(2, 3.0), &r));
    }

    #[test]
    fn l1_rejects_empty() {
        assert!(lmo_l1_ball(&[], 1.0).is_err());
        assert!(lmo_l1_ball(&[1.0], 0.0).is_err());
    }

    #[test]
    fn simplex_examples() {
        assert_eq!(lmo_simplex(&[1.0, 0.0, 2.0]).unwrap(), Atom::coordinate(1, 1.0));
        assert_eq!(lmo_simplex(&[0.4, 0.4, 0.4]).unwrap(), Atom::coordinate(0, 1.0));
        assert_eq!(lmo_simplex(&[-1.0, -1.0, -2.0]).unwrap(), Atom::coordinate(2, 1.0));
    }

    #[test]
    fn vertex_polytope_examples() {
        let verts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(lmo_vertex_index(&verts, &[-1.0, 0.0]).unwrap(), 1);
        assert_eq!(lmo_vertex_index(&verts, &[0.0, 0.0]).unwrap(), 0);
        assert_eq!(lmo_vertex_index(&verts[2..], &[5.0, 5.0]).unwrap(), 0);
        assert!(lmo_vertex_index(&verts, &[1.0]).is_err());
        assert!(lmo_vertex_index(&[], &[1.0]).is_err());
    }

    #[test]
    fn psd_l1_examples() {
        let d = SymMatrix::from_rows(&[vec![0.0, -3.0], vec![-3.0, 0.0]]).unwrap();
        let a = lmo_psd_l1(&d, 2.0, false).unwrap();
        assert_eq!(
            a,
            Atom::Sparse {
                entries: vec![(1, 1.0), (2, 1.0)]
            }
        );
        let d = SymMatrix::from_diag(&[-5.0, 1.0]);
        assert_eq!(lmo_psd_l1(&d, 2.0, false).unwrap(), Atom::coordinate(0, 2.0));
        let d = SymMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 0.0]]).unwrap();
        assert_eq!(lmo_psd_l1(&d, 2.0, false).unwrap(), Atom::Zero);
    }

    #[test]
    fn psd_l1_diagonal_only_skips_pairs() {
        let d = SymMatrix::from_rows(&[vec![-1.0, -3.0], vec![-3.0, 0.0]]).unwrap();
        assert_eq!(lmo_psd_l1(&d, 1.0, true).unwrap(), Atom::coordinate(0, 1.0));
    }

    #[test]
    fn psd_trace_examples() {
        let opts = LanczosOptions::default();
        let d = SymMatrix::from_diag(&[2.0, -1.0]);
        match lmo_psd_trace(&d, 3.0, opts).unwrap() {
            Atom::RankOne { scale, u } => {
                assert_eq!(scale, 3.0);
                assert!((u[1].abs() - 1.0).abs() < 1e-10);
            }
            other => panic!("unexpected atom {other:?}"),
        }
        assert_eq!(lmo_psd_trace(&SymMatrix::identity(3), 1.0, opts).unwrap(), Atom::Zero);
    }

    #[test]
    fn psd_trace_value_matches_eigen_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d = random_symmetric(12, &mut rng);
        let e = jacobi_eig(&d, 1e-14).unwrap();
        let (lmin, _) = e.smallest();
        assert!(lmin < 0.0);
        let atom = lmo_psd_trace(&d, 2.5, LanczosOptions::default()).unwrap();
        assert!((atom.dot(d.as_slice()) - 2.5 * lmin).abs() < 1e-6);
    }
}
