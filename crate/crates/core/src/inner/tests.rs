use std::sync::Arc;

use super::*;
use crate::linalg::SymMatrix;
use crate::oracles::{ConstraintSet, Simplex, VertexPolytope};
use crate::problem::{BlockVector, ConsistencyOperator, Quadratic, SplitProblem, SquaredDistance};

fn single(obj: Arc<dyn crate::problem::SmoothObjective>, set: Arc<dyn ConstraintSet>) -> SplitProblem {
    let d = set.dim();
    SplitProblem::new(obj, vec![set], ConsistencyOperator::none(vec![d]), 1.0).unwrap()
}

fn lagr(p: &SplitProblem, x: &BlockVector) -> f64 {
    p.lagrangian_value(x, &[]).unwrap()
}

#[test]
fn fw_step_reaches_simplex_vertex() {
    let p = single(
        Arc::new(SquaredDistance::new(vec![0.0, 1.0])),
        Arc::new(Simplex { dim: 2 }),
    );
    let x = BlockVector::from_blocks(vec![vec![1.0, 0.0]]).unwrap();
    let (next, rep) = fw_step(&p, &x, &[]).unwrap();
    assert_eq!(rep.gamma, 1.0);
    assert!((rep.fw_gap - 4.0).abs() < 1e-12);
    assert_eq!(next.as_slice(), &[0.0, 1.0]);
}

#[test]
fn fw_step_at_minimizer_stays() {
    let p = single(
        Arc::new(SquaredDistance::new(vec![0.25, 0.75])),
        Arc::new(Simplex { dim: 2 }),
    );
    let x = BlockVector::from_blocks(vec![vec![0.25, 0.75]]).unwrap();
    let (next, rep) = fw_step(&p, &x, &[]).unwrap();
    assert!(rep.fw_gap.abs() < 1e-12);
    assert_eq!(rep.gamma, 0.0);
    assert_eq!(next.as_slice(), x.as_slice());
    assert!(fw_duality_gap(&p, &x, &[]).unwrap().abs() < 1e-8);
}

#[test]
fn afw_singleton_takes_fw_direction() {
    let p = single(
        Arc::new(SquaredDistance::new(vec![0.2, 0.3, 0.5])),
        Arc::new(Simplex { dim: 3 }),
    );
    let (x, atoms) = p.initial_vertex().unwrap();
    let active = ActiveSet::singleton(atoms);
    let (next, act, rep) = afw_nondrop_step(&p, &x, &active, &[], drop_cap(0)).unwrap();
    assert_eq!(rep.kind, StepKind::Fw);
    assert_eq!(rep.away_gap, 0.0);
    assert_eq!(act.len(), 2);
    act.check(&p, next.as_slice(), 1e-12).unwrap();
    assert!(lagr(&p, &next) <= lagr(&p, &x));
}

#[test]
fn afw_drop_step_evicts_atom() {
    // x = 0.2 e1 + 0.8 e2 with the target past e2: the away step from e1 is
    // clipped at its bound, so e1 is dropped and a FW step follows.
    let p = single(
        Arc::new(SquaredDistance::new(vec![-1.0, 2.0, 0.0])),
        Arc::new(Simplex { dim: 3 }),
    );
    let mut active = ActiveSet::singleton(vec![crate::oracles::Atom::coordinate(0, 1.0)]);
    active.apply_fw(vec![crate::oracles::Atom::coordinate(1, 1.0)], 0.8);
    let x = BlockVector::from_blocks(vec![vec![0.2, 0.8, 0.0]]).unwrap();
    let (next, act, rep) = afw_nondrop_step(&p, &x, &active, &[], drop_cap(0)).unwrap();
    assert_eq!(rep.drop_steps_taken, 1);
    assert_eq!(rep.kind, StepKind::Fw);
    assert_eq!(act.len(), 1);
    assert!((next.as_slice()[1] - 1.0).abs() < 1e-12);
    act.check(&p, next.as_slice(), 1e-12).unwrap();
}

#[test]
fn afw_rejects_inconsistent_active_set() {
    let p = single(
        Arc::new(SquaredDistance::new(vec![0.0, 1.0])),
        Arc::new(Simplex { dim: 2 }),
    );
    let active = ActiveSet::singleton(vec![crate::oracles::Atom::coordinate(0, 1.0)]);
    let x = BlockVector::from_blocks(vec![vec![0.0, 1.0]]).unwrap();
    assert!(afw_nondrop_step(&p, &x, &active, &[], 10).is_err());
}

#[test]
fn afw_segment_matches_grid() {
    let a = vec![1.0, -0.5];
    let b = vec![-0.3, 0.8];
    let q = SymMatrix::from_rows(&[vec![3.0, 0.4], vec![0.4, 1.0]]).unwrap();
    let obj = Quadratic::centered(q, &[0.9, 0.9]).unwrap();
    let p = single(
        Arc::new(obj),
        Arc::new(VertexPolytope::new(vec![a.clone(), b.clone()]).unwrap()),
    );
    let (mut x, atoms) = p.initial_vertex().unwrap();
    let mut active = ActiveSet::singleton(atoms);
    for t in 0..50 {
        let (nx, na, _) = afw_nondrop_step(&p, &x, &active, &[], drop_cap(t)).unwrap();
        x = nx;
        active = na;
    }
    let n = 1_000_000;
    let point =
        |s: f64| BlockVector::from_blocks(vec![vec![a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]]).unwrap();
    let best = (0..=n)
        .map(|i| i as f64 / n as f64)
        .min_by(|u, v| lagr(&p, &point(*u)).total_cmp(&lagr(&p, &point(*v))))
        .unwrap();
    let err = crate::linalg::dist_sq(x.as_slice(), point(best).as_slice()).sqrt();
    assert!(err < 1e-6, "{err}");
}

#[test]
fn nonquadratic_step_uses_golden_section() {
    let feats = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
    let obj = crate::problem::Logistic::new(feats, vec![1.0, -1.0, 1.0]).unwrap();
    let p = single(Arc::new(obj), Arc::new(crate::oracles::L1Ball { dim: 2, radius: 1.0 }));
    let (mut x, _) = p.initial_vertex().unwrap();
    let mut prev = lagr(&p, &x);
    for _ in 0..30 {
        let (nx, rep) = fw_step(&p, &x, &[]).unwrap();
        assert!(rep.gamma >= 0.0 && rep.gamma <= 1.0);
        let v = lagr(&p, &nx);
        assert!(v <= prev + 1e-14);
        prev = v;
        x = nx;
    }
}
