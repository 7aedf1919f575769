//! Randomized self-checks of the oracles, the Lagrangian derivatives and the
//! away-step bookkeeping against independent references (enumeration, dense
//! eigendecomposition, finite differences).

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use web_time::Instant;

use crate::error::Result;
use crate::linalg::{dist_sq, dot, jacobi_eig, norm, random_symmetric, SymMatrix};
use crate::oracles::{
    lmo_psd_l1, lmo_psd_trace, ConstraintSet, L1Ball, PsdL1Ball, PsdTraceBall, Simplex, VertexPolytope,
};
use crate::problem::{
    intersection_operator, BlockVector, ConsistencyOperator, Logistic, Quadratic, Replicated, SmoothObjective,
    SplitProblem, SquaredDistance,
};
use crate::solver::{FwalSolver, InnerMethod, SolverConfig, StepSizeSchedule};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Largest observed violation measure; compare with `tolerance`.
    pub worst: f64,
    pub tolerance: f64,
    pub probes: usize,
    pub elapsed_s: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Random directions / points per set.
    pub probes: usize,
    /// Random problems for the derivative checks.
    pub problems: usize,
    /// Outer iterations per away-step run, and the number of runs.
    pub afw_steps: usize,
    pub afw_runs: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 0,
            probes: 1000,
            problems: 100,
            afw_steps: 10_000,
            afw_runs: 5,
        }
    }
}

impl VerifyOptions {
    /// A reduced configuration for interactive use.
    pub fn quick(seed: u64) -> Self {
        VerifyOptions {
            seed,
            probes: 200,
            problems: 20,
            afw_steps: 1000,
            afw_runs: 2,
        }
    }
}

struct Tracker {
    name: &'static str,
    worst: f64,
    tolerance: f64,
    probes: usize,
    start: Instant,
}

impl Tracker {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Tracker {
            name,
            worst: 0.0,
            tolerance,
            probes: 0,
            start: Instant::now(),
        }
    }

    fn observe(&mut self, violation: f64) {
        self.probes += 1;
        // NaN counts as a failure
        if !(violation <= self.worst) {
            self.worst = if violation.is_nan() { f64::INFINITY } else { violation };
        }
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            name: self.name.to_string(),
            passed: self.worst <= self.tolerance,
            worst: self.worst,
            tolerance: self.tolerance,
            probes: self.probes,
            elapsed_s: self.start.elapsed().as_secs_f64(),
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn random_polytope(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Vec<f64>> {
    let count = rng.random_range(2..=8);
    (0..count).map(|_| gaussian(rng, dim)).collect()
}

/// Vector oracles never lose to an explicit vertex enumeration.
pub fn check_vector_lmos(opts: &VerifyOptions) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut tr = Tracker::new("vector_lmo_vs_enumeration", 1e-12);
    for dim in 1..=8 {
        let radius = rng.random_range(0.1..3.0);
        let ball = L1Ball { dim, radius };
        let simplex = Simplex { dim };
        let verts = random_polytope(&mut rng, dim);
        let poly = VertexPolytope::new(verts.clone())?;
        let mut ball_verts = Vec::new();
        for i in 0..dim {
            for s in [radius, -radius] {
                let mut v = vec![0.0; dim];
                v[i] = s;
                ball_verts.push(v);
            }
        }
        let simplex_verts: Vec<Vec<f64>> = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let cases: [(&dyn ConstraintSet, &Vec<Vec<f64>>); 3] =
            [(&ball, &ball_verts), (&simplex, &simplex_verts), (&poly, &verts)];
        for _ in 0..opts.probes {
            let r = gaussian(&mut rng, dim);
            for (set, vs) in cases {
                let atom = set.lmo(&r)?;
                let got = atom.dot(&r);
                let best = vs.iter().map(|v| dot(v, &r)).fold(f64::INFINITY, f64::min);
                let member = set.contains(&atom.to_dense(dim), 1e-8);
                tr.observe(if member {
                    (got - best).max(0.0) / (1.0 + best.abs())
                } else {
                    f64::INFINITY
                });
            }
        }
    }
    Ok(tr.finish())
}

/// Matrix oracles against a dense eigendecomposition (trace ball) and an
/// exhaustive scan of the atoms (sparse ball).
pub fn check_matrix_lmos(opts: &VerifyOptions) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x11);
    let mut tr = Tracker::new("matrix_lmo_vs_eigendecomposition", 1e-6);
    for k in 0..opts.probes {
        let n = 2 + k % 9;
        let mut d = random_symmetric(n, &mut rng);
        if k % 5 == 0 {
            // positive definite directions exercise the zero atom
            d = SymMatrix::from_fn(n, |i, j| d.get(i, j) * 0.1 + if i == j { 2.0 } else { 0.0 });
        }
        let beta = rng.random_range(0.5..2.0);

        let trace_set = PsdTraceBall::new(n, beta);
        let atom = lmo_psd_trace(&d, beta, trace_set.lanczos)?;
        let lam_min = jacobi_eig(&d, 1e-13)?.smallest().0;
        let want = (beta * lam_min).min(0.0);
        let got = atom.dot(d.as_slice());
        let member = trace_set.contains(&atom.to_dense(n * n), 1e-8);
        tr.observe(if member {
            (got - want).abs() / (1.0 + want.abs())
        } else {
            f64::INFINITY
        });

        let l1_set = PsdL1Ball {
            side: n,
            radius: beta,
            diagonal_only: k % 2 == 1,
        };
        let atom = lmo_psd_l1(&d, beta, l1_set.diagonal_only)?;
        let mut best = 0.0f64;
        for i in 0..n {
            for j in i..n {
                if l1_set.diagonal_only && i != j {
                    continue;
                }
                let v = if i == j { beta * d.get(i, i) } else { beta * d.get(i, j) };
                best = best.min(v);
            }
        }
        let got = atom.dot(d.as_slice());
        let member = l1_set.contains(&atom.to_dense(n * n), 1e-8);
        tr.observe(if member {
            (got - best).abs() / (1.0 + best.abs())
        } else {
            f64::INFINITY
        });
    }
    Ok(tr.finish())
}

/// Projections are idempotent, non-expansive and land in the set.
pub fn check_projections(opts: &VerifyOptions) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x22);
    let mut tr = Tracker::new("projection_properties", 1e-8);
    for k in 0..opts.probes {
        let n = 2 + k % 5;
        let beta = rng.random_range(0.5..2.0);
        let sets: Vec<Box<dyn ConstraintSet>> = vec![
            Box::new(L1Ball {
                dim: n * n,
                radius: beta,
            }),
            Box::new(Simplex { dim: n * n }),
            Box::new(PsdL1Ball {
                side: n,
                radius: beta,
                diagonal_only: false,
            }),
            Box::new(PsdTraceBall::new(n, beta)),
        ];
        for set in &sets {
            let (a, b) = if set.name().starts_with("psd") {
                (
                    random_symmetric(n, &mut rng).into_vec(),
                    random_symmetric(n, &mut rng).into_vec(),
                )
            } else {
                (gaussian(&mut rng, n * n), gaussian(&mut rng, n * n))
            };
            let pa = set.project(&a)?;
            let pb = set.project(&b)?;
            let ppa = set.project(&pa)?;
            tr.observe(dist_sq(&pa, &ppa).sqrt());
            tr.observe((dist_sq(&pa, &pb).sqrt() - dist_sq(&a, &b).sqrt()).max(0.0));
            tr.observe(if set.contains(&pa, 1e-8) { 0.0 } else { f64::INFINITY });
        }
    }
    Ok(tr.finish())
}

fn random_objective(rng: &mut ChaCha8Rng, dim: usize, kind: usize) -> Result<Arc<dyn SmoothObjective>> {
    Ok(match kind % 3 {
        0 => Arc::new(SquaredDistance {
            target: gaussian(rng, dim),
            weight: rng.random_range(0.5..2.0),
        }),
        1 => {
            let a: Vec<Vec<f64>> = (0..dim + 2).map(|_| gaussian(rng, dim)).collect();
            let q = SymMatrix::from_fn(dim, |i, j| a.iter().map(|r| r[i] * r[j]).sum::<f64>() / dim as f64);
            Arc::new(Quadratic::new(q, gaussian(rng, dim))?)
        }
        _ => {
            let m = dim + 3;
            let feats: Vec<Vec<f64>> = (0..m).map(|_| gaussian(rng, dim)).collect();
            let labels = (0..m).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
            Arc::new(Logistic::new(feats, labels)?)
        }
    })
}

fn random_problem(rng: &mut ChaCha8Rng, k: usize) -> Result<SplitProblem> {
    let dim = rng.random_range(2..=6);
    let blocks = 2 + k % 2;
    let sets: Vec<Arc<dyn ConstraintSet>> = (0..blocks)
        .map(|b| -> Arc<dyn ConstraintSet> {
            match (k + b) % 3 {
                0 => Arc::new(L1Ball { dim, radius: 1.5 }),
                1 => Arc::new(Simplex { dim }),
                _ => Arc::new(VertexPolytope::new(random_polytope(rng, dim)).expect("nonempty polytope")),
            }
        })
        .collect();
    let lambda = rng.random_range(0.1..5.0);
    if k % 4 == 3 {
        let out = rng.random_range(1..=dim);
        let mats = (0..blocks).map(|_| gaussian(rng, out * dim)).collect();
        let op = ConsistencyOperator::explicit(out, vec![dim; blocks], mats)?;
        let obj = random_objective(rng, dim * blocks, k)?;
        SplitProblem::new(obj, sets, op, lambda)
    } else {
        let loss = random_objective(rng, dim, k)?;
        let op = intersection_operator(blocks, dim)?;
        SplitProblem::new(Arc::new(Replicated::new(loss, blocks)?), sets, op, lambda)
    }
}

/// Lagrangian gradient against central differences and the FW gap sign.
pub fn check_gradients(opts: &VerifyOptions) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x33);
    let mut tr = Tracker::new("lagrangian_gradient_vs_finite_differences", 1e-5);
    for k in 0..opts.problems {
        let p = random_problem(&mut rng, k)?;
        let m: usize = p.block_dims().iter().sum();
        let x = BlockVector::zeros(p.block_dims()).with_data(gaussian(&mut rng, m))?;
        let y = gaussian(&mut rng, p.dual_dim());
        let g = p.lagrangian_grad(&x, &y)?;
        let h = 1e-6;
        let mut fd = vec![0.0; m];
        for (i, f) in fd.iter_mut().enumerate() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp.as_mut_slice()[i] += h;
            xm.as_mut_slice()[i] -= h;
            *f = (p.lagrangian_value(&xp, &y)? - p.lagrangian_value(&xm, &y)?) / (2.0 * h);
        }
        tr.observe(dist_sq(g.as_slice(), &fd).sqrt() / norm(g.as_slice()).max(1.0));
        // the gap is only meaningful at feasible points
        let (x0, _) = p.initial_vertex()?;
        let gap = crate::inner::fw_duality_gap(&p, &x0, &y)?;
        tr.observe((-gap).max(0.0));
    }
    Ok(tr.finish())
}

/// `⟨Mx, y⟩ = ⟨x, Mᵀy⟩` for both operator encodings.
pub fn check_adjoint(opts: &VerifyOptions) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x44);
    let mut tr = Tracker::new("operator_adjoint_identity", 1e-10);
    for k in 0..opts.problems {
        let dim = rng.random_range(1..=6);
        let blocks = rng.random_range(2..=4);
        let op = if k % 2 == 0 {
            intersection_operator(blocks, dim)?
        } else {
            let out = rng.random_range(1..=5);
            let dims: Vec<usize> = (0..blocks).map(|_| rng.random_range(1..=4)).collect();
            let mats = dims.iter().map(|d| gaussian(&mut rng, out * d)).collect();
            ConsistencyOperator::explicit(out, dims, mats)?
        };
        let x = gaussian(&mut rng, op.in_dim());
        let y = gaussian(&mut rng, op.out_dim());
        let lhs = dot(&op.apply_vec(&x), &y);
        let rhs = dot(&x, &op.adjoint_vec(&y));
        tr.observe((lhs - rhs).abs() / (1.0 + lhs.abs()));
    }
    Ok(tr.finish())
}

/// Full away-step runs on random product-polytope quadratics: active-set
/// reconstruction, weight simplex, per-step monotonicity of `𝓛(·, y_t)` and
/// the drop-step bound. The worst value is the largest violation relative to
/// each invariant's tolerance (≤ 1 passes).
pub fn check_afw_invariants(opts: &VerifyOptions) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x55);
    let mut tr = Tracker::new("away_step_invariants", 1.0);
    for run in 0..opts.afw_runs {
        let dim = rng.random_range(3..=6);
        let sets: Vec<Arc<dyn ConstraintSet>> = vec![
            Arc::new(VertexPolytope::new(random_polytope(&mut rng, dim))?),
            if run % 2 == 0 {
                Arc::new(Simplex { dim })
            } else {
                Arc::new(L1Ball { dim, radius: 1.0 })
            },
        ];
        let loss = random_objective(&mut rng, dim, 1)?;
        let p = SplitProblem::intersection(loss, sets, 1.0)?;
        let cfg = SolverConfig {
            inner: Some(InnerMethod::Afw),
            schedule: Some(StepSizeSchedule::Constant { eta0: 0.1 }),
            max_outer_iters: opts.afw_steps,
            divergence_factor: 0.0,
            ..SolverConfig::default()
        };
        let mut s = FwalSolver::new(&p, &cfg)?;
        for _ in 0..opts.afw_steps {
            let info = s.step()?;
            let before = info.report.lagrangian_before;
            let increase = info.record.lagrangian - before;
            tr.observe(increase.max(0.0) / (1e-12 * (1.0 + before.abs())));
            let active = s.active().expect("away steps keep an active set");
            let recon = crate::inner::reconstruction_error(&p, s.x(), active);
            tr.observe(recon / 1e-8);
            let total: f64 = active.weights().iter().sum();
            tr.observe((total - 1.0).abs() / 1e-10);
            let positive = active.weights().iter().all(|w| *w > 0.0);
            tr.observe(if positive { 0.0 } else { f64::INFINITY });
            let bound = s.iterations() + 1;
            tr.observe(s.drop_steps() as f64 / bound as f64);
        }
    }
    Ok(tr.finish())
}

pub fn run_all(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    Ok(vec![
        check_vector_lmos(opts)?,
        check_matrix_lmos(opts)?,
        check_projections(opts)?,
        check_gradients(opts)?,
        check_adjoint(opts)?,
        check_afw_invariants(opts)?,
    ])
}
