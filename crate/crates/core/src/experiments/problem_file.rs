use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{FwalError, Result};
use crate::linalg::LanczosOptions;
use crate::oracles::SetSpec;
use crate::problem::{ConsistencyOperator, ObjectiveSpec, SplitProblem, DEFAULT_LAMBDA};
use crate::solver::{fwal_solve, write_trace_csv, SolveError, SolveOutput, SolverConfig, StopReason};

/// A problem as read by `fwal solve`.
///
/// Without `coupling` the blocks are copies of one variable (an intersection)
/// and `objective` is defined on that variable; with an explicit coupling the
/// objective acts on the stacked blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub objective: ObjectiveSpec,
    pub sets: Vec<SetSpec>,
    #[serde(default)]
    pub coupling: Option<ConsistencyOperator>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Trace-ball sets without explicit eigensolver settings draw their
    /// Lanczos start vectors from `solver.seed`.
    pub fn build(&self) -> Result<SplitProblem> {
        let objective = self.objective.build()?;
        let sets = self
            .sets
            .iter()
            .map(|spec| match spec {
                SetSpec::PsdTraceBall {
                    side,
                    radius,
                    lanczos: None,
                } => SetSpec::PsdTraceBall {
                    side: *side,
                    radius: *radius,
                    lanczos: Some(LanczosOptions {
                        seed: LanczosOptions::default().seed ^ self.solver.seed,
                        ..LanczosOptions::default()
                    }),
                }
                .build(),
                _ => spec.build(),
            })
            .collect::<Result<Vec<_>>>()?;
        let lambda = self.lambda.unwrap_or(DEFAULT_LAMBDA);
        match &self.coupling {
            None => SplitProblem::intersection(objective, sets, lambda),
            Some(op) => SplitProblem::new(objective, sets, op.clone(), lambda),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub stop: StopReason,
    pub iterations: usize,
    pub drop_steps: usize,
    pub final_objective: f64,
    pub final_feasibility: f64,
    pub final_fw_gap: f64,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl SolveReport {
    pub fn from_output(p: &SplitProblem, out: &SolveOutput) -> Self {
        let last = out.trace.last();
        SolveReport {
            stop: out.stop,
            iterations: out.iterations,
            drop_steps: out.drop_steps,
            final_objective: p.objective().value(out.x.as_slice()),
            final_feasibility: p.feasibility(&out.x),
            final_fw_gap: last.map_or(f64::NAN, |r| r.fw_gap),
            x: out.x.to_blocks(),
            y: out.y.clone(),
        }
    }
}

/// Solves a problem file; writes `trace.csv` and `solution.json` into
/// `out_dir` when given. A failed solve still writes the partial trace.
pub fn solve_problem_file(pf: &ProblemFile, out_dir: Option<&Path>) -> std::result::Result<SolveReport, FwalError> {
    let p = pf.build()?;
    let (out, err) = match fwal_solve(&p, &pf.solver) {
        Ok(out) => (out, None),
        Err(SolveError { error, partial }) => (*partial, Some(error)),
    };
    let report = SolveReport::from_output(&p, &out);
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        write_trace_csv(BufWriter::new(File::create(dir.join("trace.csv"))?), &out.trace)?;
        if err.is_none() {
            serde_json::to_writer_pretty(BufWriter::new(File::create(dir.join("solution.json"))?), &report)?;
        }
    }
    match err {
        Some(e) => Err(e),
        None => Ok(report),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"{
        "objective": {"type": "squared_distance", "target": [2.0, 0.0]},
        "sets": [
            {"type": "l1_ball", "dim": 2, "radius": 1.0},
            {"type": "l1_ball", "dim": 2, "radius": 2.0}
        ],
        "solver": {"max_outer_iters": 5000}
    }"#;

    #[test]
    fn example_file_solves() {
        let pf = ProblemFile::from_json(EXAMPLE).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let r = solve_problem_file(&pf, Some(dir.path())).unwrap();
        for b in &r.x {
            assert!((b[0] - 1.0).abs() < 1e-4 && b[1].abs() < 1e-4, "{b:?}");
        }
        assert!(dir.path().join("trace.csv").exists());
        let sol: SolveReport = serde_json::from_reader(File::open(dir.path().join("solution.json")).unwrap()).unwrap();
        assert_eq!(sol.iterations, r.iterations);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(ProblemFile::from_json(
            r#"{"objective": {"type": "squared_distance", "target": [0]}, "sets": [], "extra": 1}"#
        )
        .is_err());
    }

    #[test]
    fn seed_only_moves_lanczos_starts() {
        let text = |seed: u64| {
            format!(
                r#"{{"objective": {{"type": "squared_distance", "target": [2.0, 0.5, 0.5, 1.0]}},
                    "sets": [{{"type": "psd_trace_ball", "side": 2, "radius": 1.0}},
                             {{"type": "psd_l1_ball", "side": 2, "radius": 2.0}}],
                    "solver": {{"max_outer_iters": 3000, "seed": {seed}}}}}"#
            )
        };
        let a = solve_problem_file(&ProblemFile::from_json(&text(0)).unwrap(), None).unwrap();
        let b = solve_problem_file(&ProblemFile::from_json(&text(9)).unwrap(), None).unwrap();
        assert!((a.final_objective - b.final_objective).abs() < 1e-6);
        let again = solve_problem_file(&ProblemFile::from_json(&text(9)).unwrap(), None).unwrap();
        assert_eq!(again, b);
    }

    #[test]
    fn explicit_coupling() {
        let text = r#"{
            "objective": {"type": "squared_distance", "target": [1.0, 3.0]},
            "sets": [
                {"type": "l1_ball", "dim": 1, "radius": 5.0},
                {"type": "l1_ball", "dim": 1, "radius": 5.0}
            ],
            "coupling": {"type": "explicit", "out_dim": 1, "block_dims": [1, 1], "matrices": [[1.0], [-1.0]]}
        }"#;
        let r = solve_problem_file(&ProblemFile::from_json(text).unwrap(), None).unwrap();
        // x₁ = x₂ closest to (1, 3): both at 2
        assert!(
            (r.x[0][0] - 2.0).abs() < 1e-4 && (r.x[1][0] - 2.0).abs() < 1e-4,
            "{:?}",
            r.x
        );
    }
}
