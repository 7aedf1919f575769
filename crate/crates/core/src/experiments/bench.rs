use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use web_time::Instant;

use crate::error::{FwalError, Result};
use crate::linalg::{random_symmetric, LanczosOptions, SymMatrix};
use crate::oracles::{lmo_psd_trace, project_trace_ball_psd};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub dim: usize,
    pub lmo_ms: f64,
    pub proj_ms: f64,
}

/// The random symmetric matrix used for trial `trial` at size `dim`.
pub fn bench_matrix(dim: usize, trial: usize, seed: u64) -> SymMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((dim as u64) << 32) | trial as u64);
    random_symmetric(dim, &mut rng)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median wall time of the trace-ball oracle against the trace-ball
/// projection on the same random matrices, per dimension.
pub fn bench_lmo_vs_projection(dims: &[usize], trials: usize, seed: u64) -> Result<Vec<BenchRow>> {
    if trials == 0 || dims.is_empty() || dims.contains(&0) {
        return Err(FwalError::InvalidArgument(
            "need positive dims and at least one trial".into(),
        ));
    }
    if dims.windows(2).any(|w| w[0] >= w[1]) {
        return Err(FwalError::InvalidArgument("dims must be strictly ascending".into()));
    }
    let mut rows = Vec::with_capacity(dims.len());
    for &dim in dims {
        let mut lmo = Vec::with_capacity(trials);
        let mut proj = Vec::with_capacity(trials);
        for trial in 0..trials {
            let m = bench_matrix(dim, trial, seed);
            let t0 = Instant::now();
            std::hint::black_box(lmo_psd_trace(&m, 1.0, LanczosOptions::default())?);
            lmo.push(t0.elapsed().as_secs_f64() * 1e3);
            let t0 = Instant::now();
            std::hint::black_box(project_trace_ball_psd(&m, 1.0)?);
            proj.push(t0.elapsed().as_secs_f64() * 1e3);
        }
        rows.push(BenchRow {
            dim,
            lmo_ms: median(lmo),
            proj_ms: median(proj),
        });
    }
    Ok(rows)
}

pub fn write_bench_csv<W: Write>(out: W, rows: &[BenchRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["dim", "lmo_ms", "proj_ms"])?;
    for r in rows {
        w.write_record([r.dim.to_string(), r.lmo_ms.to_string(), r.proj_ms.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Log-log slope of time against dimension.
pub fn loglog_slope(rows: &[BenchRow], pick: impl Fn(&BenchRow) -> f64) -> Result<f64> {
    let xs: Vec<f64> = rows.iter().map(|r| (r.dim as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| pick(r).max(1e-12).ln()).collect();
    Ok(crate::solver::least_squares(&xs, &ys)?.slope)
}
