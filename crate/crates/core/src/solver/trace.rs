use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{FwalError, Result};

pub const TRACE_HEADER: [&str; 8] = [
    "t",
    "wall_time_s",
    "lagrangian",
    "fw_gap",
    "feasibility",
    "dual_norm",
    "objective",
    "drop_steps_cum",
];

/// One row of a solver trace. `feasibility` and `objective` refer to the new
/// iterate `x_{t}`; `lagrangian`, `fw_gap` and `dual_norm` are taken with the
/// dual variable the step was made against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub t: usize,
    pub wall_time_s: f64,
    pub lagrangian: f64,
    pub fw_gap: f64,
    pub feasibility: f64,
    pub dual_norm: f64,
    pub objective: f64,
    pub drop_steps_cum: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primal_gap_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual_value_estimate: Option<f64>,
}

pub fn write_trace_csv<W: Write>(out: W, trace: &[IterateRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in trace {
        w.write_record([
            r.t.to_string(),
            r.wall_time_s.to_string(),
            r.lagrangian.to_string(),
            r.fw_gap.to_string(),
            r.feasibility.to_string(),
            r.dual_norm.to_string(),
            r.objective.to_string(),
            r.drop_steps_cum.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace_csv<R: Read>(input: R) -> Result<Vec<IterateRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(TRACE_HEADER) {
        return Err(FwalError::InvalidArgument(format!(
            "unexpected trace header: {}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        let num = |i: usize| -> Result<f64> {
            row[i]
                .parse::<f64>()
                .map_err(|e| FwalError::InvalidArgument(format!("trace column {}: {e}", TRACE_HEADER[i])))
        };
        let int = |i: usize| -> Result<usize> {
            row[i]
                .parse::<usize>()
                .map_err(|e| FwalError::InvalidArgument(format!("trace column {}: {e}", TRACE_HEADER[i])))
        };
        out.push(IterateRecord {
            t: int(0)?,
            wall_time_s: num(1)?,
            lagrangian: num(2)?,
            fw_gap: num(3)?,
            feasibility: num(4)?,
            dual_norm: num(5)?,
            objective: num(6)?,
            drop_steps_cum: int(7)?,
            primal_gap_bound: None,
            dual_value_estimate: None,
        });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateModel {
    /// `log v ≈ a + p·log t`
    Sublinear,
    /// `log v ≈ a + t·log ρ`
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceField {
    FeasibilitySq,
    FwGap,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub model: RateModel,
    /// Exponent `p` for the sublinear model, ratio `ρ` for the linear one.
    pub exponent_or_ratio: f64,
    pub r_squared: f64,
    pub sublinear: LineFit,
    pub linear: LineFit,
    /// Some values were ≤ 0 and got floored at `1e-300`.
    pub floored: bool,
}

pub const RATE_FLOOR: f64 = 1e-300;

/// Ordinary least squares; `r² = 1` for an exactly flat response.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(FwalError::InvalidArgument(
            "least squares needs two or more points".into(),
        ));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(FwalError::InvalidArgument(
            "least squares needs distinct abscissae".into(),
        ));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(LineFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// Fits both rate models to `(t, v)` pairs (`t > 0`) and keeps the one with
/// the larger r².
pub fn fit_rate(ts: &[f64], values: &[f64]) -> Result<RateFit> {
    if ts.iter().any(|t| !(*t > 0.0)) {
        return Err(FwalError::InvalidArgument("rate fits need positive times".into()));
    }
    let mut floored = false;
    let logv: Vec<f64> = values
        .iter()
        .map(|v| {
            if *v > RATE_FLOOR {
                v.ln()
            } else {
                floored = true;
                RATE_FLOOR.ln()
            }
        })
        .collect();
    let logt: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let sublinear = least_squares(&logt, &logv)?;
    let linear = least_squares(ts, &logv)?;
    let (model, exponent_or_ratio, r_squared) = if linear.r_squared > sublinear.r_squared {
        (RateModel::Linear, linear.slope.exp(), linear.r_squared)
    } else {
        (RateModel::Sublinear, sublinear.slope, sublinear.r_squared)
    };
    Ok(RateFit {
        model,
        exponent_or_ratio,
        r_squared,
        sublinear,
        linear,
        floored,
    })
}

/// Rate fit over the last `window` records of a trace.
pub fn rate_fit(trace: &[IterateRecord], field: TraceField, window: usize) -> Result<RateFit> {
    if window < 10 || trace.len() < window {
        return Err(FwalError::InvalidArgument(format!(
            "rate fit needs 10 ≤ window ≤ trace length, got window {window} for {} records",
            trace.len()
        )));
    }
    let tail = &trace[trace.len() - window..];
    let ts: Vec<f64> = tail.iter().map(|r| r.t.max(1) as f64).collect();
    let vs: Vec<f64> = tail
        .iter()
        .map(|r| match field {
            TraceField::FeasibilitySq => r.feasibility * r.feasibility,
            TraceField::FwGap => r.fw_gap,
        })
        .collect();
    fit_rate(&ts, &vs)
}
