//! CSV emission for sweeps and constants.
//!
//! Every file starts with a `# schema=1` comment line followed by a header.
//! Floats use the shortest decimal that round-trips; quantities that leave
//! the f64 range get a parallel `log10_` column.

use std::io::Write;

use rayon::prelude::*;

use crate::asymptotics::PredictionConstants;
use crate::error::{Error, Result};
use crate::interaction::{self, ReportInputs, SplittingReport};

pub const SCHEMA: u32 = 1;

/// Shortest round-trip decimal; scientific notation outside [1e-4, 1e16).
pub fn fmt_float(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub const SWEEP_COLUMNS: [&str; 14] = [
    "h",
    "mu",
    "wh_direct",
    "log10_abs_wh_direct",
    "log10_abs_wh_from_integral",
    "integral_deviation",
    "gap_direct",
    "log10_gap_direct",
    "log10_gap_predicted",
    "ratio",
    "log10_w_integral",
    "log10_w_laplace",
    "laplace_deviation",
    "theorem_hypothesis",
];

fn sweep_row(r: &SplittingReport) -> Vec<String> {
    let sign = if r.wh_direct_arg.cos() < 0.0 { -1.0 } else { 1.0 };
    vec![
        fmt_float(r.h),
        fmt_float(r.mu),
        fmt_float(sign * 10f64.powf(r.log10_wh_direct)),
        fmt_float(r.log10_wh_direct),
        fmt_float(r.log10_wh_from_integral),
        fmt_float(r.integral_deviation),
        fmt_float(10f64.powf(r.log10_gap_direct)),
        fmt_float(r.log10_gap_direct),
        fmt_float(r.log10_gap_predicted),
        fmt_float(r.ratio),
        fmt_float(r.log10_w_integral),
        fmt_float(r.log10_w_laplace),
        fmt_float(r.laplace_deviation),
        r.theorem_hypothesis.to_string(),
    ]
}

pub fn write_sweep_csv(rows: &[SplittingReport], mut out: impl Write) -> Result<()> {
    let io = |source| Error::Io { context: "writing sweep CSV".into(), source };
    writeln!(out, "# schema={SCHEMA}").map_err(io)?;
    writeln!(out, "{}", SWEEP_COLUMNS.join(",")).map_err(io)?;
    for r in rows {
        writeln!(out, "{}", sweep_row(r).join(",")).map_err(io)?;
    }
    Ok(())
}

pub fn write_constants_csv(k: &PredictionConstants, mut out: impl Write) -> Result<()> {
    let io = |source| Error::Io { context: "writing constants CSV".into(), source };
    writeln!(out, "# schema={SCHEMA}").map_err(io)?;
    writeln!(out, "name,value").map_err(io)?;
    let rows = [
        ("b0", k.b0),
        ("b1", k.b1),
        ("M", k.m),
        ("N", k.n),
        ("delta0", k.delta0),
        ("Phi0", k.phi0),
        ("S0", k.s0),
        ("S", k.s),
        ("I", k.i),
        ("F0", k.f0),
        ("c0", k.c0),
        ("c", k.c),
    ];
    for (name, v) in rows {
        writeln!(out, "{name},{}", fmt_float(v)).map_err(io)?;
    }
    Ok(())
}

/// One report per h, computed on `jobs` worker threads and sorted by
/// increasing h. The rows do not depend on `jobs`.
pub fn sweep(hs: &[f64], inputs: &ReportInputs<'_>, jobs: usize) -> Result<Vec<SplittingReport>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::internal(format!("thread pool: {e}")))?;
    let mut hs = hs.to_vec();
    hs.sort_by(f64::total_cmp);
    hs.dedup();
    pool.install(|| hs.par_iter().map(|&h| interaction::splitting_report(h, inputs)).collect())
}

/// Least-squares slope of ln(2|w_h|) against 1/h; tends to −S.
pub fn sweep_slope(rows: &[SplittingReport]) -> f64 {
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.log10_gap_direct * std::f64::consts::LN_10).collect();
    -crate::verify::log_slope(&h, &y)
}
