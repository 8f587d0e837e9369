//! CSV writers. Numbers are printed with 17 significant digits; infinities
//! as `inf` / `-inf`.

use std::io::Write;

use crate::error::Result;
use crate::rare_event_mc::SimulationEstimate;
use crate::rate_functions::RateRow;
use crate::weight_schemes::AssumptionReport;

/// 17 significant digits, or `inf`, `-inf`, `nan`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.16e}")
    }
}

/// Columns `n, s1, n_amax`.
pub fn write_b_table<W: Write>(out: W, report: &AssumptionReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "s1", "n_amax"])?;
    for ((n, s1), namax) in report
        .n_grid
        .iter()
        .zip(&report.s1_sequence)
        .zip(&report.namax_sequence)
    {
        w.write_record([n.to_string(), fmt_f64(*s1), fmt_f64(*namax)])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `nu, n, R`; empty apart from the header when the report has no A part.
pub fn write_r_table<W: Write>(out: W, report: &AssumptionReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["nu", "n", "R"])?;
    if let Some(a) = &report.a {
        for (nu, n, r) in &a.r_table {
            w.write_record([nu.to_string(), n.to_string(), fmt_f64(*r)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Columns `x, rate, formula_tag, params`, with params as `name=value` pairs
/// separated by `;`.
pub fn write_rates<W: Write>(out: W, rows: &[RateRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "rate", "formula_tag", "params"])?;
    for row in rows {
        let params = row
            .params
            .iter()
            .map(|(k, v)| format!("{k}={}", fmt_f64(*v)))
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([
            fmt_f64(row.x),
            fmt_f64(row.rate),
            row.formula_tag.to_string(),
            params,
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub const SIMULATION_COLUMNS: [&str; 15] = [
    "estimator",
    "n",
    "x",
    "N",
    "p_hat",
    "std_err",
    "rho",
    "target_rate",
    "t1",
    "t2",
    "seed",
    "weights",
    "p_upper95",
    "ess",
    "run",
];

/// One row per estimate; `run` labels the curve (e.g. `quenched_3`).
pub fn write_estimates<W: Write>(out: W, rows: &[(String, SimulationEstimate)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SIMULATION_COLUMNS)?;
    for (run, e) in rows {
        w.write_record([
            e.estimator.tag().to_string(),
            e.n.to_string(),
            fmt_f64(e.x),
            e.replications.to_string(),
            fmt_f64(e.p_hat),
            fmt_f64(e.std_err),
            fmt_f64(e.rho),
            fmt_f64(e.target_rate),
            fmt_f64(e.t1),
            fmt_f64(e.t2),
            e.seed.to_string(),
            e.mode.tag().to_string(),
            fmt_f64(e.p_upper),
            fmt_f64(e.effective_sample_size),
            run.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
