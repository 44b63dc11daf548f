//! CSV writers for simulation output.

use std::io::Write;

use crate::error::{Error, Result};
use crate::simulation::{KpiReport, KpiSummary, ScenarioRun};

pub const PER_SECOND_HEADER: [&str; 8] = [
    "t",
    "session_id",
    "method",
    "capacity_bps",
    "target_vmaf",
    "experienced_vmaf",
    "rate_bps",
    "utility",
];
pub const SUMMARY_HEADER: [&str; 6] = [
    "capacity_bps",
    "method",
    "avg_utility",
    "avg_vmaf",
    "frac_below_50",
    "frac_zero",
];
pub const CUMULATIVE_HEADER: [&str; 3] = ["t", "session_id", "cum_rate_bps"];
pub const SECOND_STATS_HEADER: [&str; 7] = [
    "t",
    "method",
    "capacity_bps",
    "avg_utility",
    "avg_vmaf",
    "min_vmaf",
    "total_rate_bps",
];
pub const AGGREGATE_DEMAND_HEADER: [&str; 3] = ["t", "target_vmaf", "total_rate_bps"];

fn finish<W: Write>(mut w: csv::Writer<W>, what: &str) -> Result<()> {
    w.flush().map_err(|e| Error::io(what, e))
}

/// Per-second records of several runs; `session_ids[s]` names session index `s`.
pub fn write_per_second_csv<'a>(
    runs: impl IntoIterator<Item = &'a ScenarioRun>,
    session_ids: &[&str],
    out: impl Write,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PER_SECOND_HEADER)?;
    for run in runs {
        let method = run.method.name();
        let cap = run.capacity_bps.to_string();
        for r in &run.records {
            let id = session_ids
                .get(r.session as usize)
                .ok_or_else(|| Error::InvalidInput(format!("no id for session {}", r.session)))?;
            w.write_record([
                r.t.to_string().as_str(),
                id,
                method,
                &cap,
                &r.target_vmaf.to_string(),
                &r.experienced_vmaf.to_string(),
                &r.rate_bps.to_string(),
                &r.utility.to_string(),
            ])?;
        }
    }
    finish(w, "<per-second output>")
}

pub fn write_summary_csv<'a>(
    rows: impl IntoIterator<Item = &'a KpiSummary>,
    out: impl Write,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for k in rows {
        w.write_record([
            k.capacity_bps.to_string(),
            k.method.name().to_string(),
            k.avg_utility.to_string(),
            k.avg_vmaf.to_string(),
            k.frac_below_50.to_string(),
            k.frac_zero.to_string(),
        ])?;
    }
    finish(w, "<summary output>")
}

/// Per-second aggregates of several runs.
pub fn write_second_stats_csv<'a>(
    runs: impl IntoIterator<Item = (&'a ScenarioRun, &'a KpiReport)>,
    out: impl Write,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SECOND_STATS_HEADER)?;
    for (run, report) in runs {
        for s in &report.per_second {
            w.write_record([
                s.t.to_string(),
                run.method.name().to_string(),
                run.capacity_bps.to_string(),
                s.avg_utility.to_string(),
                s.avg_vmaf.to_string(),
                s.min_vmaf.to_string(),
                s.total_rate_bps.to_string(),
            ])?;
        }
    }
    finish(w, "<per-second stats output>")
}

/// `table[t][s]` as produced by [`crate::simulation::cumulative_shares`].
pub fn write_cumulative_csv(
    table: &[Vec<f64>],
    session_ids: &[&str],
    out: impl Write,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CUMULATIVE_HEADER)?;
    for (t, row) in table.iter().enumerate() {
        if row.len() != session_ids.len() {
            return Err(Error::InvalidInput(format!(
                "{} ids for {} sessions",
                session_ids.len(),
                row.len()
            )));
        }
        for (id, cum) in session_ids.iter().zip(row) {
            w.write_record([t.to_string().as_str(), id, &cum.to_string()])?;
        }
    }
    finish(w, "<cumulative output>")
}

/// `table[t][i]` is the total demand at `targets[i]`; unreachable totals are omitted.
pub fn write_aggregate_demand_csv(
    table: &[Vec<f64>],
    targets: &[u32],
    out: impl Write,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AGGREGATE_DEMAND_HEADER)?;
    for (t, row) in table.iter().enumerate() {
        for (v, total) in targets.iter().zip(row) {
            if total.is_finite() {
                w.write_record([t.to_string(), v.to_string(), total.to_string()])?;
            }
        }
    }
    finish(w, "<aggregate demand output>")
}
