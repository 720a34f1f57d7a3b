//! CSV emission and ingestion for run traces, summaries, and comparisons.
//!
//! RFC-4180-style quoting, `\n` line endings, `.` decimal separator. Floats
//! print with the shortest representation that parses back exactly, so
//! identical runs produce identical bytes. Trace files deliberately omit
//! wall-clock time: it is the one RunTrace field that cannot be reproduced
//! byte-for-byte.

use std::path::Path;

use crate::error::{Error, Result};
use crate::solvers::{RunTrace, TraceRecord};

pub const TRACE_HEADER: &str =
    "iteration,step_size,sng,objective,accuracy,sfo_total,damped_step,negative_curvature";

pub const SUMMARY_HEADER: &str = "algorithm,seed,iterations,final_sng,final_accuracy,\
final_objective,sfo_total,damped_steps,negative_curvature_steps,skipped_updates,diverged";

pub const COMPARE_HEADER: &str = "algorithm,seed,iteration,sfo_total,sng,accuracy";

fn quote(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn row(fields: &[String]) -> String {
    let mut line = fields
        .iter()
        .map(|f| quote(f))
        .collect::<Vec<_>>()
        .join(",");
    line.push('\n');
    line
}

fn flag(b: bool) -> String {
    if b { "1".into() } else { "0".into() }
}

/// Formats a trace as CSV text.
pub fn format_trace(trace: &RunTrace) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in &trace.records {
        out.push_str(&row(&[
            r.iteration.to_string(),
            r.step_size.to_string(),
            r.sng.to_string(),
            r.objective.to_string(),
            r.accuracy.to_string(),
            r.sfo_total.to_string(),
            flag(r.damped_step),
            flag(r.negative_curvature),
        ]));
    }
    out
}

pub fn write_trace(path: &Path, trace: &RunTrace) -> Result<()> {
    std::fs::write(path, format_trace(trace))?;
    Ok(())
}

fn data_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Data {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Reads back a trace CSV. Only the fields the comparison step needs are
/// reconstructed; wall time is gone by design.
pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| data_err(path, e.to_string()))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == TRACE_HEADER => {}
        other => {
            return Err(data_err(
                path,
                format!("unexpected trace header {other:?}"),
            ))
        }
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(data_err(
                path,
                format!("line {}: expected 8 fields, got {}", lineno + 2, fields.len()),
            ));
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| data_err(path, format!("line {}: bad float {s:?}", lineno + 2)))
        };
        let parse_u = |s: &str| -> Result<u64> {
            s.parse()
                .map_err(|_| data_err(path, format!("line {}: bad integer {s:?}", lineno + 2)))
        };
        records.push(TraceRecord {
            iteration: parse_u(fields[0])?,
            step_size: parse_f(fields[1])?,
            sng: parse_f(fields[2])?,
            objective: parse_f(fields[3])?,
            accuracy: parse_f(fields[4])?,
            sfo_total: parse_u(fields[5])?,
            damped_step: fields[6] == "1",
            negative_curvature: fields[7] == "1",
            wall_time: 0.0,
        });
    }
    Ok(records)
}

/// One line of the run summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: String,
    pub seed: u64,
    pub iterations: u64,
    pub final_sng: f64,
    pub final_accuracy: f64,
    pub final_objective: f64,
    pub sfo_total: u64,
    pub damped_steps: u64,
    pub negative_curvature_steps: u64,
    pub skipped_updates: u64,
    pub diverged: bool,
}

impl SummaryRow {
    pub fn from_trace(algorithm: &str, seed: u64, trace: &RunTrace) -> Self {
        let last = trace.records.last();
        SummaryRow {
            algorithm: algorithm.to_string(),
            seed,
            iterations: last.map_or(0, |r| r.iteration),
            final_sng: last.map_or(f64::NAN, |r| r.sng),
            final_accuracy: last.map_or(f64::NAN, |r| r.accuracy),
            final_objective: last.map_or(f64::NAN, |r| r.objective),
            sfo_total: trace.sfo.total_calls(),
            damped_steps: trace.damped_steps,
            negative_curvature_steps: trace.negative_curvature_steps,
            skipped_updates: trace.skipped_updates,
            diverged: trace.diverged(),
        }
    }
}

pub fn format_summary(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&row(&[
            r.algorithm.clone(),
            r.seed.to_string(),
            r.iterations.to_string(),
            r.final_sng.to_string(),
            r.final_accuracy.to_string(),
            r.final_objective.to_string(),
            r.sfo_total.to_string(),
            r.damped_steps.to_string(),
            r.negative_curvature_steps.to_string(),
            r.skipped_updates.to_string(),
            flag(r.diverged),
        ]));
    }
    out
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    std::fs::write(path, format_summary(rows))?;
    Ok(())
}

/// Long-format comparison rows: one per evaluation record, keyed so plots
/// can use either iterations or SFO calls as the x-axis.
pub fn format_compare(traces: &[(String, u64, Vec<TraceRecord>)]) -> String {
    let mut out = String::from(COMPARE_HEADER);
    out.push('\n');
    for (algorithm, seed, records) in traces {
        for r in records {
            out.push_str(&row(&[
                algorithm.clone(),
                seed.to_string(),
                r.iteration.to_string(),
                r.sfo_total.to_string(),
                r.sng.to_string(),
                r.accuracy.to_string(),
            ]));
        }
    }
    out
}
