//! Per-outer-iteration trace records and their CSV form.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ogl_core::outer::OuterRecord;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub outer: usize,
    pub r: f64,
    pub s: f64,
    pub mu: f64,
    pub eps_in: f64,
    pub inner_iterations: usize,
    pub skips: usize,
    pub inner_hit_cap: bool,
    pub objective: f64,
    /// Cumulative wall time since the solve started.
    pub wall_seconds: f64,
}

impl From<&OuterRecord> for TraceRecord {
    fn from(rec: &OuterRecord) -> Self {
        Self {
            outer: rec.iteration,
            r: rec.r,
            s: rec.s,
            mu: rec.mu,
            eps_in: rec.eps_in,
            inner_iterations: rec.inner_iterations,
            skips: rec.skips,
            inner_hit_cap: rec.inner_hit_cap,
            objective: rec.objective,
            wall_seconds: rec.wall_seconds,
        }
    }
}

pub fn from_outer(records: &[OuterRecord]) -> Vec<TraceRecord> {
    records.iter().map(TraceRecord::from).collect()
}

pub fn write_trace<W: Write>(writer: W, records: &[TraceRecord]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    if records.is_empty() {
        out.write_record(HEADER)?;
    }
    for rec in records {
        out.serialize(rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_trace<R: Read>(reader: R) -> csv::Result<Vec<TraceRecord>> {
    csv::Reader::from_reader(reader).deserialize().collect()
}

pub fn write_trace_file(path: &Path, records: &[TraceRecord]) -> Result<(), BenchError> {
    let file = File::create(path).map_err(|e| BenchError::output(path, e))?;
    write_trace(file, records).map_err(|e| BenchError::output(path, e))
}

pub fn read_trace_file(path: &Path) -> Result<Vec<TraceRecord>, BenchError> {
    let file = File::open(path).map_err(|e| BenchError::Input(format!("{}: {e}", path.display())))?;
    read_trace(file).map_err(|e| BenchError::Input(format!("{}: {e}", path.display())))
}

const HEADER: [&str; 10] = [
    "outer",
    "r",
    "s",
    "mu",
    "eps_in",
    "inner_iterations",
    "skips",
    "inner_hit_cap",
    "objective",
    "wall_seconds",
];

#[derive(Serialize)]
struct Timeless {
    outer: usize,
    r: f64,
    s: f64,
    mu: f64,
    eps_in: f64,
    inner_iterations: usize,
    skips: usize,
    inner_hit_cap: bool,
    objective: f64,
}

/// SHA-256 of the trace CSV with the wall-time column left out, as lowercase hex.
pub fn trace_digest(records: &[TraceRecord]) -> String {
    let mut out = csv::Writer::from_writer(Vec::new());
    for rec in records {
        out.serialize(Timeless {
            outer: rec.outer,
            r: rec.r,
            s: rec.s,
            mu: rec.mu,
            eps_in: rec.eps_in,
            inner_iterations: rec.inner_iterations,
            skips: rec.skips,
            inner_hit_cap: rec.inner_hit_cap,
            objective: rec.objective,
        })
        .expect("in-memory csv write");
    }
    let bytes = out.into_inner().expect("in-memory csv flush");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}
