//! Trajectory records and their CSV/JSON forms.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::config::ScenarioConfig;
use crate::stability::{IssBound, StabilityEnvelope, Verdict};

/// One recorded instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub q_err: [f64; 8],
    pub w_err: [f64; 6],
    pub norm_x: f64,
    pub v0: f64,
    pub v: f64,
    pub force: [f64; 3],
    pub torque: [f64; 3],
    /// Smallest barrier value, NaN when no barrier is configured.
    pub h_min: f64,
    pub fuel_kg: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryRecord {
    pub samples: Vec<Sample>,
    /// Largest pre-renormalization unit-constraint violation seen in a step.
    pub max_unit_drift: f64,
    pub qp_infeasible: usize,
    pub max_kkt_residual: f64,
}

impl TrajectoryRecord {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn norms(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.norm_x).collect()
    }
}

pub const CSV_COLUMNS: usize = 1 + 8 + 6 + 3 + 3 + 3 + 2;

pub fn csv_header() -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((0..8).map(|i| format!("qerr_{i}")));
    h.extend((0..6).map(|i| format!("werr_{i}")));
    h.extend(["norm_x", "V0", "V"].map(String::from));
    h.extend((0..3).map(|i| format!("f_{i}")));
    h.extend((0..3).map(|i| format!("tau_{i}")));
    h.extend(["h_min", "fuel_kg"].map(String::from));
    h
}

/// 17 significant digits, enough to round-trip every f64.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn write_csv<W: Write>(rec: &TrajectoryRecord, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header())?;
    for s in &rec.samples {
        let mut row = Vec::with_capacity(CSV_COLUMNS);
        row.push(s.t);
        row.extend_from_slice(&s.q_err);
        row.extend_from_slice(&s.w_err);
        row.extend_from_slice(&[s.norm_x, s.v0, s.v]);
        row.extend_from_slice(&s.force);
        row.extend_from_slice(&s.torque);
        row.extend_from_slice(&[s.h_min, s.fuel_kg]);
        w.write_record(row.iter().map(|x| fmt_f64(*x)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<TrajectoryRecord> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header != csv_header() {
        return Err(Error::Parse("unexpected CSV columns".into()));
    }
    let mut rec = TrajectoryRecord::default();
    for (i, row) in r.records().enumerate() {
        let row = row?;
        let vals: Vec<f64> = row
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("row {i}: {e}")))?;
        if vals.len() != CSV_COLUMNS {
            return Err(Error::Parse(format!("row {i}: expected {CSV_COLUMNS} fields, got {}", vals.len())));
        }
        let take = |a: usize, b: usize| vals[a..b].to_vec();
        rec.samples.push(Sample {
            t: vals[0],
            q_err: take(1, 9).try_into().unwrap(),
            w_err: take(9, 15).try_into().unwrap(),
            norm_x: vals[15],
            v0: vals[16],
            v: vals[17],
            force: take(18, 21).try_into().unwrap(),
            torque: take(21, 24).try_into().unwrap(),
            h_min: vals[24],
            fuel_kg: vals[25],
        });
    }
    Ok(rec)
}

pub fn read_csv_file(path: &Path) -> Result<TrajectoryRecord> {
    read_csv(std::fs::File::open(path)?)
}

// ── Summary ─────────────────────────────────────────────────────────────────

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedVerdict {
    pub name: String,
    #[serde(flatten)]
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub index: usize,
    pub file: String,
    pub x0_norm: f64,
    pub final_norm: f64,
    pub min_h: Option<f64>,
    pub max_kkt_residual: f64,
    pub qp_infeasible: usize,
    pub max_unit_drift: f64,
    pub final_fuel_kg: f64,
    pub verdicts: Vec<NamedVerdict>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateVerdict {
    pub name: String,
    pub pass: bool,
    pub passed: usize,
    pub total: usize,
    pub worst_margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuelPoint {
    pub t: f64,
    pub fuel_kg: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub seed: u64,
    pub n: usize,
    pub config: ScenarioConfig,
    pub envelope: StabilityEnvelope,
    /// `m(R)` when it is representable.
    pub m_env: Option<f64>,
    pub iss: Option<IssBound>,
    /// Checks `check` can recompute from a trajectory CSV.
    pub offline_checks: Vec<String>,
    pub verdicts: Vec<AggregateVerdict>,
    pub trajectories: Vec<TrajectorySummary>,
    pub fuel_report: Vec<FuelPoint>,
    pub all_pass: bool,
}

impl RunSummary {
    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
