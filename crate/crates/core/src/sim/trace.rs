//! Trial traces, their CSV form and per-trial summaries.
//!
//! Trace CSV columns: `time, robot_x, robot_y, cmd_x, cmd_y`, then for
//! each obstacle `i` (0-based): `obs{i}_x, obs{i}_y, obs{i}_age,
//! obs{i}_dist_tube, obs{i}_dist_true`. Age and tube distance are `inf`
//! until the first report. The command of the final record is zero.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{ControllerKind, Scenario, Status};
use crate::Vec2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstacleRecord {
    /// True obstacle position.
    pub position: Vec2,
    /// Seconds since the report in use, infinite before the first one.
    pub age: f64,
    /// Distance to the true-bounds tube slice of the report in use.
    pub dist_tube: f64,
    /// Distance to the true footprint.
    pub dist_true: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub time: f64,
    pub position: Vec2,
    pub heading: f64,
    pub command: Vec2,
    pub obstacles: Vec<ObstacleRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub scenario: String,
    pub controller: ControllerKind,
    pub seed: u64,
    pub delta: f64,
    pub records: Vec<StepRecord>,
    pub status: Status,
    /// Set when a field controller kept using a tube past its horizon.
    pub horizon_expired: bool,
    /// Wall time of each controller call, nanoseconds.
    pub control_nanos: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleMinima {
    pub tube: f64,
    pub true_dist: f64,
}

/// Per-obstacle minima over all recorded steps.
pub fn min_distance_report(trace: &Trace) -> Vec<ObstacleMinima> {
    let n = trace.records.first().map_or(0, |r| r.obstacles.len());
    (0..n)
        .map(|i| {
            trace.records.iter().fold(
                ObstacleMinima { tube: f64::INFINITY, true_dist: f64::INFINITY },
                |m, r| ObstacleMinima {
                    tube: m.tube.min(r.obstacles[i].dist_tube),
                    true_dist: m.true_dist.min(r.obstacles[i].dist_true),
                },
            )
        })
        .collect()
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl Trace {
    pub fn new(scenario: &Scenario, controller: ControllerKind) -> Self {
        Trace {
            scenario: scenario.name.clone(),
            controller,
            seed: scenario.seed,
            delta: scenario.gains.delta,
            records: Vec::new(),
            status: Status::Timeout,
            horizon_expired: false,
            control_nanos: Vec::new(),
        }
    }

    pub fn path_length(&self) -> f64 {
        self.records.windows(2).map(|w| (w[1].position - w[0].position).norm()).sum()
    }

    pub fn final_time(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.time)
    }

    /// Minimum distance to any tube over the whole trial.
    pub fn min_dist_tube(&self) -> f64 {
        min_distance_report(self).iter().map(|m| m.tube).fold(f64::INFINITY, f64::min)
    }

    pub fn min_dist_true(&self) -> f64 {
        min_distance_report(self).iter().map(|m| m.true_dist).fold(f64::INFINITY, f64::min)
    }

    pub fn mean_control_micros(&self) -> f64 {
        if self.control_nanos.is_empty() {
            return 0.0;
        }
        self.control_nanos.iter().sum::<u64>() as f64 / self.control_nanos.len() as f64 / 1e3
    }

    pub fn max_control_micros(&self) -> f64 {
        self.control_nanos.iter().copied().max().unwrap_or(0) as f64 / 1e3
    }

    pub fn summary(&self) -> TrialSummary {
        let minima = min_distance_report(self);
        TrialSummary {
            scenario: self.scenario.clone(),
            controller: self.controller,
            seed: self.seed,
            status: self.status,
            steps: self.records.len(),
            final_time: self.final_time(),
            path_length: self.path_length(),
            min_dist_tube: finite(self.min_dist_tube()),
            min_dist_true: finite(self.min_dist_true()),
            per_obstacle: minima
                .iter()
                .map(|m| ObstacleSummary { min_dist_tube: finite(m.tube), min_dist_true: m.true_dist })
                .collect(),
            horizon_expired: self.horizon_expired,
            mean_control_us: self.mean_control_micros(),
            max_control_us: self.max_control_micros(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleSummary {
    /// `None` if no report ever arrived.
    pub min_dist_tube: Option<f64>,
    pub min_dist_true: f64,
}

/// Machine-readable outcome of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub scenario: String,
    pub controller: ControllerKind,
    pub seed: u64,
    pub status: Status,
    pub steps: usize,
    pub final_time: f64,
    pub path_length: f64,
    pub min_dist_tube: Option<f64>,
    pub min_dist_true: Option<f64>,
    pub per_obstacle: Vec<ObstacleSummary>,
    pub horizon_expired: bool,
    pub mean_control_us: f64,
    pub max_control_us: f64,
}

pub fn trace_csv_header(n_obstacles: usize) -> Vec<String> {
    let mut h: Vec<String> =
        ["time", "robot_x", "robot_y", "cmd_x", "cmd_y"].iter().map(|s| s.to_string()).collect();
    for i in 0..n_obstacles {
        for col in ["x", "y", "age", "dist_tube", "dist_true"] {
            h.push(format!("obs{i}_{col}"));
        }
    }
    h
}

pub fn write_trace_csv<W: Write>(trace: &Trace, out: W) -> csv::Result<()> {
    let n = trace.records.first().map_or(0, |r| r.obstacles.len());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trace_csv_header(n))?;
    let mut row: Vec<String> = Vec::with_capacity(5 + 5 * n);
    for r in &trace.records {
        row.clear();
        for v in [r.time, r.position.x, r.position.y, r.command.x, r.command.y] {
            row.push(v.to_string());
        }
        for o in &r.obstacles {
            for v in [o.position.x, o.position.y, o.age, o.dist_tube, o.dist_true] {
                row.push(v.to_string());
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// A parsed trace CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl TraceTable {
    pub fn n_obstacles(&self) -> usize {
        (self.header.len() - 5) / 5
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TraceReadError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
}

/// Parses and checks a trace CSV against the documented header.
pub fn read_trace_csv<R: Read>(input: R) -> Result<TraceTable, TraceReadError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.len() < 5 || !(header.len() - 5).is_multiple_of(5) || header != trace_csv_header((header.len() - 5) / 5) {
        return Err(TraceReadError::Schema { line: 1, message: "unexpected header".into() });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let row = row.map_err(|e| TraceReadError::Schema { line: i + 2, message: e.to_string() })?;
        rows.push(row);
    }
    Ok(TraceTable { header, rows })
}
