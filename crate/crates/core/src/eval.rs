//! Batch evaluation: many seeded trials per controller on one scenario
//! family, aggregate statistics, and the nn-vs-rebuild timing benchmark.
//!
//! Trials run in parallel and are merged by trial index, so the summary
//! (apart from wall-clock columns) does not depend on scheduling.
//!
//! Output layout written by [`write_outputs`]:
//!
//! ```text
//! <out-dir>/summary.json          EvalSummary
//! <out-dir>/minima.csv            one row per (controller, trial)
//! <out-dir>/trials/<ctrl>-<i>.csv trace of each trial that ran
//! ```

use std::fmt;
use std::fs;
use std::hint::black_box;
use std::io;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::ObstacleState;
use crate::nn::{infer, GradientNet};
use crate::potential::repulsive_gradient_at;
use crate::reachability::Flowpipe;
use crate::scenarios::{build_ugv_scenario, build_uuv_scenario, UgvCase};
use crate::sim::{run, write_trace_csv, ControllerKind, Scenario, Status, Trace, TrialSummary};
use crate::Vec2;

/// Time step of the interval flowpipe used as the from-scratch reference.
pub const FLOWPIPE_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Uuv,
    UgvCross,
    UgvParallel,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Uuv, Family::UgvCross, Family::UgvParallel];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Uuv => "uuv",
            Family::UgvCross => "ugv-cross",
            Family::UgvParallel => "ugv-parallel",
        }
    }

    /// Scenario of trial `seed`. The UUV family varies ship phases with the
    /// seed; the ground-vehicle layouts are fixed and only the noise varies.
    pub fn scenario(&self, seed: u64) -> Scenario {
        match self {
            Family::Uuv => build_uuv_scenario(seed),
            Family::UgvCross => build_ugv_scenario(UgvCase::Crossing).with_seed(seed),
            Family::UgvParallel => build_ugv_scenario(UgvCase::Parallel).with_seed(seed),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown family '{s}' (expected uuv, ugv-cross or ugv-parallel)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub family: Family,
    pub controllers: Vec<ControllerKind>,
    pub trials: usize,
    /// Trial `i` uses seed `base_seed + i`.
    pub base_seed: u64,
    /// Iterations of the speedup benchmark; 0 skips it.
    pub benchmark_iterations: usize,
}

/// One (controller, trial) run. `outcome` holds the error text when the
/// trial could not run at all (for example nn without a model).
#[derive(Debug)]
pub struct TrialRun {
    pub trial: usize,
    pub seed: u64,
    pub controller: ControllerKind,
    pub outcome: Result<Trace, String>,
}

/// Row of the minima table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub controller: ControllerKind,
    pub trial: usize,
    pub seed: u64,
    /// `None` when the trial failed to run.
    pub status: Option<Status>,
    pub min_dist_tube: Option<f64>,
    pub min_dist_true: Option<f64>,
    pub path_length: Option<f64>,
    pub final_time: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerStats {
    pub controller: ControllerKind,
    pub trials: usize,
    pub goal_reached: usize,
    /// Trials whose true distance fell below delta.
    pub violations: usize,
    /// Trials whose distance to a tube fell below delta.
    pub tube_breaches: usize,
    /// Trials that could not run.
    pub failures: usize,
    pub min_dist_tube: Option<f64>,
    pub min_dist_true: Option<f64>,
    pub mean_control_us: f64,
    pub max_control_us: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedupBenchmark {
    pub iterations: usize,
    pub nn_mean_ns: f64,
    pub rebuild_mean_ns: f64,
    /// `rebuild_mean_ns / nn_mean_ns`.
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub family: Family,
    pub trials: usize,
    pub base_seed: u64,
    pub delta: f64,
    pub controllers: Vec<ControllerStats>,
    pub rows: Vec<TrialRow>,
    pub speedup: Option<SpeedupBenchmark>,
}

impl EvalSummary {
    pub fn stats(&self, controller: ControllerKind) -> Option<&ControllerStats> {
        self.controllers.iter().find(|c| c.controller == controller)
    }
}

/// Runs every (controller, trial) pair. Results are ordered by controller
/// (in `cfg.controllers` order) then trial index.
pub fn run_trials(cfg: &EvalConfig, model: Option<&GradientNet>) -> Vec<TrialRun> {
    let jobs: Vec<(ControllerKind, usize)> = cfg
        .controllers
        .iter()
        .flat_map(|&c| (0..cfg.trials).map(move |i| (c, i)))
        .collect();
    jobs.into_par_iter()
        .map(|(controller, trial)| {
            let seed = cfg.base_seed.wrapping_add(trial as u64);
            let scenario = cfg.family.scenario(seed);
            let model = if controller == ControllerKind::Nn { model } else { None };
            let outcome = run(&scenario, controller, model).map_err(|e| e.to_string());
            TrialRun { trial, seed, controller, outcome }
        })
        .collect()
}

fn min_opt(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    values.flatten().fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.min(v))))
}

pub fn summarize(cfg: &EvalConfig, runs: &[TrialRun], speedup: Option<SpeedupBenchmark>) -> EvalSummary {
    let delta = cfg.family.scenario(cfg.base_seed).gains.delta;
    let rows: Vec<TrialRow> = runs
        .iter()
        .map(|r| match &r.outcome {
            Ok(trace) => {
                let s: TrialSummary = trace.summary();
                TrialRow {
                    controller: r.controller,
                    trial: r.trial,
                    seed: r.seed,
                    status: Some(s.status),
                    min_dist_tube: s.min_dist_tube,
                    min_dist_true: s.min_dist_true,
                    path_length: Some(s.path_length),
                    final_time: Some(s.final_time),
                    error: None,
                }
            }
            Err(e) => TrialRow {
                controller: r.controller,
                trial: r.trial,
                seed: r.seed,
                status: None,
                min_dist_tube: None,
                min_dist_true: None,
                path_length: None,
                final_time: None,
                error: Some(e.clone()),
            },
        })
        .collect();

    let controllers = cfg
        .controllers
        .iter()
        .map(|&c| {
            let mine: Vec<&TrialRow> = rows.iter().filter(|r| r.controller == c).collect();
            let traces: Vec<&Trace> = runs
                .iter()
                .filter(|r| r.controller == c)
                .filter_map(|r| r.outcome.as_ref().ok())
                .collect();
            let iterations: usize = traces.iter().map(|t| t.control_nanos.len()).sum();
            let total_ns: u64 = traces.iter().flat_map(|t| t.control_nanos.iter()).sum();
            let max_ns = traces.iter().flat_map(|t| t.control_nanos.iter()).copied().max().unwrap_or(0);
            ControllerStats {
                controller: c,
                trials: mine.len(),
                goal_reached: mine.iter().filter(|r| r.status == Some(Status::GoalReached)).count(),
                violations: mine.iter().filter(|r| r.min_dist_true.is_some_and(|d| d < delta)).count(),
                tube_breaches: mine.iter().filter(|r| r.min_dist_tube.is_some_and(|d| d < delta)).count(),
                failures: mine.iter().filter(|r| r.status.is_none()).count(),
                min_dist_tube: min_opt(mine.iter().map(|r| r.min_dist_tube)),
                min_dist_true: min_opt(mine.iter().map(|r| r.min_dist_true)),
                mean_control_us: if iterations == 0 { 0.0 } else { total_ns as f64 / iterations as f64 / 1e3 },
                max_control_us: max_ns as f64 / 1e3,
            }
        })
        .collect();

    EvalSummary {
        family: cfg.family,
        trials: cfg.trials,
        base_seed: cfg.base_seed,
        delta,
        controllers,
        rows,
        speedup,
    }
}

/// Runs the trials, and the speedup benchmark when a model is given.
pub fn evaluate(cfg: &EvalConfig, model: Option<&GradientNet>) -> (EvalSummary, Vec<TrialRun>) {
    let runs = run_trials(cfg, model);
    let speedup = match model {
        Some(net) if cfg.benchmark_iterations > 0 => {
            let scenario = cfg.family.scenario(cfg.base_seed);
            let reports: Vec<ObstacleState> = scenario.obstacles.iter().map(|o| o.initial).collect();
            Some(speedup_benchmark(net, &reports, cfg.benchmark_iterations, cfg.base_seed))
        }
        _ => None,
    };
    (summarize(cfg, &runs, speedup), runs)
}

/// One benchmark query: a report, a robot position and the report age.
#[derive(Debug, Clone, Copy)]
pub struct BenchQuery {
    pub report: ObstacleState,
    pub position: Vec2,
    pub elapsed: f64,
}

/// Queries spread over the network's trained box, so every nn call runs
/// the full forward pass.
pub fn benchmark_queries(net: &GradientNet, reports: &[ObstacleState], n: usize, seed: u64) -> Vec<BenchQuery> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = &net.scaling;
    let (t_lo, t_hi) = (s.min[4], s.max[4].min(net.horizon));
    (0..n)
        .map(|k| {
            let report = reports[k % reports.len()];
            let along = rng.random_range(s.min[0]..=s.max[0]);
            let cross = rng.random_range(s.min[1]..=s.max[1]);
            let (sin, cos) = report.heading.sin_cos();
            let position = report.position + Vec2::new(cos * along - sin * cross, sin * along + cos * cross);
            BenchQuery { report, position, elapsed: rng.random_range(t_lo..=t_hi) }
        })
        .collect()
}

/// Exact repulsive gradient from a freshly computed flowpipe. Inside the
/// safety margin the gradient is reported as zero; only the cost matters.
pub fn rebuild_gradient(net: &GradientNet, q: &BenchQuery) -> Vec2 {
    let fp = Flowpipe::compute(&q.report, &net.noise, net.horizon, net.footprint_radius, FLOWPIPE_STEP)
        .expect("network horizon and noise are valid");
    let cp = fp.closest_point(q.report.timestamp + q.elapsed, q.position);
    repulsive_gradient_at(q.position, &cp, net.gains.k_r, net.gains.delta).unwrap_or_else(|_| Vec2::zeros())
}

/// Mean wall time per query of [`infer`] and of [`rebuild_gradient`] on the
/// same queries. Blocks of the two are interleaved so that clock drift and
/// background load hit both sides alike.
pub fn speedup_benchmark(
    net: &GradientNet,
    reports: &[ObstacleState],
    iterations: usize,
    seed: u64,
) -> SpeedupBenchmark {
    const BLOCK: usize = 100;
    let queries = benchmark_queries(net, reports, iterations.max(1), seed);
    let (mut nn_ns, mut rebuild_ns) = (0u128, 0u128);
    for block in queries.chunks(BLOCK) {
        let t = Instant::now();
        for q in block {
            black_box(infer(net, black_box(q.position), 0.0, &q.report, q.elapsed).ok());
        }
        nn_ns += t.elapsed().as_nanos();
        let t = Instant::now();
        for q in block {
            black_box(rebuild_gradient(net, black_box(q)));
        }
        rebuild_ns += t.elapsed().as_nanos();
    }
    let n = queries.len() as f64;
    let nn_mean_ns = nn_ns as f64 / n;
    let rebuild_mean_ns = rebuild_ns as f64 / n;
    SpeedupBenchmark {
        iterations: queries.len(),
        nn_mean_ns,
        rebuild_mean_ns,
        factor: rebuild_mean_ns / nn_mean_ns.max(f64::MIN_POSITIVE),
    }
}

pub const MINIMA_HEADER: [&str; 9] = [
    "controller",
    "trial",
    "seed",
    "status",
    "min_dist_tube",
    "min_dist_true",
    "path_length",
    "final_time",
    "error",
];

fn opt_cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_minima_csv<W: io::Write>(rows: &[TrialRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(MINIMA_HEADER)?;
    for r in rows {
        w.write_record([
            r.controller.name().to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            r.status.map(|s| s.name().to_string()).unwrap_or_default(),
            opt_cell(r.min_dist_tube),
            opt_cell(r.min_dist_true),
            opt_cell(r.path_length),
            opt_cell(r.final_time),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum MinimaReadError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {row}: {message}")]
    Format { row: usize, message: String },
}

pub fn read_minima_csv<R: io::Read>(input: R) -> Result<Vec<TrialRow>, MinimaReadError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != MINIMA_HEADER {
        return Err(MinimaReadError::Format { row: 0, message: format!("unexpected header {header:?}") });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |message: String| MinimaReadError::Format { row: i + 1, message };
        let num = |k: usize| -> Result<Option<f64>, MinimaReadError> {
            match &rec[k] {
                "" => Ok(None),
                s => s.parse().map(Some).map_err(|_| bad(format!("bad number '{s}' in column {k}"))),
            }
        };
        let status = match &rec[3] {
            "" => None,
            s => Some(
                [Status::GoalReached, Status::Timeout, Status::SafetyViolation, Status::MarginBreached, Status::OutOfDomain]
                    .into_iter()
                    .find(|st| st.name() == s)
                    .ok_or_else(|| bad(format!("unknown status '{s}'")))?,
            ),
        };
        rows.push(TrialRow {
            controller: rec[0].parse().map_err(bad)?,
            trial: rec[1].parse().map_err(|_| bad("bad trial index".into()))?,
            seed: rec[2].parse().map_err(|_| bad("bad seed".into()))?,
            status,
            min_dist_tube: num(4)?,
            min_dist_true: num(5)?,
            path_length: num(6)?,
            final_time: num(7)?,
            error: Some(rec[8].to_string()).filter(|s| !s.is_empty()),
        });
    }
    Ok(rows)
}

pub fn trial_csv_name(controller: ControllerKind, trial: usize) -> String {
    format!("{}-{trial:03}.csv", controller.name())
}

pub fn write_outputs(out_dir: &Path, summary: &EvalSummary, runs: &[TrialRun]) -> io::Result<()> {
    let trials_dir = out_dir.join("trials");
    fs::create_dir_all(&trials_dir)?;
    for r in runs {
        if let Ok(trace) = &r.outcome {
            let f = io::BufWriter::new(fs::File::create(trials_dir.join(trial_csv_name(r.controller, r.trial)))?);
            write_trace_csv(trace, f).map_err(io::Error::other)?;
        }
    }
    let f = io::BufWriter::new(fs::File::create(out_dir.join("minima.csv"))?);
    write_minima_csv(&summary.rows, f).map_err(io::Error::other)?;
    let json = serde_json::to_string_pretty(summary).map_err(io::Error::other)?;
    fs::write(out_dir.join("summary.json"), json + "\n")
}
