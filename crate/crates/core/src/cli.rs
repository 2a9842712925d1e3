//! The `reachpf` command line.
//!
//! | command    | reads                              | writes                                   |
//! |------------|------------------------------------|------------------------------------------|
//! | `gen-data` | grid spec (TOML)                   | dataset                                  |
//! | `train`    | dataset, train config (TOML)       | model, loss log CSV                      |
//! | `simulate` | scenario (TOML), optional model    | trace CSV, optional summary JSON         |
//! | `evaluate` | built-in family, optional model    | `summary.json`, `minima.csv`, `trials/`  |
//!
//! Flags override file values (`--seed` replaces the seed in the training
//! config or scenario); files override built-in constants.
//!
//! Exit codes are listed on [`ExitCode`].

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::eval::{evaluate, write_outputs, EvalConfig, Family};
use crate::nn::{
    dataset_mse, fit_gradient_net, generate_training_data, Dataset, GradientNet, GridSpec, LoadError,
    NnError, TrainConfig,
};
use crate::sim::{run, write_trace_csv, ControllerKind, Scenario, SimError, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(i32)]
pub enum ExitCode {
    Success = 0,
    /// Bad flags, or a config/spec/scenario file with invalid contents.
    Usage = 2,
    /// Missing, unreadable or malformed data files, or an empty dataset.
    Data = 3,
    TrainingDiverged = 4,
    /// The network was queried outside its trained domain.
    OutOfDomain = 5,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Diverged(String),
    #[error("{0}")]
    OutOfDomain(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::Usage,
            CliError::Data(_) => ExitCode::Data,
            CliError::Diverged(_) => ExitCode::TrainingDiverged,
            CliError::OutOfDomain(_) => ExitCode::OutOfDomain,
        }
    }
}

impl From<NnError> for CliError {
    fn from(e: NnError) -> Self {
        match e {
            NnError::TrainingDiverged { .. } => CliError::Diverged(e.to_string()),
            NnError::OutOfDomain(_) => CliError::OutOfDomain(e.to_string()),
            NnError::EmptyData
            | NnError::DimensionMismatch { .. }
            | NnError::Format { .. }
            | NnError::UnsupportedVersion { .. } => CliError::Data(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Dynamics(_) => CliError::Data(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

fn load_error(path: &Path, e: LoadError) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "reachpf", version, about = "Reach-tube potential fields with a neural repulsive gradient")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Label a grid of configurations with the exact repulsive gradient.
    GenData {
        /// Grid spec (TOML).
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a gradient network to a dataset.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// Training config (TOML); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Loss history CSV; defaults to `<out>.loss.csv`.
        #[arg(long)]
        loss_log: Option<PathBuf>,
    },
    /// Run one scenario and write its trace.
    Simulate {
        /// Scenario (TOML).
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        controller: ControllerKind,
        /// Trained model, required by the nn controller.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Trace CSV.
        #[arg(long)]
        out: PathBuf,
        /// Optional JSON trial summary.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Run seeded trials of a scenario family for several controllers.
    Evaluate {
        #[arg(long)]
        family: Family,
        /// Comma-separated controller names.
        #[arg(long, value_delimiter = ',', default_value = "exact-pf")]
        controllers: Vec<ControllerKind>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Seed of trial 0; trial i uses seed + i.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
        /// Trained model for the nn controller and the speedup benchmark.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Iterations of the nn-vs-rebuild benchmark (needs --model).
        #[arg(long, default_value_t = 10_000)]
        bench_iterations: usize,
    },
}

/// Parses `args` (including the program name) and runs the command,
/// writing reports to `out` and `err`. Returns the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::Success,
                _ => ExitCode::Usage,
            };
            let text = e.render().to_string();
            let _ = if code == ExitCode::Success { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code as i32;
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => ExitCode::Success as i32,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code() as i32
        }
    }
}

pub fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::GenData { spec, out: path } => gen_data(&spec, &path, out, err),
        Command::Train { data, config, out: path, seed, loss_log } => {
            let loss_log = loss_log.unwrap_or_else(|| default_loss_log(&path));
            train(&data, config.as_deref(), &path, seed, &loss_log, out)
        }
        Command::Simulate { scenario, controller, model, seed, out: path, summary } => {
            simulate(&scenario, controller, model.as_deref(), seed, &path, summary.as_deref(), out)
        }
        Command::Evaluate { family, controllers, trials, seed, out_dir, model, bench_iterations } => {
            let cfg = EvalConfig { family, controllers, trials, base_seed: seed, benchmark_iterations: bench_iterations };
            evaluate_cmd(&cfg, model.as_deref(), &out_dir, out)
        }
    }
}

pub fn default_loss_log(model_out: &Path) -> PathBuf {
    let mut s = model_out.as_os_str().to_owned();
    s.push(".loss.csv");
    PathBuf::from(s)
}

fn gen_data(spec: &Path, path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let spec = GridSpec::from_toml(&read_text(spec)?)?;
    let data = generate_training_data(&spec)?;
    data.save(path).map_err(io_error(path))?;
    if data.is_empty() {
        let _ = writeln!(err, "warning: every grid point was excluded; the dataset is empty");
    }
    let _ = writeln!(
        out,
        "samples {} of {} grid points (excluded: {} within delta, {} above label cap)",
        data.len(),
        spec.point_count(),
        data.excluded_margin,
        data.excluded_cap
    );
    Ok(())
}

fn train(
    data_path: &Path,
    config: Option<&Path>,
    path: &Path,
    seed: Option<u64>,
    loss_log: &Path,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let mut cfg = match config {
        Some(p) => TrainConfig::from_toml(&read_text(p)?)?,
        None => TrainConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let data = Dataset::load(data_path).map_err(|e| load_error(data_path, e))?;
    let (net, report) = fit_gradient_net(&data, &cfg)?;
    net.save(path).map_err(io_error(path))?;

    let mut w = csv::Writer::from_path(loss_log).map_err(|e| CliError::Data(format!("{}: {e}", loss_log.display())))?;
    let wrap = |e: csv::Error| CliError::Data(format!("{}: {e}", loss_log.display()));
    w.write_record(["epoch", "train_mse", "val_mse"]).map_err(wrap)?;
    for e in &report.history {
        w.write_record([e.epoch.to_string(), e.train_mse.to_string(), e.val_mse.to_string()]).map_err(wrap)?;
    }
    w.flush().map_err(io_error(loss_log))?;

    let rows = if report.val_indices.is_empty() { &report.train_indices } else { &report.val_indices };
    let _ = writeln!(
        out,
        "trained {} epochs on {} samples; held-out mse {} over {} samples",
        report.history.len(),
        report.train_indices.len(),
        dataset_mse(&net, &data, rows),
        rows.len()
    );
    Ok(())
}

fn load_model(path: Option<&Path>) -> Result<Option<GradientNet>, CliError> {
    path.map(|p| GradientNet::load(p).map_err(|e| load_error(p, e))).transpose()
}

fn simulate(
    scenario_path: &Path,
    controller: ControllerKind,
    model: Option<&Path>,
    seed: Option<u64>,
    path: &Path,
    summary_path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let mut scenario = Scenario::from_toml(&read_text(scenario_path)?)?;
    if let Some(seed) = seed {
        scenario = scenario.with_seed(seed);
    }
    if controller != ControllerKind::Nn && model.is_some() {
        return Err(CliError::Usage(format!("--model is only used by the nn controller, not {controller}")));
    }
    if controller == ControllerKind::Nn && model.is_none() {
        return Err(CliError::Usage("the nn controller needs --model".into()));
    }
    let net = load_model(model)?;
    let trace = run(&scenario, controller, net.as_ref())?;

    let f = io::BufWriter::new(fs::File::create(path).map_err(io_error(path))?);
    write_trace_csv(&trace, f).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let s = trace.summary();
    if let Some(p) = summary_path {
        let json = serde_json::to_string_pretty(&s).expect("summary serialises");
        fs::write(p, json + "\n").map_err(io_error(p))?;
    }
    let fmt = |v: Option<f64>| v.map_or("none".to_string(), |x| format!("{x:.3}"));
    let _ = writeln!(
        out,
        "status {} after {:.1} s, path {:.2} m, min distance to tube {}, to obstacle {}, control {:.1} us mean / {:.1} us max{}",
        s.status,
        s.final_time,
        s.path_length,
        fmt(s.min_dist_tube),
        fmt(s.min_dist_true),
        s.mean_control_us,
        s.max_control_us,
        if s.horizon_expired { " (tube horizon expired)" } else { "" }
    );
    if s.status == Status::OutOfDomain {
        return Err(CliError::OutOfDomain("the network was queried outside its trained domain".into()));
    }
    Ok(())
}

fn evaluate_cmd(cfg: &EvalConfig, model: Option<&Path>, out_dir: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    if cfg.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    if cfg.controllers.is_empty() {
        return Err(CliError::Usage("--controllers is empty".into()));
    }
    let net = load_model(model)?;
    let (summary, runs) = evaluate(cfg, net.as_ref());
    write_outputs(out_dir, &summary, &runs).map_err(io_error(out_dir))?;
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
    let _ = writeln!(out, "{} x {} trials, delta {}", summary.family, summary.trials, summary.delta);
    let _ = writeln!(
        out,
        "{:<14} {:>5} {:>6} {:>10} {:>9} {:>12} {:>12} {:>10} {:>10}",
        "controller", "goal", "failed", "violations", "tube<del", "min tube", "min true", "mean us", "max us"
    );
    for c in &summary.controllers {
        let _ = writeln!(
            out,
            "{:<14} {:>5} {:>6} {:>10} {:>9} {:>12} {:>12} {:>10.1} {:>10.1}",
            c.controller.name(),
            c.goal_reached,
            c.failures,
            c.violations,
            c.tube_breaches,
            fmt(c.min_dist_tube),
            fmt(c.min_dist_true),
            c.mean_control_us,
            c.max_control_us
        );
    }
    if let Some(b) = summary.speedup {
        let _ = writeln!(
            out,
            "nn {:.0} ns vs flowpipe rebuild {:.0} ns per query over {} queries: {:.0}x",
            b.nn_mean_ns, b.rebuild_mean_ns, b.iterations, b.factor
        );
    }
    Ok(())
}
