//! End-to-end runs of the `reachpf` command line: every exit code, and
//! every written file read back through its parser.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use reachpf::cli::main_with_args;
use reachpf::eval::{read_minima_csv, EvalSummary};
use reachpf::nn::{
    dataset_mse, split_indices, AxisSpec, Dataset, GradientNet, GridSpec, TrainConfig, GRID_SPEC_VERSION,
};
use reachpf::potential::Gains;
use reachpf::reachability::SliceGeometry;
use reachpf::scenarios::build_uuv_scenario;
use reachpf::sim::{read_trace_csv, InfoSchedule, ObstacleSpec, Footprint, Scenario, TrialSummary, SCENARIO_VERSION};
use reachpf::{NoiseBounds, ObstacleState, Vec2};
use tempfile::TempDir;

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn reachpf(args: &[&str]) -> Out {
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let code = main_with_args(std::iter::once("reachpf").chain(args.iter().copied()), &mut o, &mut e);
    Out { code, stdout: String::from_utf8(o).unwrap(), stderr: String::from_utf8(e).unwrap() }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_spec() -> GridSpec {
    GridSpec {
        version: GRID_SPEC_VERSION,
        along: AxisSpec::new(-4.0, 6.0, 11),
        cross: AxisSpec::new(-4.0, 4.0, 9),
        rel_heading: AxisSpec::fixed(0.0),
        speed: AxisSpec::fixed(0.5),
        elapsed: AxisSpec::new(0.0, 8.0, 5),
        gains: Gains::new(5.0, 10.0, 0.51),
        horizon: 8.0,
        footprint_radius: 0.0,
        noise: NoiseBounds::new(0.02, 0.05),
        geometry: SliceGeometry::Sector,
        label_cap: 1e3,
    }
}

fn tiny_spec() -> GridSpec {
    GridSpec {
        along: AxisSpec::new(-4.0, 4.0, 2),
        cross: AxisSpec::new(-3.0, 3.0, 2),
        elapsed: AxisSpec::new(0.0, 8.0, 2),
        ..small_spec()
    }
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn gen(dir: &TempDir, spec: &GridSpec, name: &str) -> PathBuf {
    let spec_path = write(dir, &format!("{name}.toml"), &spec.to_toml());
    let out = dir.path().join(format!("{name}.data"));
    let r = reachpf(&["gen-data", "--spec", s(&spec_path), "--out", s(&out)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    out
}

/// One obstacle, one report at t = 0, constants of the small grid.
fn single_obstacle_scenario(speed: f64) -> Scenario {
    let start = Vec2::zeros();
    let goal = Vec2::new(2.5, 0.0);
    Scenario {
        version: SCENARIO_VERSION,
        name: "single".into(),
        start,
        start_heading: 0.0,
        goal,
        goal_tolerance: 0.1,
        max_speed: 0.5,
        obstacles: vec![ObstacleSpec {
            initial: ObstacleState::new(Vec2::new(1.2, -1.5), std::f64::consts::FRAC_PI_2, speed, 0.0),
            noise: NoiseBounds::new(0.02, 0.05),
            footprint: Footprint::default(),
        }],
        info: InfoSchedule::Times(vec![0.0]),
        dt: 0.1,
        gains: Gains::new(5.0, 10.0, 0.51),
        horizon: 8.0,
        time_budget: 15.0,
        seed: 3,
        geometry: SliceGeometry::Sector,
    }
}

#[test]
fn gen_data_counts_and_determinism() {
    let dir = TempDir::new().unwrap();
    let spec = tiny_spec();
    let a = gen(&dir, &spec, "a");
    let spec_path = dir.path().join("a.toml");
    let b = dir.path().join("b.data");
    let r = reachpf(&["gen-data", "--spec", s(&spec_path), "--out", s(&b)]);
    assert_eq!(r.code, 0);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let data = Dataset::load(&a).unwrap();
    assert_eq!(data.len() + data.excluded(), 8);
    assert!(r.stdout.contains(&format!("samples {} of 8", data.len())), "{}", r.stdout);
    assert_eq!(data.spec, spec);
}

#[test]
fn gen_data_empty_dataset_warns() {
    let dir = TempDir::new().unwrap();
    let spec = GridSpec {
        along: AxisSpec::new(-0.1, 0.1, 2),
        cross: AxisSpec::new(-0.1, 0.1, 2),
        elapsed: AxisSpec::fixed(0.0),
        ..small_spec()
    };
    let spec_path = write(&dir, "g.toml", &spec.to_toml());
    let out = dir.path().join("g.data");
    let r = reachpf(&["gen-data", "--spec", s(&spec_path), "--out", s(&out)]);
    assert_eq!(r.code, 0);
    assert!(r.stderr.contains("empty"), "{}", r.stderr);
    assert!(Dataset::load(&out).unwrap().is_empty());

    // training on it is a data error
    let r = reachpf(&["train", "--data", s(&out), "--out", s(&dir.path().join("m"))]);
    assert_eq!(r.code, 3, "{}", r.stderr);
}

#[test]
fn gen_data_invalid_range_names_field() {
    let dir = TempDir::new().unwrap();
    let spec = GridSpec { cross: AxisSpec::new(3.0, -3.0, 5), ..small_spec() };
    let spec_path = write(&dir, "bad.toml", &spec.to_toml());
    let r = reachpf(&["gen-data", "--spec", s(&spec_path), "--out", s(&dir.path().join("x"))]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("cross"), "{}", r.stderr);

    let missing = dir.path().join("missing.toml");
    let r = reachpf(&["gen-data", "--spec", s(&missing), "--out", s(&dir.path().join("x"))]);
    assert_eq!(r.code, 3);

    let broken = write(&dir, "broken.toml", "version = 1\nalong = 3\n");
    let r = reachpf(&["gen-data", "--spec", s(&broken), "--out", s(&dir.path().join("x"))]);
    assert_eq!(r.code, 2);
}

#[test]
fn train_memorises_toy_data_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let data = gen(&dir, &tiny_spec(), "toy");
    let cfg = TrainConfig {
        hidden: vec![16, 16],
        epochs: 3000,
        batch_size: 8,
        learning_rate: 0.01,
        optimizer: reachpf::nn::Optimizer::Adam,
        validation_fraction: 0.0,
        ..TrainConfig::default()
    };
    let cfg_path = write(&dir, "cfg.toml", &cfg.to_toml());
    let m1 = dir.path().join("m1.model");
    let m2 = dir.path().join("m2.model");
    for m in [&m1, &m2] {
        let r = reachpf(&["train", "--data", s(&data), "--config", s(&cfg_path), "--out", s(m), "--seed", "9"]);
        assert_eq!(r.code, 0, "{}", r.stderr);
    }
    assert_eq!(fs::read(&m1).unwrap(), fs::read(&m2).unwrap());

    let log = fs::read_to_string(dir.path().join("m1.model.loss.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(log.as_bytes());
    assert_eq!(rdr.headers().unwrap(), vec!["epoch", "train_mse", "val_mse"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3000);
    let final_mse: f64 = rows.last().unwrap()[1].parse().unwrap();
    assert!(final_mse < 1e-6, "final mse {final_mse}");

    let other = dir.path().join("m3.model");
    let r = reachpf(&["train", "--data", s(&data), "--config", s(&cfg_path), "--out", s(&other), "--seed", "10"]);
    assert_eq!(r.code, 0);
    assert_ne!(fs::read(&m1).unwrap(), fs::read(&other).unwrap());
}

#[test]
fn train_held_out_mse_matches_recomputation() {
    let dir = TempDir::new().unwrap();
    let data_path = gen(&dir, &small_spec(), "small");
    let cfg = TrainConfig { epochs: 5, learning_rate: 0.005, validation_fraction: 0.2, ..TrainConfig::default() };
    let cfg_path = write(&dir, "cfg.toml", &cfg.to_toml());
    let model = dir.path().join("small.model");
    let log = dir.path().join("loss.csv");
    let r = reachpf(&[
        "train", "--data", s(&data_path), "--config", s(&cfg_path), "--out", s(&model), "--seed", "4",
        "--loss-log", s(&log),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let printed: f64 = r.stdout.split("held-out mse ").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();

    let data = Dataset::load(&data_path).unwrap();
    let net = GradientNet::load(&model).unwrap();
    let (_, val) = split_indices(data.len(), 0.2, 4);
    assert_eq!(printed, dataset_mse(&net, &data, &val));
    let last = fs::read_to_string(&log).unwrap().lines().last().unwrap().to_string();
    assert_eq!(last.split(',').nth(2).unwrap().parse::<f64>().unwrap(), printed);
}

#[test]
fn train_divergence_exit_code() {
    let dir = TempDir::new().unwrap();
    let data = gen(&dir, &small_spec(), "d");
    let cfg = TrainConfig { epochs: 50, learning_rate: 1e4, momentum: 0.99, ..TrainConfig::default() };
    let cfg_path = write(&dir, "cfg.toml", &cfg.to_toml());
    let r = reachpf(&["train", "--data", s(&data), "--config", s(&cfg_path), "--out", s(&dir.path().join("m"))]);
    assert_eq!(r.code, 4, "{}", r.stderr);
    assert!(r.stderr.contains("diverged"), "{}", r.stderr);
}

#[test]
fn train_bad_inputs() {
    let dir = TempDir::new().unwrap();
    let data = gen(&dir, &tiny_spec(), "t");
    let bad_cfg = write(&dir, "bad.toml", &TrainConfig { batch_size: 0, ..TrainConfig::default() }.to_toml());
    let r = reachpf(&["train", "--data", s(&data), "--config", s(&bad_cfg), "--out", s(&dir.path().join("m"))]);
    assert_eq!(r.code, 2);

    let garbage = write(&dir, "garbage.data", "not a dataset");
    let r = reachpf(&["train", "--data", s(&garbage), "--out", s(&dir.path().join("m"))]);
    assert_eq!(r.code, 3);

    let mut bytes = fs::read(&data).unwrap();
    bytes.truncate(bytes.len() - 3);
    let cut = dir.path().join("cut.data");
    fs::write(&cut, bytes).unwrap();
    let r = reachpf(&["train", "--data", s(&cut), "--out", s(&dir.path().join("m"))]);
    assert_eq!(r.code, 3);
}

#[test]
fn simulate_zero_obstacles_and_determinism() {
    let dir = TempDir::new().unwrap();
    let mut scenario = single_obstacle_scenario(0.5);
    scenario.obstacles.clear();
    let path = write(&dir, "empty.toml", &scenario.to_toml());
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let summary = dir.path().join("a.json");
    let r = reachpf(&[
        "simulate", "--scenario", s(&path), "--controller", "exact-pf", "--out", s(&a), "--summary", s(&summary),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.starts_with("status goal-reached"), "{}", r.stdout);
    let r = reachpf(&["simulate", "--scenario", s(&path), "--controller", "exact-pf", "--out", s(&b)]);
    assert_eq!(r.code, 0);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let table = read_trace_csv(fs::File::open(&a).unwrap()).unwrap();
    assert_eq!(table.n_obstacles(), 0);
    let back: TrialSummary = serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(back.steps, table.rows.len());
}

#[test]
fn simulate_seed_flag_overrides_scenario() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "one.toml", &single_obstacle_scenario(0.5).to_toml());
    let out = |seed: &str, name: &str| {
        let p = dir.path().join(name);
        assert_eq!(reachpf(&["simulate", "--scenario", s(&path), "--controller", "exact-pf", "--seed", seed, "--out", s(&p)]).code, 0);
        fs::read(p).unwrap()
    };
    assert_ne!(out("1", "s1.csv"), out("2", "s2.csv"));
    assert_eq!(out("1", "s1.csv"), out("1", "s1b.csv"));
}

#[test]
fn simulate_uuv_exact_keeps_delta() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "uuv.toml", &build_uuv_scenario(0).to_toml());
    let trace = dir.path().join("uuv.csv");
    let summary = dir.path().join("uuv.json");
    let r = reachpf(&[
        "simulate", "--scenario", s(&path), "--controller", "exact-pf", "--out", s(&trace), "--summary", s(&summary),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let sum: TrialSummary = serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert!(sum.min_dist_tube.unwrap() >= 5.0, "{sum:?}");
    let table = read_trace_csv(fs::File::open(&trace).unwrap()).unwrap();
    assert_eq!(table.n_obstacles(), 8);
    let min_tube = (0..8)
        .flat_map(|i| table.column(&format!("obs{i}_dist_tube")).unwrap())
        .fold(f64::INFINITY, f64::min);
    assert_eq!(min_tube, sum.min_dist_tube.unwrap());
}

#[test]
fn simulate_model_errors() {
    let dir = TempDir::new().unwrap();
    let scen = write(&dir, "one.toml", &single_obstacle_scenario(0.5).to_toml());
    let out = dir.path().join("t.csv");
    let r = reachpf(&["simulate", "--scenario", s(&scen), "--controller", "nn", "--out", s(&out)]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("--model"));

    let missing = dir.path().join("missing.model");
    let r = reachpf(&["simulate", "--scenario", s(&scen), "--controller", "nn", "--model", s(&missing), "--out", s(&out)]);
    assert_eq!(r.code, 3);

    let bad = write(&dir, "bad.toml", &Scenario { dt: -1.0, ..single_obstacle_scenario(0.5) }.to_toml());
    let r = reachpf(&["simulate", "--scenario", s(&bad), "--controller", "exact-pf", "--out", s(&out)]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("dt"), "{}", r.stderr);
}

#[test]
fn simulate_out_of_domain_exit_code() {
    let dir = TempDir::new().unwrap();
    let data = gen(&dir, &tiny_spec(), "t");
    let cfg = write(&dir, "cfg.toml", &TrainConfig { epochs: 2, ..TrainConfig::default() }.to_toml());
    let model = dir.path().join("t.model");
    assert_eq!(reachpf(&["train", "--data", s(&data), "--config", s(&cfg), "--out", s(&model)]).code, 0);

    // the model was trained for obstacles at 0.5 m/s
    let scen = write(&dir, "fast.toml", &single_obstacle_scenario(0.9).to_toml());
    let out = dir.path().join("t.csv");
    let r = reachpf(&["simulate", "--scenario", s(&scen), "--controller", "nn", "--model", s(&model), "--out", s(&out)]);
    assert_eq!(r.code, 5, "{} {}", r.stdout, r.stderr);
    assert!(r.stdout.contains("out-of-domain"));
    assert!(read_trace_csv(fs::File::open(&out).unwrap()).is_ok());
}

#[test]
fn evaluate_writes_parsable_outputs() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("eval");
    let r = reachpf(&[
        "evaluate", "--family", "ugv-cross", "--controllers", "exact-pf,noise-free-pf,nn", "--trials", "3", "--seed",
        "5", "--out-dir", s(&out),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let summary: EvalSummary = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.trials, 3);
    assert_eq!(summary.rows.len(), 9);
    let rows = read_minima_csv(fs::File::open(out.join("minima.csv")).unwrap()).unwrap();
    assert_eq!(rows, summary.rows);
    // nn without a model fails per trial, the batch still completes
    let nn = summary.controllers.iter().find(|c| c.controller.name() == "nn").unwrap();
    assert_eq!(nn.failures, 3);
    for i in 0..3 {
        let p = out.join("trials").join(format!("exact-pf-{i:03}.csv"));
        assert!(read_trace_csv(fs::File::open(p).unwrap()).is_ok());
    }
    assert!(!out.join("trials").join("nn-000.csv").exists());
}

#[test]
fn evaluate_single_trial_equals_simulate() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("eval");
    let r = reachpf(&["evaluate", "--family", "ugv-parallel", "--trials", "1", "--seed", "11", "--out-dir", s(&out)]);
    assert_eq!(r.code, 0, "{}", r.stderr);

    let scenario = reachpf::eval::Family::UgvParallel.scenario(11);
    let scen = write(&dir, "p.toml", &scenario.to_toml());
    let trace = dir.path().join("p.csv");
    assert_eq!(reachpf(&["simulate", "--scenario", s(&scen), "--controller", "exact-pf", "--out", s(&trace)]).code, 0);
    assert_eq!(fs::read(out.join("trials").join("exact-pf-000.csv")).unwrap(), fs::read(&trace).unwrap());
}

#[test]
fn evaluate_usage_errors() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("e");
    assert_eq!(reachpf(&["evaluate", "--family", "uuv", "--trials", "0", "--out-dir", s(&out)]).code, 2);
    assert_eq!(reachpf(&["evaluate", "--family", "uuv", "--controllers", "exact-pf,x", "--out-dir", s(&out)]).code, 2);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_reachpf");
    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code().unwrap();
    assert_eq!(status(&["--help"]), 0);
    assert_eq!(status(&["--version"]), 0);
    assert_eq!(status(&["frobnicate"]), 2);
    assert_eq!(status(&["train", "--data", "/nonexistent", "--out", "/nonexistent/m"]), 3);
}
