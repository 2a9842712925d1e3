//! The two ground-vehicle cases (obstacles moving in opposite and in the
//! same direction), run with a freshly trained network and the exact tube
//! field. Writes the distance-over-time table for plotting.
//!
//!     cargo run --release --example ugv_experiments [out-dir]

use std::io::Write;
use std::path::PathBuf;

use reachpf::nn::{fit_gradient_net, generate_training_data, TrainConfig};
use reachpf::scenarios::{build_ugv_scenario, ugv, ugv_grid_spec, UgvCase};
use reachpf::sim::{run, ControllerKind};

fn main() {
    let out_dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/example-out".into()));
    std::fs::create_dir_all(&out_dir).unwrap();

    let data = generate_training_data(&ugv_grid_spec()).unwrap();
    let cfg = TrainConfig { epochs: 20, learning_rate: 0.005, decay_every: 7, seed: 1, ..TrainConfig::default() };
    let (net, report) = fit_gradient_net(&data, &cfg).unwrap();
    println!("network trained on {} samples, held-out mse {:.4}", data.len(), report.final_val_mse());

    for case in [UgvCase::Crossing, UgvCase::Parallel] {
        let scenario = build_ugv_scenario(case);
        for c in [ControllerKind::Nn, ControllerKind::ExactPf] {
            let trace = run(&scenario, c, (c == ControllerKind::Nn).then_some(&net)).unwrap();
            println!(
                "{:<13} {:<9} {:<13} t {:>4.1} s  closest approach {:.3} m (delta {})",
                scenario.name,
                c.name(),
                trace.status.name(),
                trace.final_time(),
                trace.min_dist_true(),
                ugv::DELTA
            );
            let path = out_dir.join(format!("{}-{}-distance.csv", scenario.name, c.name()));
            let mut f = std::fs::File::create(&path).unwrap();
            writeln!(f, "time,min_distance").unwrap();
            for r in &trace.records {
                let d = r.obstacles.iter().map(|o| o.dist_true).fold(f64::INFINITY, f64::min);
                writeln!(f, "{},{}", r.time, d).unwrap();
            }
        }
    }
}
