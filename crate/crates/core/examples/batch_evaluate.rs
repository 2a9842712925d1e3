//! Library-level batch evaluation: seeded trials of one family for several
//! controllers, aggregated and written to disk as the CLI's `evaluate`
//! does.
//!
//!     cargo run --release --example batch_evaluate [family] [trials] [out-dir]

use std::path::PathBuf;

use reachpf::eval::{evaluate, write_outputs, EvalConfig, Family};
use reachpf::sim::ControllerKind;

fn main() {
    let mut args = std::env::args().skip(1);
    let family: Family = args.next().map_or(Family::UgvCross, |s| s.parse().unwrap());
    let trials: usize = args.next().map_or(10, |s| s.parse().unwrap());
    let out_dir = PathBuf::from(args.next().unwrap_or_else(|| format!("target/example-out/eval-{family}")));

    let cfg = EvalConfig {
        family,
        controllers: vec![ControllerKind::ExactPf, ControllerKind::NoiseFreePf, ControllerKind::PointPf],
        trials,
        base_seed: 0,
        benchmark_iterations: 0,
    };
    let (summary, runs) = evaluate(&cfg, None);
    write_outputs(&out_dir, &summary, &runs).unwrap();

    for s in &summary.controllers {
        println!(
            "{:<14} goal {:>3}/{}  tube<delta {:>3}  violations {:>3}  min tube {:>8}  min true {:>8}  {:.1} us/step",
            s.controller.name(),
            s.goal_reached,
            s.trials,
            s.tube_breaches,
            s.violations,
            s.min_dist_tube.map_or("-".into(), |d| format!("{d:.2}")),
            s.min_dist_true.map_or("-".into(), |d| format!("{d:.2}")),
            s.mean_control_us
        );
    }
    println!("wrote {}", out_dir.display());
}
