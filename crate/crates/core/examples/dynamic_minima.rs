//! An obstacle on a collision course with the robot. The point-obstacle
//! field pushes the robot along in front of it; the reach-tube field sends
//! it behind. Writes both traces as CSV.
//!
//!     cargo run --release --example dynamic_minima [out-dir]

use std::fs::File;
use std::path::PathBuf;

use reachpf::scenarios::build_head_on_scenario;
use reachpf::sim::{run, write_trace_csv, ControllerKind};

fn main() {
    let out_dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/example-out".into()));
    std::fs::create_dir_all(&out_dir).unwrap();
    let scenario = build_head_on_scenario();
    println!("{}: start {:?} goal {:?}", scenario.name, scenario.start.as_slice(), scenario.goal.as_slice());

    for controller in [ControllerKind::ExactPf, ControllerKind::NoiseFreePf, ControllerKind::PointPf] {
        let trace = run(&scenario, controller, None).unwrap();
        let path = out_dir.join(format!("head-on-{controller}.csv"));
        write_trace_csv(&trace, File::create(&path).unwrap()).unwrap();
        // Furthest the robot was pushed off the straight line to the goal.
        let detour = trace.records.iter().map(|r| r.position.y.abs()).fold(0.0, f64::max);
        println!(
            "{:<14} {:<13} t {:>5.1} s  path {:>6.2} m  max detour {:>5.2} m  min distance {:>5.2} m  -> {}",
            controller.name(),
            trace.status.name(),
            trace.final_time(),
            trace.path_length(),
            detour,
            trace.min_dist_true(),
            path.display()
        );
    }
}
