//! The underwater vehicle crossing a two-lane shipping channel after a
//! single surfacing broadcast, for a few ship-phase seeds. Compares the
//! tube field with noise-aware and noise-free tubes, and optionally a
//! trained network.
//!
//!     cargo run --release --example uuv_channel [trials] [model-path]

use reachpf::nn::GradientNet;
use reachpf::scenarios::{build_uuv_scenario, uuv};
use reachpf::sim::{run, ControllerKind};

fn main() {
    let mut args = std::env::args().skip(1);
    let trials: u64 = args.next().map_or(5, |s| s.parse().expect("trial count"));
    let model = args.next().map(|p| GradientNet::load(p.as_ref()).expect("model file"));

    let mut controllers = vec![ControllerKind::ExactPf, ControllerKind::NoiseFreePf];
    if model.is_some() {
        controllers.insert(0, ControllerKind::Nn);
    }
    println!("delta = {} m; distances are to the reach tube built with the true noise bounds", uuv::DELTA);
    println!("{:<4} {:<14} {:<13} {:>8} {:>10} {:>10}", "seed", "controller", "status", "time s", "tube m", "ship m");
    for seed in 0..trials {
        let scenario = build_uuv_scenario(seed);
        for &c in &controllers {
            let net = if c == ControllerKind::Nn { model.as_ref() } else { None };
            let trace = run(&scenario, c, net).unwrap();
            println!(
                "{seed:<4} {:<14} {:<13} {:>8.1} {:>10.2} {:>10.2}{}",
                c.name(),
                trace.status.name(),
                trace.final_time(),
                trace.min_dist_tube(),
                trace.min_dist_true(),
                if trace.min_dist_tube() < uuv::DELTA { "  < delta" } else { "" }
            );
        }
    }
}
