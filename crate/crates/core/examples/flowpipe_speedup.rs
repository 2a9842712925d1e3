//! Per-query cost of the trained network against rebuilding the interval
//! flowpipe from scratch and querying it, on the same inputs, for the
//! shipping-channel tube (600 s horizon, 6000 boxes). The network is only
//! briefly trained: its cost does not depend on the fit.
//!
//!     cargo run --release --example flowpipe_speedup [iterations]

use reachpf::eval::speedup_benchmark;
use reachpf::nn::{fit_gradient_net, generate_training_data, TrainConfig};
use reachpf::scenarios::{build_uuv_scenario, uuv_grid_spec};

fn main() {
    let iterations: usize = std::env::args().nth(1).map_or(10_000, |s| s.parse().expect("iteration count"));
    let data = generate_training_data(&uuv_grid_spec()).unwrap();
    let cfg = TrainConfig { epochs: 1, learning_rate: 0.02, ..TrainConfig::default() };
    let (net, _) = fit_gradient_net(&data, &cfg).unwrap();

    let scenario = build_uuv_scenario(0);
    let reports: Vec<_> = scenario.obstacles.iter().map(|o| o.initial).collect();
    let b = speedup_benchmark(&net, &reports, iterations, 0);
    println!("{} queries", b.iterations);
    println!("network          {:>10.0} ns/query", b.nn_mean_ns);
    println!("flowpipe rebuild {:>10.0} ns/query", b.rebuild_mean_ns);
    println!("speedup          {:>10.0}x", b.factor);
}
