//! Generates the ground-vehicle training grid, fits the 4x16 gradient
//! network, reports held-out fidelity, and saves and reloads the model.
//!
//!     cargo run --release --example train_nn [model-path]

use std::path::PathBuf;
use std::time::Instant;

use reachpf::nn::{fit_gradient_net, generate_training_data, GradientNet, TrainConfig};
use reachpf::scenarios::ugv_grid_spec;

fn main() {
    let path = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/example-out/ugv.model".into()));
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).unwrap();
    }

    let spec = ugv_grid_spec();
    let t = Instant::now();
    let data = generate_training_data(&spec).unwrap();
    println!(
        "{} samples from {} grid points in {:.2?} ({} within delta, {} above cap)",
        data.len(),
        spec.point_count(),
        t.elapsed(),
        data.excluded_margin,
        data.excluded_cap
    );

    let cfg = TrainConfig { epochs: 20, learning_rate: 0.005, decay_every: 7, seed: 1, ..TrainConfig::default() };
    let t = Instant::now();
    let (net, report) = fit_gradient_net(&data, &cfg).unwrap();
    println!("trained in {:.2?}", t.elapsed());
    for e in report.history.iter().step_by(4) {
        println!("  epoch {:>3}  train {:.5}  held-out {:.5}", e.epoch, e.train_mse, e.val_mse);
    }

    let mut cosines = Vec::new();
    let mut angles = Vec::new();
    for &i in &report.val_indices {
        let exact = data.label(i);
        let approx = net.predict_features(&data.input(i).try_into().unwrap());
        let c = (approx.dot(&exact) / (approx.norm() * exact.norm())).clamp(-1.0, 1.0);
        cosines.push(c);
        angles.push(c.acos().to_degrees());
    }
    angles.sort_by(f64::total_cmp);
    println!(
        "held-out: mean cosine {:.4}, median angle {:.2} deg, 95th percentile {:.2} deg",
        cosines.iter().sum::<f64>() / cosines.len() as f64,
        angles[angles.len() / 2],
        angles[angles.len() * 95 / 100]
    );

    net.save(&path).unwrap();
    let back = GradientNet::load(&path).unwrap();
    assert_eq!(back.mlp.parameters(), net.mlp.parameters());
    println!("saved {} ({} parameters)", path.display(), net.mlp.parameters().len());
}
