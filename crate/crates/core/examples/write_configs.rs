//! Writes the built-in scenarios, training grids and training configs as
//! TOML, ready for the `reachpf` command line.
//!
//!     cargo run --release --example write_configs [out-dir]

use std::path::PathBuf;

use reachpf::nn::TrainConfig;
use reachpf::scenarios::{
    build_head_on_scenario, build_ugv_scenario, build_uuv_scenario, ugv_grid_spec, uuv_grid_spec, UgvCase,
};

fn main() {
    let out_dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/example-out/configs".into()));
    std::fs::create_dir_all(&out_dir).unwrap();

    let uuv_train = TrainConfig { epochs: 40, learning_rate: 0.02, decay_every: 14, seed: 1, ..TrainConfig::default() };
    let ugv_train = TrainConfig { epochs: 20, learning_rate: 0.005, decay_every: 7, seed: 1, ..TrainConfig::default() };
    let files = [
        ("uuv-0.scenario.toml", build_uuv_scenario(0).to_toml()),
        ("ugv-cross.scenario.toml", build_ugv_scenario(UgvCase::Crossing).to_toml()),
        ("ugv-parallel.scenario.toml", build_ugv_scenario(UgvCase::Parallel).to_toml()),
        ("head-on.scenario.toml", build_head_on_scenario().to_toml()),
        ("uuv.grid.toml", uuv_grid_spec().to_toml()),
        ("ugv.grid.toml", ugv_grid_spec().to_toml()),
        ("uuv.train.toml", uuv_train.to_toml()),
        ("ugv.train.toml", ugv_train.to_toml()),
    ];
    for (name, text) in files {
        let path = out_dir.join(name);
        std::fs::write(&path, text).unwrap();
        println!("{}", path.display());
    }
}
