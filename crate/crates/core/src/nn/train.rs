//! Deterministic mini-batch training.
//!
//! Batch gradients are computed over fixed-size chunks in parallel and
//! summed in chunk order, so results do not depend on the thread count.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{Dataset, LABEL_DIM};
use super::features::FEATURE_DIM;
use super::model::{FeatureScaling, GradientNet, LabelCodec};
use super::{Mlp, NnError};

pub const TRAIN_CONFIG_VERSION: u32 = 1;
const CHUNK: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    /// Gradient descent with heavy-ball momentum.
    #[default]
    Momentum,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub version: u32,
    /// Hidden layer widths.
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    #[serde(default)]
    pub optimizer: Optimizer,
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    /// Learning rate is multiplied by `lr_decay` every `decay_every` epochs
    /// (0 disables the schedule).
    #[serde(default = "default_decay")]
    pub lr_decay: f64,
    #[serde(default)]
    pub decay_every: usize,
    pub seed: u64,
    pub validation_fraction: f64,
    /// Label codec scale as a fraction of `k_r`.
    #[serde(default = "default_label_scale")]
    pub label_scale: f64,
}

fn default_momentum() -> f64 {
    0.9
}

fn default_decay() -> f64 {
    0.5
}

fn default_label_scale() -> f64 {
    1e-9
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            version: TRAIN_CONFIG_VERSION,
            hidden: vec![16; 4],
            epochs: 40,
            batch_size: 128,
            learning_rate: 1e-3,
            optimizer: Optimizer::Momentum,
            momentum: default_momentum(),
            lr_decay: default_decay(),
            decay_every: 0,
            seed: 0,
            validation_fraction: 0.1,
            label_scale: default_label_scale(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |m: &str| Err(NnError::InvalidConfig(m.into()));
        if self.version != TRAIN_CONFIG_VERSION {
            return bad(&format!("version: expected {TRAIN_CONFIG_VERSION}, got {}", self.version));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad("validation_fraction must lie in [0, 1)");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1)");
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return bad("lr_decay must lie in (0, 1]");
        }
        if !(self.label_scale > 0.0) {
            return bad("label_scale must be positive");
        }
        if self.hidden.contains(&0) {
            return bad("hidden widths must be positive");
        }
        Ok(())
    }

    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        match epoch.checked_div(self.decay_every) {
            None => self.learning_rate,
            Some(k) => self.learning_rate * self.lr_decay.powi(k as i32),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, NnError> {
        let cfg: TrainConfig =
            toml::from_str(text).map_err(|e| NnError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub history: Vec<EpochLoss>,
    pub train_indices: Vec<usize>,
    /// Held-out sample indices. When empty, `val_mse` reports the
    /// training-set loss instead.
    pub val_indices: Vec<usize>,
}

impl TrainReport {
    pub fn final_val_mse(&self) -> f64 {
        self.history.last().map_or(f64::NAN, |e| e.val_mse)
    }

    pub fn final_train_mse(&self) -> f64 {
        self.history.last().map_or(f64::NAN, |e| e.train_mse)
    }
}

/// Seeded shuffle of `0..n`; the first `floor(fraction * n)` indices are
/// held out. Both parts are returned sorted.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5b17));
    let n_val = (fraction * n as f64).floor() as usize;
    let mut val = idx[..n_val].to_vec();
    let mut train = idx[n_val..].to_vec();
    val.sort_unstable();
    train.sort_unstable();
    (train, val)
}

fn gather(rows: &[usize], flat: &[f64], width: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(rows.len() * width);
    for &r in rows {
        out.extend_from_slice(&flat[r * width..(r + 1) * width]);
    }
    out
}

/// Summed gradient of `mean-over-batch` MSE, plus the summed squared error.
fn batch_gradient(mlp: &Mlp, xs: &[f64], ys: &[f64]) -> (f64, Vec<f64>) {
    let (d_in, d_out) = (mlp.input_dim(), mlp.output_dim());
    let n = xs.len() / d_in;
    let scale = 1.0 / n as f64;
    let parts: Vec<(f64, Vec<f64>)> = xs
        .par_chunks(CHUNK * d_in)
        .zip(ys.par_chunks(CHUNK * d_out))
        .map(|(cx, cy)| {
            let mut g = vec![0.0; mlp.parameters().len()];
            let mut sq = 0.0;
            for (x, y) in cx.chunks_exact(d_in).zip(cy.chunks_exact(d_out)) {
                sq += mlp.accumulate_gradient(x, y, scale, &mut g);
            }
            (sq, g)
        })
        .collect();
    let mut total = vec![0.0; mlp.parameters().len()];
    let mut sq = 0.0;
    for (s, g) in parts {
        sq += s;
        for (t, v) in total.iter_mut().zip(&g) {
            *t += v;
        }
    }
    (sq, total)
}

/// MSE over the selected rows, evaluated in fixed chunks.
pub fn subset_mse(mlp: &Mlp, inputs: &[f64], labels: &[f64], rows: &[usize]) -> f64 {
    if rows.is_empty() {
        return f64::NAN;
    }
    let (d_in, d_out) = (mlp.input_dim(), mlp.output_dim());
    let parts: Vec<f64> = rows
        .par_chunks(1024)
        .map(|chunk| {
            chunk
                .iter()
                .map(|&r| {
                    let out = mlp.forward(&inputs[r * d_in..(r + 1) * d_in]);
                    let y = &labels[r * d_out..(r + 1) * d_out];
                    out.iter().zip(y).map(|(o, t)| (o - t) * (o - t)).sum::<f64>()
                })
                .sum()
        })
        .collect();
    parts.iter().sum::<f64>() / (rows.len() * d_out) as f64
}

struct OptimizerState {
    kind: Optimizer,
    m: Vec<f64>,
    v: Vec<f64>,
    steps: i32,
}

impl OptimizerState {
    fn new(kind: Optimizer, n: usize) -> Self {
        OptimizerState { kind, m: vec![0.0; n], v: vec![0.0; n], steps: 0 }
    }

    fn apply(&mut self, params: &mut [f64], grad: &[f64], lr: f64, momentum: f64) {
        self.steps += 1;
        match self.kind {
            Optimizer::Momentum => {
                for ((p, g), m) in params.iter_mut().zip(grad).zip(&mut self.m) {
                    *m = momentum * *m - lr * g;
                    *p += *m;
                }
            }
            Optimizer::Adam => {
                let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
                let c1 = 1.0 - b1.powi(self.steps);
                let c2 = 1.0 - b2.powi(self.steps);
                for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                }
            }
        }
    }
}

/// Trains `mlp` on flat row-major `inputs`/`labels`, which are used as
/// given (no scaling). Epochs are numbered from 1.
pub fn train(
    mut mlp: Mlp,
    inputs: &[f64],
    labels: &[f64],
    cfg: &TrainConfig,
) -> Result<(Mlp, TrainReport), NnError> {
    cfg.validate()?;
    let (d_in, d_out) = (mlp.input_dim(), mlp.output_dim());
    if !inputs.len().is_multiple_of(d_in) {
        return Err(NnError::DimensionMismatch { expected: d_in, found: inputs.len() % d_in });
    }
    let n = inputs.len() / d_in;
    if n == 0 {
        return Err(NnError::EmptyData);
    }
    if labels.len() != n * d_out {
        return Err(NnError::DimensionMismatch { expected: n * d_out, found: labels.len() });
    }
    let (train_idx, val_idx) = split_indices(n, cfg.validation_fraction, cfg.seed);
    let mut order = train_idx.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut opt = OptimizerState::new(cfg.optimizer, mlp.parameters().len());
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let lr = cfg.learning_rate_at(epoch - 1);
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let xs = gather(batch, inputs, d_in);
            let ys = gather(batch, labels, d_out);
            let (sq, grad) = batch_gradient(&mlp, &xs, &ys);
            if !sq.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(NnError::TrainingDiverged { epoch, loss: sq / (batch.len() * d_out) as f64 });
            }
            opt.apply(mlp.parameters_mut(), &grad, lr, cfg.momentum);
        }
        let train_mse = subset_mse(&mlp, inputs, labels, &train_idx);
        let val_mse = if val_idx.is_empty() {
            train_mse
        } else {
            subset_mse(&mlp, inputs, labels, &val_idx)
        };
        if !train_mse.is_finite() || !val_mse.is_finite() || !mlp.is_finite() {
            let loss = if train_mse.is_finite() { val_mse } else { train_mse };
            return Err(NnError::TrainingDiverged { epoch, loss });
        }
        history.push(EpochLoss { epoch, train_mse, val_mse });
    }
    Ok((mlp, TrainReport { history, train_indices: train_idx, val_indices: val_idx }))
}

/// Input scaling taken from the dataset's grid ranges.
pub fn grid_scaling(data: &Dataset) -> FeatureScaling {
    let axes = data.spec.axes();
    let mut s = FeatureScaling { min: [0.0; FEATURE_DIM], max: [0.0; FEATURE_DIM] };
    for d in 0..FEATURE_DIM {
        s.min[d] = axes[d].1.min;
        s.max[d] = if axes[d].1.is_degenerate() { axes[d].1.min } else { axes[d].1.max };
    }
    s
}

/// Network-space inputs and labels for `data` under `scaling` and `codec`.
pub fn encode_dataset(data: &Dataset, scaling: &FeatureScaling, codec: &LabelCodec) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::with_capacity(data.inputs.len());
    let mut ys = Vec::with_capacity(data.labels.len());
    for i in 0..data.len() {
        let f: [f64; FEATURE_DIM] = data.input(i).try_into().expect("feature row");
        xs.extend_from_slice(&scaling.normalize(&f));
        ys.extend_from_slice(&codec.encode(data.label(i)));
    }
    debug_assert_eq!(ys.len(), data.len() * LABEL_DIM);
    (xs, ys)
}

/// Builds, trains and packages a gradient network for `data`.
pub fn fit_gradient_net(data: &Dataset, cfg: &TrainConfig) -> Result<(GradientNet, TrainReport), NnError> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(NnError::EmptyData);
    }
    let scaling = grid_scaling(data);
    let codec = LabelCodec { scale: cfg.label_scale * data.spec.gains.k_r };
    let (xs, ys) = encode_dataset(data, &scaling, &codec);
    let mut sizes = vec![FEATURE_DIM];
    sizes.extend_from_slice(&cfg.hidden);
    sizes.push(LABEL_DIM);
    let mlp = Mlp::new(&sizes, &mut ChaCha8Rng::seed_from_u64(cfg.seed))?;
    let (mlp, report) = train(mlp, &xs, &ys, cfg)?;
    let net = GradientNet {
        mlp,
        scaling,
        codec,
        gains: data.spec.gains,
        horizon: data.spec.horizon,
        footprint_radius: data.spec.footprint_radius,
        noise: data.spec.noise,
    };
    Ok((net, report))
}

/// Encoded-label MSE of `net` over the selected dataset rows; reproduces
/// the loss reported during training.
pub fn dataset_mse(net: &GradientNet, data: &Dataset, rows: &[usize]) -> f64 {
    let (xs, ys) = encode_dataset(data, &net.scaling, &net.codec);
    subset_mse(&net.mlp, &xs, &ys, rows)
}
