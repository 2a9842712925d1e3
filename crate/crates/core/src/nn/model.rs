//! Trained gradient network: the regressor plus the input scaling, label
//! codec and labelling constants it was trained with.
//!
//! # File layout
//!
//! All integers are little-endian `u32` and all reals little-endian `f64`.
//!
//! ```text
//! magic           8 bytes  "RPFMODEL"
//! version         u32      = 1
//! n_sizes         u32
//! layer sizes     n_sizes x u32   (input dim first, output dim = 2 last)
//! k_p k_r delta   3 x f64         gains used for the labels
//! horizon         f64             tube horizon T, seconds
//! footprint       f64             footprint radius, metres
//! speed_bound     f64             noise bounds used for the labels
//! heading_bound   f64
//! label_scale     f64             label codec scale
//! n_features      u32
//! ranges          n_features x (min f64, max f64)
//! per layer:      weights (inputs x outputs, row-major) then biases
//! ```
//!
//! Nothing may follow the last bias.

use std::path::Path;

use super::data::LoadError;
use super::features::FEATURE_DIM;
use super::{Mlp, NnError};
use crate::dynamics::NoiseBounds;
use crate::io::{ByteReader, ByteWriter};
use crate::potential::Gains;
use crate::Vec2;

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MODEL_MAGIC: &[u8; 8] = b"RPFMODEL";

/// Per-feature affine map of `[min, max]` onto `[-1, 1]`. Degenerate
/// ranges map to 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureScaling {
    pub min: [f64; FEATURE_DIM],
    pub max: [f64; FEATURE_DIM],
}

impl FeatureScaling {
    pub fn is_degenerate(&self, d: usize) -> bool {
        !(self.max[d] > self.min[d])
    }

    pub fn normalize(&self, x: &[f64; FEATURE_DIM]) -> [f64; FEATURE_DIM] {
        let mut out = [0.0; FEATURE_DIM];
        for d in 0..FEATURE_DIM {
            if !self.is_degenerate(d) {
                out[d] = 2.0 * (x[d] - self.min[d]) / (self.max[d] - self.min[d]) - 1.0;
            }
        }
        out
    }
}

/// Log-magnitude label encoding: `z = g/|g| * ln(1 + |g|/scale)`.
///
/// Repulsive gradients span many orders of magnitude across a grid; the
/// encoding keeps direction exact and compresses magnitude so a squared
/// error loss weighs near and far samples comparably.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelCodec {
    pub scale: f64,
}

impl LabelCodec {
    pub fn encode(&self, g: Vec2) -> [f64; 2] {
        let m = g.norm();
        if m == 0.0 {
            return [0.0, 0.0];
        }
        let k = (m / self.scale).ln_1p() / m;
        [g.x * k, g.y * k]
    }

    pub fn decode(&self, z: [f64; 2]) -> Vec2 {
        let z = Vec2::new(z[0], z[1]);
        let n = z.norm();
        if n == 0.0 {
            return Vec2::zeros();
        }
        z * (self.scale * n.exp_m1() / n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientNet {
    pub mlp: Mlp,
    pub scaling: FeatureScaling,
    pub codec: LabelCodec,
    pub gains: Gains,
    pub horizon: f64,
    pub footprint_radius: f64,
    pub noise: NoiseBounds,
}

impl GradientNet {
    /// Raw network output for already computed features, decoded into a
    /// gradient in the obstacle frame. No domain checks.
    pub fn predict_features(&self, features: &[f64; FEATURE_DIM]) -> Vec2 {
        let mut out = [0.0; 2];
        self.mlp.forward_into(&self.scaling.normalize(features), &mut out);
        self.codec.decode(out)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.bytes(MODEL_MAGIC);
        w.u32(MODEL_FORMAT_VERSION);
        let sizes = self.mlp.layer_sizes();
        w.u32(sizes.len() as u32);
        for s in sizes {
            w.u32(*s as u32);
        }
        w.f64s(&[
            self.gains.k_p,
            self.gains.k_r,
            self.gains.delta,
            self.horizon,
            self.footprint_radius,
            self.noise.speed_bound,
            self.noise.heading_bound,
            self.codec.scale,
        ]);
        w.u32(FEATURE_DIM as u32);
        for d in 0..FEATURE_DIM {
            w.f64(self.scaling.min[d]);
            w.f64(self.scaling.max[d]);
        }
        w.f64s(self.mlp.parameters());
        w.into_inner()
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, NnError> {
        let mut r = ByteReader::new(buf);
        r.expect(MODEL_MAGIC)?;
        let version = r.u32("version")?;
        if version != MODEL_FORMAT_VERSION {
            return Err(NnError::UnsupportedVersion { found: version, expected: MODEL_FORMAT_VERSION });
        }
        let at = r.offset();
        let n_sizes = r.u32("layer count")? as usize;
        if !(2..=1024).contains(&n_sizes) {
            return Err(NnError::Format { offset: at, message: format!("bad layer count {n_sizes}") });
        }
        let mut sizes = Vec::with_capacity(n_sizes);
        for _ in 0..n_sizes {
            let at = r.offset();
            let s = r.u32("layer size")? as usize;
            if s == 0 || s > 1 << 16 {
                return Err(NnError::Format { offset: at, message: format!("bad layer size {s}") });
            }
            sizes.push(s);
        }
        if sizes[0] != FEATURE_DIM || sizes[n_sizes - 1] != 2 {
            return Err(NnError::Format {
                offset: at,
                message: format!("layer sizes {sizes:?} must start at {FEATURE_DIM} and end at 2"),
            });
        }
        let gains = Gains::new(r.finite_f64("k_p")?, r.finite_f64("k_r")?, r.finite_f64("delta")?);
        let horizon = r.finite_f64("horizon")?;
        let footprint_radius = r.finite_f64("footprint radius")?;
        let noise = NoiseBounds::new(r.finite_f64("speed bound")?, r.finite_f64("heading bound")?);
        let at = r.offset();
        let scale = r.finite_f64("label scale")?;
        if !(scale > 0.0) {
            return Err(NnError::Format { offset: at, message: "label scale must be positive".into() });
        }
        let at = r.offset();
        let nf = r.u32("feature count")? as usize;
        if nf != FEATURE_DIM {
            return Err(NnError::Format {
                offset: at,
                message: format!("expected {FEATURE_DIM} features, found {nf}"),
            });
        }
        let mut scaling = FeatureScaling { min: [0.0; FEATURE_DIM], max: [0.0; FEATURE_DIM] };
        for d in 0..FEATURE_DIM {
            scaling.min[d] = r.finite_f64("range min")?;
            let at = r.offset();
            scaling.max[d] = r.finite_f64("range max")?;
            if scaling.max[d] < scaling.min[d] {
                return Err(NnError::Format { offset: at, message: "range max below min".into() });
            }
        }
        let n_params: usize = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        let at = r.offset();
        let params = r.f64s(n_params, "parameters")?;
        if let Some(k) = params.iter().position(|p| !p.is_finite()) {
            return Err(NnError::Format { offset: at + 8 * k, message: "parameter is not finite".into() });
        }
        r.finish()?;
        Ok(GradientNet {
            mlp: Mlp::from_parameters(&sizes, params)?,
            scaling,
            codec: LabelCodec { scale },
            gains,
            horizon,
            footprint_radius,
            noise,
        })
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self, LoadError> {
        let buf = std::fs::read(path)?;
        Ok(GradientNet::from_bytes(&buf)?)
    }
}
