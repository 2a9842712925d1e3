//! Grid-based training data: the robot sits at the origin and the
//! obstacle report is swept over a grid of relative configurations. Each
//! label is the exact repulsive gradient of the report's tube slice.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{featurize, FEATURE_DIM};
use super::NnError;
use crate::dynamics::{NoiseBounds, ObstacleState};
use crate::io::{ByteReader, ByteWriter};
use crate::potential::{repulsive_gradient, Gains};
use crate::reachability::{forward_reach_tube, SliceGeometry};
use crate::Vec2;

pub const GRID_SPEC_VERSION: u32 = 1;
const DATA_MAGIC: &[u8; 8] = b"RPFDATA\0";
const DATA_FORMAT_VERSION: u32 = 1;
const CHUNK: usize = 4096;

/// `steps` evenly spaced values from `min` to `max` inclusive. One step
/// means the axis is pinned at `min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl AxisSpec {
    pub fn new(min: f64, max: f64, steps: usize) -> Self {
        AxisSpec { min, max, steps }
    }

    pub fn fixed(value: f64) -> Self {
        AxisSpec { min: value, max: value, steps: 1 }
    }

    pub fn value(&self, k: usize) -> f64 {
        if self.steps <= 1 {
            self.min
        } else if k + 1 == self.steps {
            self.max
        } else {
            self.min + (self.max - self.min) * k as f64 / (self.steps - 1) as f64
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.steps <= 1 || self.max == self.min
    }

    fn validate(&self, field: &'static str) -> Result<(), NnError> {
        let bad = |reason: &str| Err(NnError::InvalidGrid { field, reason: reason.into() });
        if !(self.min.is_finite() && self.max.is_finite()) {
            return bad("range must be finite");
        }
        if self.steps == 0 {
            return bad("steps must be at least 1");
        }
        if self.max < self.min {
            return bad("max is below min");
        }
        if self.steps > 1 && self.max == self.min {
            return bad("several steps over an empty range");
        }
        Ok(())
    }
}

fn default_label_cap() -> f64 {
    1e3
}

/// Grid over the network inputs, plus everything needed to label it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub version: u32,
    /// Robot offset from the report along the obstacle heading, metres.
    pub along: AxisSpec,
    /// Robot offset across the obstacle heading, metres.
    pub cross: AxisSpec,
    /// Robot heading relative to the obstacle heading, radians.
    pub rel_heading: AxisSpec,
    /// Obstacle nominal speed, m/s.
    pub speed: AxisSpec,
    /// Time since the report, seconds.
    pub elapsed: AxisSpec,
    pub gains: Gains,
    pub horizon: f64,
    pub footprint_radius: f64,
    pub noise: NoiseBounds,
    #[serde(default)]
    pub geometry: SliceGeometry,
    /// Labels with a larger norm are excluded.
    #[serde(default = "default_label_cap")]
    pub label_cap: f64,
}

impl GridSpec {
    pub fn axes(&self) -> [(&'static str, &AxisSpec); FEATURE_DIM] {
        [
            ("along", &self.along),
            ("cross", &self.cross),
            ("rel_heading", &self.rel_heading),
            ("speed", &self.speed),
            ("elapsed", &self.elapsed),
        ]
    }

    pub fn point_count(&self) -> usize {
        self.axes().iter().map(|(_, a)| a.steps).product()
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if self.version != GRID_SPEC_VERSION {
            return Err(NnError::InvalidGrid {
                field: "version",
                reason: format!("expected {GRID_SPEC_VERSION}, got {}", self.version),
            });
        }
        for (name, axis) in self.axes() {
            axis.validate(name)?;
        }
        let bad = |field, reason: &str| Err(NnError::InvalidGrid { field, reason: reason.into() });
        if !self.gains.is_valid() {
            return bad("gains", "k_p, k_r and delta must be positive");
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad("horizon", "must be positive");
        }
        if self.elapsed.min < 0.0 || self.elapsed.max > self.horizon {
            return bad("elapsed", "must lie within [0, horizon]");
        }
        if self.speed.min < 0.0 {
            return bad("speed", "must be non-negative");
        }
        if !(self.footprint_radius >= 0.0) {
            return bad("footprint_radius", "must be non-negative");
        }
        if !(self.noise.heading_bound <= std::f64::consts::FRAC_PI_2) {
            return bad("noise", "heading bound above pi/2");
        }
        if !(self.label_cap > 0.0) {
            return bad("label_cap", "must be positive");
        }
        Ok(())
    }

    /// Grid coordinates of flat index `i`; `along` varies slowest and
    /// `elapsed` fastest.
    pub fn coordinates(&self, mut i: usize) -> [f64; FEATURE_DIM] {
        let axes = self.axes();
        let mut out = [0.0; FEATURE_DIM];
        for d in (0..FEATURE_DIM).rev() {
            let n = axes[d].1.steps;
            out[d] = axes[d].1.value(i % n);
            i /= n;
        }
        out
    }

    /// Robot position, robot heading, obstacle report and query time that
    /// realise grid point `coords`. The robot is at the origin and the
    /// report is timestamped 0.
    pub fn configuration(coords: &[f64; FEATURE_DIM]) -> (Vec2, f64, ObstacleState, f64) {
        let [along, cross, rel_heading, speed, elapsed] = *coords;
        let o = ObstacleState::new(Vec2::new(-along, -cross), 0.0, speed, 0.0);
        (Vec2::zeros(), rel_heading, o, elapsed)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("grid spec serialises")
    }

    pub fn from_toml(text: &str) -> Result<Self, NnError> {
        let spec: GridSpec = toml::from_str(text).map_err(|e| NnError::InvalidGrid {
            field: "file",
            reason: e.to_string(),
        })?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Labelled samples in flat row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub spec: GridSpec,
    pub inputs: Vec<f64>,
    pub labels: Vec<f64>,
    /// Grid points skipped because the tube distance was within delta.
    pub excluded_margin: usize,
    /// Grid points skipped because the label norm exceeded the cap.
    pub excluded_cap: usize,
}

pub const LABEL_DIM: usize = 2;

impl Dataset {
    pub fn len(&self) -> usize {
        self.inputs.len() / FEATURE_DIM
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * FEATURE_DIM..(i + 1) * FEATURE_DIM]
    }

    pub fn label(&self, i: usize) -> Vec2 {
        Vec2::new(self.labels[2 * i], self.labels[2 * i + 1])
    }

    pub fn excluded(&self) -> usize {
        self.excluded_margin + self.excluded_cap
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.bytes(DATA_MAGIC);
        w.u32(DATA_FORMAT_VERSION);
        w.u32(FEATURE_DIM as u32);
        w.u32(LABEL_DIM as u32);
        w.u64(self.len() as u64);
        w.u64(self.excluded_margin as u64);
        w.u64(self.excluded_cap as u64);
        w.len_prefixed(serde_json::to_string(&self.spec).expect("spec serialises").as_bytes());
        for i in 0..self.len() {
            w.f64s(self.input(i));
            w.f64s(&self.labels[2 * i..2 * i + 2]);
        }
        w.into_inner()
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, NnError> {
        let mut r = ByteReader::new(buf);
        r.expect(DATA_MAGIC)?;
        let version = r.u32("version")?;
        if version != DATA_FORMAT_VERSION {
            return Err(NnError::UnsupportedVersion { found: version, expected: DATA_FORMAT_VERSION });
        }
        let at = r.offset();
        let (nf, nl) = (r.u32("feature count")? as usize, r.u32("label count")? as usize);
        if nf != FEATURE_DIM || nl != LABEL_DIM {
            return Err(NnError::Format {
                offset: at,
                message: format!("expected {FEATURE_DIM} features and {LABEL_DIM} labels"),
            });
        }
        let n = r.u64("sample count")? as usize;
        let excluded_margin = r.u64("margin exclusions")? as usize;
        let excluded_cap = r.u64("cap exclusions")? as usize;
        let at = r.offset();
        let spec: GridSpec = serde_json::from_slice(r.len_prefixed("grid spec")?)
            .map_err(|e| NnError::Format { offset: at, message: e.to_string() })?;
        let row = FEATURE_DIM + LABEL_DIM;
        let flat = r.f64s(n.checked_mul(row).ok_or_else(|| r.error("sample count overflow"))?, "samples")?;
        r.finish()?;
        let mut inputs = Vec::with_capacity(n * FEATURE_DIM);
        let mut labels = Vec::with_capacity(n * LABEL_DIM);
        for chunk in flat.chunks_exact(row) {
            inputs.extend_from_slice(&chunk[..FEATURE_DIM]);
            labels.extend_from_slice(&chunk[FEATURE_DIM..]);
        }
        Ok(Dataset { spec, inputs, labels, excluded_margin, excluded_cap })
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self, LoadError> {
        let buf = std::fs::read(path)?;
        Ok(Dataset::from_bytes(&buf)?)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Format(#[from] NnError),
}

enum Outcome {
    Sample([f64; FEATURE_DIM], Vec2),
    InsideMargin,
    AboveCap,
}

fn label_point(spec: &GridSpec, i: usize) -> Outcome {
    let coords = spec.coordinates(i);
    let (x_p, x_h, o, t) = GridSpec::configuration(&coords);
    let features = featurize(x_p, x_h, &o, t - o.timestamp);
    let tube = forward_reach_tube(&o, &spec.noise, spec.horizon, spec.footprint_radius)
        .expect("validated spec")
        .with_geometry(spec.geometry);
    let slice = tube.slice(t).expect("elapsed within horizon");
    match repulsive_gradient(x_p, &slice, spec.gains.k_r, spec.gains.delta) {
        Err(_) => Outcome::InsideMargin,
        Ok(g) if g.norm() > spec.label_cap => Outcome::AboveCap,
        Ok(g) => Outcome::Sample(features, g),
    }
}

/// One sample per grid point, in grid order, minus exclusions.
pub fn generate_training_data(spec: &GridSpec) -> Result<Dataset, NnError> {
    spec.validate()?;
    let n = spec.point_count();
    let chunks: Vec<_> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut inputs = Vec::new();
            let mut labels = Vec::new();
            let (mut margin, mut cap) = (0, 0);
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                match label_point(spec, i) {
                    Outcome::Sample(f, g) => {
                        inputs.extend_from_slice(&f);
                        labels.extend_from_slice(&[g.x, g.y]);
                    }
                    Outcome::InsideMargin => margin += 1,
                    Outcome::AboveCap => cap += 1,
                }
            }
            (inputs, labels, margin, cap)
        })
        .collect();
    let mut data = Dataset {
        spec: spec.clone(),
        inputs: Vec::new(),
        labels: Vec::new(),
        excluded_margin: 0,
        excluded_cap: 0,
    };
    for (inputs, labels, margin, cap) in chunks {
        data.inputs.extend(inputs);
        data.labels.extend(labels);
        data.excluded_margin += margin;
        data.excluded_cap += cap;
    }
    Ok(data)
}
