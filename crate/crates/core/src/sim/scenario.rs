use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::dynamics::{NoiseBounds, ObstacleState, RobotState};
use crate::potential::Gains;
use crate::reachability::SliceGeometry;
use crate::Vec2;

pub const SCENARIO_VERSION: u32 = 1;

/// Rectangular obstacle footprint, enclosed by its circumscribed circle.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Footprint {
    pub length: f64,
    pub width: f64,
}

impl Footprint {
    pub fn new(length: f64, width: f64) -> Self {
        Footprint { length, width }
    }

    /// Half diagonal.
    pub fn radius(&self) -> f64 {
        0.5 * self.length.hypot(self.width)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleSpec {
    pub initial: ObstacleState,
    pub noise: NoiseBounds,
    #[serde(default)]
    pub footprint: Footprint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InfoSchedule {
    /// Explicit sorted broadcast times, seconds.
    Times(Vec<f64>),
    /// Broadcasts from `first` on, separated by gaps drawn uniformly from
    /// `[min_gap, max_gap]` using a stream derived from the scenario seed.
    Random { first: f64, min_gap: f64, max_gap: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    pub name: String,
    pub start: Vec2,
    #[serde(default)]
    pub start_heading: f64,
    pub goal: Vec2,
    pub goal_tolerance: f64,
    pub max_speed: f64,
    pub obstacles: Vec<ObstacleSpec>,
    pub info: InfoSchedule,
    pub dt: f64,
    pub gains: Gains,
    /// Tube horizon T, seconds.
    pub horizon: f64,
    pub time_budget: f64,
    pub seed: u64,
    #[serde(default)]
    pub geometry: SliceGeometry,
}

/// Three times the straight-line travel time at full speed.
pub fn default_time_budget(start: Vec2, goal: Vec2, max_speed: f64) -> f64 {
    3.0 * (goal - start).norm() / max_speed
}

fn finite2(v: Vec2) -> bool {
    v.x.is_finite() && v.y.is_finite()
}

impl Scenario {
    pub fn start_state(&self) -> RobotState {
        RobotState::new(self.start, self.start_heading)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |field: &'static str, reason: &str| {
            Err(SimError::InvalidScenario { field, reason: reason.into() })
        };
        if self.version != SCENARIO_VERSION {
            return bad("version", &format!("expected {SCENARIO_VERSION}, got {}", self.version));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt", "must be positive");
        }
        if !(self.time_budget > 0.0 && self.time_budget.is_finite()) {
            return bad("time_budget", "must be positive");
        }
        if !(self.max_speed > 0.0 && self.max_speed.is_finite()) {
            return bad("max_speed", "must be positive");
        }
        if !(self.goal_tolerance >= 0.0) {
            return bad("goal_tolerance", "must be non-negative");
        }
        if !(finite2(self.start) && finite2(self.goal) && self.start_heading.is_finite()) {
            return bad("start", "start, heading and goal must be finite");
        }
        if !self.gains.is_valid() {
            return bad("gains", "k_p, k_r and delta must be positive");
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad("horizon", "must be positive");
        }
        match &self.info {
            InfoSchedule::Times(ts) => {
                if ts.iter().any(|t| !t.is_finite()) {
                    return bad("info", "broadcast times must be finite");
                }
                if ts.windows(2).any(|w| w[1] < w[0]) {
                    return bad("info", "broadcast times must be sorted");
                }
            }
            InfoSchedule::Random { first, min_gap, max_gap } => {
                if !(first.is_finite() && *min_gap > 0.0 && max_gap >= min_gap && max_gap.is_finite()) {
                    return bad("info", "need finite first time and 0 < min_gap <= max_gap");
                }
            }
        }
        for o in &self.obstacles {
            let s = &o.initial;
            if !(finite2(s.position) && s.heading.is_finite() && s.speed.is_finite() && s.speed >= 0.0) {
                return bad("obstacles", "initial state must be finite with non-negative speed");
            }
            if !(o.noise.speed_bound.is_finite() && o.noise.heading_bound <= std::f64::consts::FRAC_PI_2) {
                return bad("obstacles", "heading bound must not exceed pi/2");
            }
            if !(o.footprint.length >= 0.0 && o.footprint.width >= 0.0 && o.footprint.radius().is_finite()) {
                return bad("obstacles", "footprint dimensions must be non-negative");
            }
        }
        Ok(())
    }

    /// Broadcast times up to the time budget.
    pub fn broadcast_times(&self) -> Vec<f64> {
        match &self.info {
            InfoSchedule::Times(ts) => ts.clone(),
            InfoSchedule::Random { first, min_gap, max_gap } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x1f0c_4a77_e1d5_0001);
                let mut out = Vec::new();
                let mut t = *first;
                while t <= self.time_budget {
                    out.push(t);
                    t += if max_gap > min_gap { rng.random_range(*min_gap..=*max_gap) } else { *min_gap };
                }
                out
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serialises")
    }

    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let s: Scenario = toml::from_str(text)
            .map_err(|e| SimError::InvalidScenario { field: "file", reason: e.to_string() })?;
        s.validate()?;
        Ok(s)
    }
}
