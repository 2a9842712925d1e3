//! Scenario builders for the shipping-channel crossing, the two
//! ground-vehicle cases and the head-on dynamic-minima example.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{NoiseBounds, ObstacleState};
use crate::nn::{AxisSpec, GridSpec, GRID_SPEC_VERSION};
use crate::potential::Gains;
use crate::reachability::SliceGeometry;
use crate::sim::{default_time_budget, Footprint, InfoSchedule, ObstacleSpec, Scenario, SCENARIO_VERSION};
use crate::Vec2;

/// Shipping-channel constants.
pub mod uuv {
    pub const SHIP_SPEED: f64 = 5.0;
    pub const SPEED_NOISE: f64 = 0.05;
    pub const HEADING_NOISE: f64 = 0.01;
    pub const SHIP_LENGTH: f64 = 75.0;
    pub const SHIP_WIDTH: f64 = 25.0;
    pub const SHIP_GAP: f64 = 375.0;
    /// Bow-to-bow spacing of successive ships in a lane.
    pub const SHIP_SPACING: f64 = SHIP_LENGTH + SHIP_GAP;
    pub const SHIPS_PER_LANE: usize = 4;
    pub const CHANNEL_WIDTH: f64 = 230.0;
    /// Lane centre lines, a quarter and three quarters across.
    pub const EAST_LANE_Y: f64 = CHANNEL_WIDTH / 4.0;
    pub const WEST_LANE_Y: f64 = 3.0 * CHANNEL_WIDTH / 4.0;
    /// The robot surfaces for the broadcast this far before the channel.
    pub const SURFACING_DISTANCE: f64 = 500.0;
    /// Goal distance beyond the far edge of the channel.
    pub const GOAL_BEYOND: f64 = 50.0;
    pub const GOAL_TOLERANCE: f64 = 1.0;
    pub const MAX_SPEED: f64 = 2.5;
    pub const DELTA: f64 = 5.0;
    pub const HORIZON: f64 = 600.0;
    pub const K_P: f64 = 5.0;
    pub const K_R: f64 = 15000.0;
    pub const DT: f64 = 0.1;
}

/// Ground-vehicle constants.
pub mod ugv {
    pub const GOAL_X: f64 = 2.5;
    pub const GOAL_TOLERANCE: f64 = 0.1;
    pub const MAX_SPEED: f64 = 0.5;
    pub const DELTA: f64 = 0.51;
    pub const HORIZON: f64 = 8.0;
    pub const K_P: f64 = 5.0;
    pub const K_R: f64 = 10.0;
    pub const OBSTACLE_SPEED: f64 = 0.5;
    pub const SPEED_NOISE: f64 = 0.02;
    pub const HEADING_NOISE: f64 = 0.05;
    pub const DT: f64 = 0.1;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UgvCase {
    /// Two obstacles moving in opposite directions.
    Crossing,
    /// Two obstacles moving in the same direction.
    Parallel,
}

/// Channel crossing with ship phases drawn from `variation_seed`, which
/// also seeds the simulation noise.
pub fn build_uuv_scenario(variation_seed: u64) -> Scenario {
    use uuv::*;
    let mut rng = ChaCha8Rng::seed_from_u64(variation_seed);
    let phase_east: f64 = rng.random_range(-SHIP_SPACING..0.0);
    let phase_west: f64 = rng.random_range(-SHIP_SPACING..0.0);
    let noise = NoiseBounds::new(SPEED_NOISE, HEADING_NOISE);
    let footprint = Footprint::new(SHIP_LENGTH, SHIP_WIDTH);
    let mut obstacles = Vec::with_capacity(2 * SHIPS_PER_LANE);
    for k in 0..SHIPS_PER_LANE {
        let x = phase_east + SHIP_SPACING * (1.0 - k as f64);
        let initial = ObstacleState::new(Vec2::new(x, EAST_LANE_Y), 0.0, SHIP_SPEED, 0.0);
        obstacles.push(ObstacleSpec { initial, noise, footprint });
    }
    for k in 0..SHIPS_PER_LANE {
        let x = -(phase_west + SHIP_SPACING * (1.0 - k as f64));
        let initial = ObstacleState::new(Vec2::new(x, WEST_LANE_Y), PI, SHIP_SPEED, 0.0);
        obstacles.push(ObstacleSpec { initial, noise, footprint });
    }
    let start = Vec2::new(0.0, -SURFACING_DISTANCE);
    let goal = Vec2::new(0.0, CHANNEL_WIDTH + GOAL_BEYOND);
    Scenario {
        version: SCENARIO_VERSION,
        name: format!("uuv-{variation_seed}"),
        start,
        start_heading: PI / 2.0,
        goal,
        goal_tolerance: GOAL_TOLERANCE,
        max_speed: MAX_SPEED,
        obstacles,
        info: InfoSchedule::Times(vec![0.0]),
        dt: DT,
        gains: Gains::new(K_P, K_R, DELTA),
        horizon: HORIZON,
        time_budget: default_time_budget(start, goal, MAX_SPEED),
        seed: variation_seed,
        geometry: SliceGeometry::Sector,
    }
}

/// Training grid matching [`build_uuv_scenario`]: every ship shares the
/// same speed and noise, so only the relative position and the report age
/// vary.
pub fn uuv_grid_spec() -> GridSpec {
    use uuv::*;
    GridSpec {
        version: GRID_SPEC_VERSION,
        along: AxisSpec::new(-200.0, 1600.0, 91),
        cross: AxisSpec::new(-150.0, 150.0, 151),
        rel_heading: AxisSpec::fixed(0.0),
        speed: AxisSpec::fixed(SHIP_SPEED),
        elapsed: AxisSpec::new(0.0, HORIZON, 31),
        gains: Gains::new(K_P, K_R, DELTA),
        horizon: HORIZON,
        footprint_radius: Footprint::new(SHIP_LENGTH, SHIP_WIDTH).radius(),
        noise: NoiseBounds::new(SPEED_NOISE, HEADING_NOISE),
        geometry: SliceGeometry::Sector,
        label_cap: 1e5,
    }
}

pub fn build_ugv_scenario(case: UgvCase) -> Scenario {
    use ugv::*;
    let noise = NoiseBounds::new(SPEED_NOISE, HEADING_NOISE);
    let (a, b) = match case {
        UgvCase::Crossing => (
            ObstacleState::new(Vec2::new(0.9, -0.3), PI / 2.0, OBSTACLE_SPEED, 0.0),
            ObstacleState::new(Vec2::new(1.8, 0.3), -PI / 2.0, OBSTACLE_SPEED, 0.0),
        ),
        UgvCase::Parallel => (
            ObstacleState::new(Vec2::new(0.8, -0.1), PI / 2.0, OBSTACLE_SPEED, 0.0),
            ObstacleState::new(Vec2::new(2.1, 0.5), PI / 2.0, OBSTACLE_SPEED, 0.0),
        ),
    };
    let start = Vec2::zeros();
    let goal = Vec2::new(GOAL_X, 0.0);
    let name = match case {
        UgvCase::Crossing => "ugv-cross",
        UgvCase::Parallel => "ugv-parallel",
    };
    Scenario {
        version: SCENARIO_VERSION,
        name: name.into(),
        start,
        start_heading: 0.0,
        goal,
        goal_tolerance: GOAL_TOLERANCE,
        max_speed: MAX_SPEED,
        obstacles: [a, b]
            .into_iter()
            .map(|initial| ObstacleSpec { initial, noise, footprint: Footprint::default() })
            .collect(),
        info: InfoSchedule::Times(vec![0.0]),
        dt: DT,
        gains: Gains::new(K_P, K_R, DELTA),
        horizon: HORIZON,
        time_budget: default_time_budget(start, goal, MAX_SPEED),
        seed: 0,
        geometry: SliceGeometry::Sector,
    }
}

/// Training grid for the ground-vehicle cases.
pub fn ugv_grid_spec() -> GridSpec {
    use ugv::*;
    GridSpec {
        version: GRID_SPEC_VERSION,
        along: AxisSpec::new(-4.0, 6.0, 101),
        cross: AxisSpec::new(-4.0, 4.0, 81),
        rel_heading: AxisSpec::fixed(0.0),
        speed: AxisSpec::fixed(OBSTACLE_SPEED),
        elapsed: AxisSpec::new(0.0, HORIZON, 17),
        gains: Gains::new(K_P, K_R, DELTA),
        horizon: HORIZON,
        footprint_radius: 0.0,
        noise: NoiseBounds::new(SPEED_NOISE, HEADING_NOISE),
        geometry: SliceGeometry::Sector,
        label_cap: 1e3,
    }
}

/// One obstacle on a collision course with the robot, approaching 30
/// degrees off head-on and crossing the straight line to the goal 6 m out.
pub fn build_head_on_scenario() -> Scenario {
    let start = Vec2::zeros();
    let goal = Vec2::new(20.0, 0.0);
    let max_speed = 1.0;
    Scenario {
        version: SCENARIO_VERSION,
        name: "head-on".into(),
        start,
        start_heading: 0.0,
        goal,
        goal_tolerance: 0.1,
        max_speed,
        obstacles: vec![ObstacleSpec {
            initial: ObstacleState::new(Vec2::new(6.0 + 4.8 * (PI / 6.0).cos(), -2.4), 5.0 * PI / 6.0, 0.8, 0.0),
            noise: NoiseBounds::new(0.02, 0.02),
            footprint: Footprint::new(0.5, 0.5),
        }],
        info: InfoSchedule::Times(vec![0.0]),
        dt: 0.1,
        gains: Gains::new(5.0, 10.0, 0.5),
        horizon: 10.0,
        time_budget: default_time_budget(start, goal, max_speed),
        seed: 0,
        geometry: SliceGeometry::Sector,
    }
}
