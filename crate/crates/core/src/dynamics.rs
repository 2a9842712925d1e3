//! Robot and obstacle kinematics.
//!
//! The robot is a speed-saturated single integrator. Obstacles follow the
//! shared known policy (constant nominal speed and heading) perturbed by a
//! bounded speed/heading offset that the simulator resamples every step.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{wrap_angle, Vec2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid command: velocity ({0}, {1}) is not finite")]
    InvalidCommand(f64, f64),
    #[error("time step must be positive and finite, got {0}")]
    InvalidTimeStep(f64),
    #[error("non-finite obstacle input")]
    NonFinite,
}

/// Planar robot pose at a point in time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub position: Vec2,
    /// Radians in `(-pi, pi]`.
    pub heading: f64,
    pub time: f64,
}

impl RobotState {
    pub fn new(position: Vec2, heading: f64) -> Self {
        RobotState { position, heading: wrap_angle(heading), time: 0.0 }
    }
}

/// Commanded velocity. Always constructed through [`Command::saturated`]
/// when a speed limit applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Command {
    pub velocity: Vec2,
}

impl Command {
    pub fn zero() -> Self {
        Command { velocity: Vec2::zeros() }
    }

    /// Scales `velocity` down to `max_speed` if it is faster; direction is kept.
    pub fn saturated(velocity: Vec2, max_speed: f64) -> Self {
        let speed = velocity.norm();
        if speed > max_speed && speed > 0.0 {
            Command { velocity: velocity * (max_speed / speed) }
        } else {
            Command { velocity }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.velocity.x.is_finite() && self.velocity.y.is_finite()
    }
}

/// Obstacle report or true obstacle state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleState {
    pub position: Vec2,
    pub heading: f64,
    /// Nominal speed, never negative.
    pub speed: f64,
    pub timestamp: f64,
}

impl ObstacleState {
    pub fn new(position: Vec2, heading: f64, speed: f64, timestamp: f64) -> Self {
        ObstacleState { position, heading, speed: speed.max(0.0), timestamp }
    }

    pub fn direction(&self) -> Vec2 {
        Vec2::new(self.heading.cos(), self.heading.sin())
    }
}

/// A priori known disturbance box: `|speed offset| <= speed_bound`,
/// `|heading offset| <= heading_bound`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseBounds {
    pub speed_bound: f64,
    pub heading_bound: f64,
}

impl NoiseBounds {
    pub fn new(speed_bound: f64, heading_bound: f64) -> Self {
        NoiseBounds { speed_bound: speed_bound.abs(), heading_bound: heading_bound.abs() }
    }

    pub fn zero() -> Self {
        NoiseBounds::default()
    }

    pub fn contains(&self, sample: &NoiseSample) -> bool {
        sample.speed_offset.abs() <= self.speed_bound
            && sample.heading_offset.abs() <= self.heading_bound
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseSample {
    pub speed_offset: f64,
    pub heading_offset: f64,
}

/// Euler step of `x' = u` with `u` saturated to `max_speed`.
pub fn step_robot(
    state: &RobotState,
    cmd: &Command,
    dt: f64,
    max_speed: f64,
) -> Result<RobotState, DynamicsError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(DynamicsError::InvalidTimeStep(dt));
    }
    if !cmd.is_finite() {
        return Err(DynamicsError::InvalidCommand(cmd.velocity.x, cmd.velocity.y));
    }
    let velocity = Command::saturated(cmd.velocity, max_speed).velocity;
    let heading = if velocity.x != 0.0 || velocity.y != 0.0 {
        velocity.y.atan2(velocity.x)
    } else {
        state.heading
    };
    Ok(RobotState {
        position: state.position + velocity * dt,
        heading: wrap_angle(heading),
        time: state.time + dt,
    })
}

/// Advances an obstacle by `dt` under its nominal policy plus `noise`.
/// Nominal heading and speed are carried over unchanged.
pub fn step_obstacle(
    state: &ObstacleState,
    noise: &NoiseSample,
    dt: f64,
) -> Result<ObstacleState, DynamicsError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(DynamicsError::InvalidTimeStep(dt));
    }
    let finite = state.position.x.is_finite()
        && state.position.y.is_finite()
        && state.heading.is_finite()
        && state.speed.is_finite()
        && noise.speed_offset.is_finite()
        && noise.heading_offset.is_finite();
    if !finite {
        return Err(DynamicsError::NonFinite);
    }
    let speed = (state.speed + noise.speed_offset).max(0.0);
    let heading = state.heading + noise.heading_offset;
    let displacement = Vec2::new(heading.cos(), heading.sin()) * (speed * dt);
    Ok(ObstacleState {
        position: state.position + displacement,
        heading: state.heading,
        speed: state.speed,
        timestamp: state.timestamp + dt,
    })
}

/// Uniform draw from the noise box.
pub fn sample_noise<R: Rng + ?Sized>(bounds: &NoiseBounds, rng: &mut R) -> NoiseSample {
    NoiseSample {
        speed_offset: symmetric(bounds.speed_bound, rng),
        heading_offset: symmetric(bounds.heading_bound, rng),
    }
}

fn symmetric<R: Rng + ?Sized>(bound: f64, rng: &mut R) -> f64 {
    if bound > 0.0 {
        rng.random_range(-bound..=bound)
    } else {
        0.0
    }
}
