//! Planning among non-cooperative dynamic obstacles with intermittent
//! state information.
//!
//! The crate is organised around one pipeline:
//!
//! 1. [`dynamics`]: single-integrator robot and constant-velocity obstacles
//!    with bounded, per-step resampled disturbances.
//! 2. [`reachability`]: closed-form annular-sector reach tubes (plus an
//!    interval flowpipe used as an independent, expensive route) with
//!    closest-point and containment queries.
//! 3. [`potential`]: attractive/repulsive fields over tube slices and the
//!    gradient-descent control law.
//! 4. [`nn`]: grid-based training data, a small ReLU regressor trained to
//!    reproduce the per-obstacle repulsive gradient, and the compositional
//!    neural controller.
//! 5. [`sim`]: a deterministic fixed-step simulator with an intermittent
//!    information channel and a safety monitor, plus [`scenarios`] for the
//!    shipping-channel and ground-vehicle experiments.
//! 6. [`eval`] and [`cli`]: batch evaluation and the `reachpf` command line.
//!
//! Runnable walkthroughs of every stage live in `examples/`.

pub mod cli;
pub mod dynamics;
pub mod eval;
pub mod io;
pub mod nn;
pub mod potential;
pub mod reachability;
pub mod scenarios;
pub mod sim;

/// Planar vector in metres (positions) or metres/second (velocities).
pub type Vec2 = nalgebra::Vector2<f64>;

pub use dynamics::{Command, NoiseBounds, NoiseSample, ObstacleState, RobotState};
pub use potential::Gains;
pub use reachability::{ClosestPoint, ReachTube, SliceGeometry, TubeSlice};
pub use sim::{ControllerKind, Scenario, Status, Trace};

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(angle: f64) -> f64 {
    use std::f64::consts::PI;
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}
