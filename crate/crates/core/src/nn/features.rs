//! One featurisation shared by data generation and inference.
//!
//! Features are expressed relative to the obstacle report: the robot's
//! offset from the reported position rotated into the obstacle's heading
//! frame, the robot heading in that frame, the nominal speed and the
//! report age. The repulsive gradient is equivariant under translation and
//! rotation of the whole configuration, so this frame loses nothing.

use crate::dynamics::ObstacleState;
use crate::{wrap_angle, Vec2};

pub const FEATURE_DIM: usize = 5;

pub const FEATURE_NAMES: [&str; FEATURE_DIM] =
    ["along", "cross", "rel_heading", "speed", "elapsed"];

pub fn to_obstacle_frame(v: Vec2, heading: f64) -> Vec2 {
    let (s, c) = heading.sin_cos();
    Vec2::new(c * v.x + s * v.y, -s * v.x + c * v.y)
}

pub fn from_obstacle_frame(v: Vec2, heading: f64) -> Vec2 {
    let (s, c) = heading.sin_cos();
    Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

pub fn featurize(x_p: Vec2, x_h: f64, o: &ObstacleState, elapsed: f64) -> [f64; FEATURE_DIM] {
    let rel = to_obstacle_frame(x_p - o.position, o.heading);
    [rel.x, rel.y, wrap_angle(x_h - o.heading), o.speed, elapsed]
}
