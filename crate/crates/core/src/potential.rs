//! Reach-tube potential field and its gradient-descent control law.
//!
//! ```text
//! U(x) = 1/2 k_p |x - x_g|^2 + sum_i 1/2 k_r (1 / (d_i(x) - delta))^2
//! u    = -grad U
//! ```
//!
//! where `d_i` is the distance from `x` to obstacle `i`'s tube slice. The
//! repulsive gradient treats the closest point as fixed, which is the
//! exact gradient of the set distance wherever the projection is unique.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::Command;
use crate::reachability::{ClosestPoint, TubeSlice};
use crate::Vec2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("safety margin breached: distance {distance} <= delta {delta}")]
    MarginBreached { distance: f64, delta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    pub k_p: f64,
    pub k_r: f64,
    /// Safety threshold in metres.
    pub delta: f64,
}

impl Gains {
    pub fn new(k_p: f64, k_r: f64, delta: f64) -> Self {
        Gains { k_p, k_r, delta }
    }

    pub fn is_valid(&self) -> bool {
        self.k_p > 0.0 && self.k_r > 0.0 && self.delta > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub value: f64,
    pub gradient: Vec2,
}

/// `grad(1/2 k_p |x_p - x_g|^2)`. The control contribution is its negation.
pub fn attractive_gradient(x_p: Vec2, x_g: Vec2, k_p: f64) -> Vec2 {
    (x_p - x_g) * k_p
}

pub fn attractive_value(x_p: Vec2, x_g: Vec2, k_p: f64) -> f64 {
    0.5 * k_p * (x_p - x_g).norm_squared()
}

pub fn repulsive_value(cp: &ClosestPoint, k_r: f64, delta: f64) -> Result<f64, PotentialError> {
    let gap = check_margin(cp.distance, delta)?;
    Ok(0.5 * k_r / (gap * gap))
}

/// Repulsive gradient from a precomputed closest point.
pub fn repulsive_gradient_at(
    x_p: Vec2,
    cp: &ClosestPoint,
    k_r: f64,
    delta: f64,
) -> Result<Vec2, PotentialError> {
    let gap = check_margin(cp.distance, delta)?;
    let away = (x_p - cp.point) / cp.distance;
    Ok(away * (-k_r / (gap * gap * gap)))
}

pub fn repulsive_gradient(
    x_p: Vec2,
    slice: &TubeSlice,
    k_r: f64,
    delta: f64,
) -> Result<Vec2, PotentialError> {
    repulsive_gradient_at(x_p, &slice.closest_point(x_p), k_r, delta)
}

pub fn repulsive_sample(
    x_p: Vec2,
    slice: &TubeSlice,
    k_r: f64,
    delta: f64,
) -> Result<FieldSample, PotentialError> {
    let cp = slice.closest_point(x_p);
    Ok(FieldSample {
        value: repulsive_value(&cp, k_r, delta)?,
        gradient: repulsive_gradient_at(x_p, &cp, k_r, delta)?,
    })
}

fn check_margin(distance: f64, delta: f64) -> Result<f64, PotentialError> {
    // written so that NaN distances fail the check
    if distance > delta {
        Ok(distance - delta)
    } else {
        Err(PotentialError::MarginBreached { distance, delta })
    }
}

/// Unsaturated descent direction `-grad U`. Obstacles are summed in slice
/// order.
pub fn composed_descent(
    x_p: Vec2,
    x_g: Vec2,
    slices: &[TubeSlice],
    gains: &Gains,
) -> Result<Vec2, PotentialError> {
    let mut u = -attractive_gradient(x_p, x_g, gains.k_p);
    for slice in slices {
        u -= repulsive_gradient(x_p, slice, gains.k_r, gains.delta)?;
    }
    Ok(u)
}

pub fn composed_control(
    x_p: Vec2,
    x_g: Vec2,
    slices: &[TubeSlice],
    gains: &Gains,
    max_speed: f64,
) -> Result<Command, PotentialError> {
    Ok(Command::saturated(composed_descent(x_p, x_g, slices, gains)?, max_speed))
}

pub fn composed_value(
    x_p: Vec2,
    x_g: Vec2,
    slices: &[TubeSlice],
    gains: &Gains,
) -> Result<f64, PotentialError> {
    let mut value = attractive_value(x_p, x_g, gains.k_p);
    for slice in slices {
        value += repulsive_value(&slice.closest_point(x_p), gains.k_r, gains.delta)?;
    }
    Ok(value)
}

pub fn composed_sample(
    x_p: Vec2,
    x_g: Vec2,
    slices: &[TubeSlice],
    gains: &Gains,
) -> Result<FieldSample, PotentialError> {
    Ok(FieldSample {
        value: composed_value(x_p, x_g, slices, gains)?,
        gradient: -composed_descent(x_p, x_g, slices, gains)?,
    })
}
