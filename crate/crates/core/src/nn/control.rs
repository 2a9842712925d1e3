//! Runtime use of a trained [`GradientNet`]: per-obstacle inference and
//! the compositional controller that sums one inference per report.

use super::features::{featurize, from_obstacle_frame, FEATURE_DIM};
use super::{GradientNet, NnError};
use crate::dynamics::{Command, ObstacleState};
use crate::potential::{attractive_gradient, Gains};
use crate::Vec2;

const ALONG: usize = 0;
const CROSS: usize = 1;

fn tolerance(scale: f64) -> f64 {
    1e-9 * scale.abs().max(1.0)
}

/// Approximate repulsive gradient of report `o`, `t` seconds after it was
/// received, at robot position `x_p` with heading `x_h`. World frame.
///
/// Elapsed time outside `[0, T]` and obstacle speed or relative heading
/// outside a trained range are out-of-domain errors. A robot position
/// beyond the trained spatial box contributes zero: the box is chosen to
/// cover every position where the exact gradient is not negligible.
pub fn infer(
    net: &GradientNet,
    x_p: Vec2,
    x_h: f64,
    o: &ObstacleState,
    t: f64,
) -> Result<Vec2, NnError> {
    let s = &net.scaling;
    let (t_min, t_max) = (s.min[FEATURE_DIM - 1], s.max[FEATURE_DIM - 1].min(net.horizon));
    if !(t >= t_min - tolerance(t_min) && t <= t_max + tolerance(t_max)) {
        return Err(NnError::OutOfDomain(format!(
            "elapsed time {t} s outside trained range [{t_min}, {t_max}]"
        )));
    }
    let mut f = featurize(x_p, x_h, o, t.clamp(t_min, t_max));
    for (d, name) in [(2, "relative heading"), (3, "obstacle speed")] {
        let inside = if s.is_degenerate(d) {
            d == 2 || (f[d] - s.min[d]).abs() <= tolerance(s.min[d])
        } else {
            f[d] >= s.min[d] - tolerance(s.min[d]) && f[d] <= s.max[d] + tolerance(s.max[d])
        };
        if !inside {
            return Err(NnError::OutOfDomain(format!(
                "{name} {} outside trained range [{}, {}]",
                f[d], s.min[d], s.max[d]
            )));
        }
        f[d] = f[d].clamp(s.min[d], s.max[d]);
    }
    for d in [ALONG, CROSS] {
        if !(f[d] >= s.min[d] && f[d] <= s.max[d]) {
            return Ok(Vec2::zeros());
        }
    }
    Ok(from_obstacle_frame(net.predict_features(&f), o.heading))
}

/// Unsaturated `-k_p (x_p - x_g) - sum_i NN(x_p, x_h, o_i, now - r_i)`,
/// summed in report order. Each report is `(state, receipt time)`.
pub fn nn_descent(
    net: &GradientNet,
    x_p: Vec2,
    x_h: f64,
    x_g: Vec2,
    reports: &[(ObstacleState, f64)],
    now: f64,
    gains: &Gains,
) -> Result<Vec2, NnError> {
    let mut u = -attractive_gradient(x_p, x_g, gains.k_p);
    for (o, receipt) in reports {
        u -= infer(net, x_p, x_h, o, now - receipt)?;
    }
    Ok(u)
}

pub fn nn_control(
    net: &GradientNet,
    x_p: Vec2,
    x_h: f64,
    x_g: Vec2,
    reports: &[(ObstacleState, f64)],
    now: f64,
    gains: &Gains,
    max_speed: f64,
) -> Result<Command, NnError> {
    Ok(Command::saturated(nn_descent(net, x_p, x_h, x_g, reports, now, gains)?, max_speed))
}
