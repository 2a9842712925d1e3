//! Forward reachable sets of constant-velocity obstacles with bounded
//! speed/heading disturbance.
//!
//! Starting from a report `o` at time `t0`, every admissible trajectory at
//! elapsed time `tau` lies in the annular sector
//!
//! ```text
//! { o + r (cos a, sin a) : a in [h - dh, h + dh], r in [v_lo tau cos dh, v_hi tau] }
//! ```
//!
//! with `v_lo = max(v - dw, 0)` and `v_hi = v + dw`. The `cos dh` factor on
//! the inner radius makes the sector contain trajectories whose offsets are
//! resampled every step, not just constant ones: each step displaces the
//! obstacle by at least `v_lo dt cos dh` along the nominal heading.
//!
//! The union over a window `[t1, t0 + T]` is again one annular sector (radii
//! `[r_in(t1), r_out(t0 + T)]`) dilated by the footprint radius, so
//! closest-point and containment queries are closed form.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{sample_noise, step_obstacle, NoiseBounds, NoiseSample, ObstacleState};
use crate::Vec2;

pub mod flowpipe;

pub use flowpipe::Flowpipe;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReachError {
    #[error("tube horizon must be positive, got {0}")]
    InvalidHorizon(f64),
    #[error("heading bound {0} rad exceeds pi/2 (sector wider than pi)")]
    HeadingTooWide(f64),
    #[error("window start {t1} outside tube window [{t0}, {t2}]")]
    InvalidWindow { t0: f64, t1: f64, t2: f64 },
    #[error("query time {t} precedes the report time {t0}")]
    BeforeReport { t: f64, t0: f64 },
    #[error("non-finite tube input")]
    NonFinite,
}

/// How a tube slice is represented for queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SliceGeometry {
    /// The annular sector itself.
    #[default]
    Sector,
    /// Convex hull of the sector (inner arc replaced by its chord).
    ConvexHull,
}

/// Reachable set of one obstacle from a report at `t0` up to `t0 + horizon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReachTube {
    pub origin: Vec2,
    pub t0: f64,
    /// Nominal heading; the heading interval is `heading +- heading_halfwidth`.
    pub heading: f64,
    pub heading_halfwidth: f64,
    pub speed_lo: f64,
    pub speed_hi: f64,
    pub horizon: f64,
    pub footprint_radius: f64,
    pub geometry: SliceGeometry,
}

impl ReachTube {
    pub fn heading_interval(&self) -> (f64, f64) {
        (self.heading - self.heading_halfwidth, self.heading + self.heading_halfwidth)
    }

    pub fn speed_interval(&self) -> (f64, f64) {
        (self.speed_lo, self.speed_hi)
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.horizon
    }

    pub fn inner_radius(&self, elapsed: f64) -> f64 {
        self.speed_lo * elapsed * self.heading_halfwidth.cos()
    }

    pub fn outer_radius(&self, elapsed: f64) -> f64 {
        self.speed_hi * elapsed
    }

    /// Largest distance from the origin reached by the dilated tube.
    pub fn max_extent(&self) -> f64 {
        self.outer_radius(self.horizon) + self.footprint_radius
    }

    pub fn with_geometry(mut self, geometry: SliceGeometry) -> Self {
        self.geometry = geometry;
        self
    }

    /// Slice over `[t1, t0 + T]`.
    pub fn slice(&self, t1: f64) -> Result<TubeSlice, ReachError> {
        let t2 = self.t_end();
        if !(t1 >= self.t0 && t1 <= t2) {
            return Err(ReachError::InvalidWindow { t0: self.t0, t1, t2 });
        }
        Ok(TubeSlice { tube: *self, t1, t2 })
    }

    /// Slice over `[min(t1, t0 + T), t0 + T]`; the flag is true when the
    /// horizon has expired and the slice is frozen at its final extent.
    pub fn slice_clamped(&self, t1: f64) -> Result<(TubeSlice, bool), ReachError> {
        if t1 < self.t0 {
            return Err(ReachError::BeforeReport { t: t1, t0: self.t0 });
        }
        let expired = t1 > self.t_end();
        let t1 = t1.min(self.t_end());
        Ok((TubeSlice { tube: *self, t1, t2: self.t_end() }, expired))
    }
}

/// Builds the reach tube of `obs` over `[obs.timestamp, obs.timestamp + horizon]`.
pub fn forward_reach_tube(
    obs: &ObstacleState,
    bounds: &NoiseBounds,
    horizon: f64,
    footprint_radius: f64,
) -> Result<ReachTube, ReachError> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(ReachError::InvalidHorizon(horizon));
    }
    if bounds.heading_bound > std::f64::consts::FRAC_PI_2 {
        return Err(ReachError::HeadingTooWide(bounds.heading_bound));
    }
    let finite = obs.position.iter().all(|c| c.is_finite())
        && obs.heading.is_finite()
        && obs.speed.is_finite()
        && obs.timestamp.is_finite()
        && footprint_radius.is_finite();
    if !finite {
        return Err(ReachError::NonFinite);
    }
    Ok(ReachTube {
        origin: obs.position,
        t0: obs.timestamp,
        heading: obs.heading,
        heading_halfwidth: bounds.heading_bound,
        speed_lo: (obs.speed - bounds.speed_bound).max(0.0),
        speed_hi: obs.speed + bounds.speed_bound,
        horizon,
        footprint_radius: footprint_radius.max(0.0),
        geometry: SliceGeometry::Sector,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestPoint {
    pub point: Vec2,
    pub distance: f64,
}

/// The tube restricted to the window `[t1, t2]`, `t2 = t0 + T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubeSlice {
    pub tube: ReachTube,
    pub t1: f64,
    pub t2: f64,
}

impl TubeSlice {
    pub fn radii(&self) -> (f64, f64) {
        let t = &self.tube;
        (t.inner_radius(self.t1 - t.t0), t.outer_radius(self.t2 - t.t0))
    }

    fn to_local(&self, p: Vec2) -> Vec2 {
        let (s, c) = self.tube.heading.sin_cos();
        let d = p - self.tube.origin;
        Vec2::new(c * d.x + s * d.y, -s * d.x + c * d.y)
    }

    fn to_world(&self, p: Vec2) -> Vec2 {
        let (s, c) = self.tube.heading.sin_cos();
        self.tube.origin + Vec2::new(c * p.x - s * p.y, s * p.x + c * p.y)
    }

    /// Nearest point of the undilated set in the tube frame, or `None` if
    /// `local` lies inside it.
    fn nearest_undilated(&self, local: Vec2) -> Option<(Vec2, f64)> {
        let (r_in, r_out) = self.radii();
        let hw = self.tube.heading_halfwidth;
        let r = local.norm();
        let phi = if r > 0.0 { local.y.atan2(local.x) } else { 0.0 };
        let in_wedge = phi.abs() <= hw;
        let inside = match self.tube.geometry {
            SliceGeometry::Sector => in_wedge && r >= r_in && r <= r_out,
            SliceGeometry::ConvexHull => {
                in_wedge && r <= r_out && local.x >= r_in * hw.cos()
            }
        };
        if inside {
            return None;
        }

        let clamped = phi.clamp(-hw, hw);
        let dir = Vec2::new(clamped.cos(), clamped.sin());
        let lo_edge = Vec2::new(hw.cos(), -hw.sin());
        let hi_edge = Vec2::new(hw.cos(), hw.sin());

        let mut best = (dir * r_out, (local - dir * r_out).norm());
        let mut consider = |p: Vec2| {
            let d = (local - p).norm();
            if d < best.1 {
                best = (p, d);
            }
        };
        consider(closest_on_segment(local, lo_edge * r_in, lo_edge * r_out));
        consider(closest_on_segment(local, hi_edge * r_in, hi_edge * r_out));
        match self.tube.geometry {
            SliceGeometry::Sector => consider(dir * r_in),
            SliceGeometry::ConvexHull => {
                consider(closest_on_segment(local, lo_edge * r_in, hi_edge * r_in))
            }
        }
        Some(best)
    }

    /// Distance from `query` to the undilated set (0 inside).
    pub fn core_distance(&self, query: Vec2) -> f64 {
        self.nearest_undilated(self.to_local(query)).map_or(0.0, |(_, d)| d)
    }

    pub fn closest_point(&self, query: Vec2) -> ClosestPoint {
        let local = self.to_local(query);
        let rho = self.tube.footprint_radius;
        match self.nearest_undilated(local) {
            Some((p, d)) if d > rho => {
                let on_boundary = p + (local - p) * (rho / d);
                let point = self.to_world(on_boundary);
                ClosestPoint { point, distance: (query - point).norm() }
            }
            _ => ClosestPoint { point: query, distance: 0.0 },
        }
    }

    pub fn distance(&self, query: Vec2) -> f64 {
        self.closest_point(query).distance
    }

    /// True iff `point` lies within the footprint radius of the undilated
    /// set, up to a relative tolerance of 1e-9 of the slice size.
    pub fn contains(&self, point: Vec2) -> bool {
        let (_, r_out) = self.radii();
        let eps = 1e-9 * r_out.max(1.0);
        self.core_distance(point) <= self.tube.footprint_radius + eps
    }
}

fn closest_on_segment(p: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return a;
    }
    let s = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    a + ab * s
}

pub fn closest_point(slice: &TubeSlice, query: Vec2) -> ClosestPoint {
    slice.closest_point(query)
}

pub fn contains(slice: &TubeSlice, point: Vec2) -> bool {
    slice.contains(point)
}

/// Substeps used when integrating constant-offset trajectories; exact for
/// constant velocity, kept above one so the path goes through `step_obstacle`
/// the same way the simulator does.
const SAMPLE_SUBSTEPS: usize = 8;

/// Endpoints at `t_query` of `n` trajectories with constant, uniformly drawn
/// in-bound offsets.
pub fn sample_reach<R: Rng + ?Sized>(
    obs: &ObstacleState,
    bounds: &NoiseBounds,
    t_query: f64,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Vec2>, ReachError> {
    if t_query < obs.timestamp {
        return Err(ReachError::BeforeReport { t: t_query, t0: obs.timestamp });
    }
    let elapsed = t_query - obs.timestamp;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let noise = sample_noise(bounds, rng);
        out.push(integrate(obs, &noise, elapsed, SAMPLE_SUBSTEPS));
    }
    Ok(out)
}

/// Like [`sample_reach`] but redraws the offsets every `dt`, as the
/// simulator does.
pub fn sample_reach_resampled<R: Rng + ?Sized>(
    obs: &ObstacleState,
    bounds: &NoiseBounds,
    t_query: f64,
    dt: f64,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Vec2>, ReachError> {
    if t_query < obs.timestamp {
        return Err(ReachError::BeforeReport { t: t_query, t0: obs.timestamp });
    }
    let elapsed = t_query - obs.timestamp;
    let full = (elapsed / dt).floor() as usize;
    let rest = elapsed - full as f64 * dt;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut s = *obs;
        for _ in 0..full {
            s = step_obstacle(&s, &sample_noise(bounds, rng), dt).expect("finite inputs");
        }
        if rest > 0.0 {
            s = step_obstacle(&s, &sample_noise(bounds, rng), rest).expect("finite inputs");
        }
        out.push(s.position);
    }
    Ok(out)
}

fn integrate(obs: &ObstacleState, noise: &NoiseSample, elapsed: f64, substeps: usize) -> Vec2 {
    if elapsed <= 0.0 {
        return obs.position;
    }
    let dt = elapsed / substeps as f64;
    let mut s = *obs;
    for _ in 0..substeps {
        s = step_obstacle(&s, noise, dt).expect("finite inputs");
    }
    s.position
}
