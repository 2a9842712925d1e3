//! Interval flowpipe: a step-by-step box enclosure of the obstacle's
//! reachable positions, in the style of general-purpose reachability tools.
//!
//! The state set is propagated with interval arithmetic in the obstacle's
//! nominal frame (`x` along the heading, `y` across it):
//!
//! ```text
//! x' = x + dt [v_lo, v_hi] [cos dh, 1]
//! y' = y + dt [v_lo, v_hi] [-sin dh, sin dh]
//! ```
//!
//! and each time segment is enclosed by the bounding box of its two end
//! boxes. Queries scan every segment in the window. It is an independent
//! route to the closed-form sector in the parent module and the reference
//! cost for a from-scratch reachability computation.

use crate::dynamics::{NoiseBounds, ObstacleState};
use crate::reachability::{ClosestPoint, ReachError};
use crate::Vec2;

#[derive(Debug, Clone, Copy, PartialEq)]
struct SegmentBox {
    t_end: f64,
    lo: Vec2,
    hi: Vec2,
}

impl SegmentBox {
    fn nearest(&self, p: Vec2) -> Vec2 {
        Vec2::new(p.x.clamp(self.lo.x, self.hi.x), p.y.clamp(self.lo.y, self.hi.y))
    }
}

#[derive(Debug, Clone)]
pub struct Flowpipe {
    origin: Vec2,
    heading: f64,
    t0: f64,
    horizon: f64,
    footprint_radius: f64,
    segments: Vec<SegmentBox>,
}

impl Flowpipe {
    pub fn compute(
        obs: &ObstacleState,
        bounds: &NoiseBounds,
        horizon: f64,
        footprint_radius: f64,
        step: f64,
    ) -> Result<Self, ReachError> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(ReachError::InvalidHorizon(horizon));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(ReachError::InvalidHorizon(step));
        }
        if bounds.heading_bound > std::f64::consts::FRAC_PI_2 {
            return Err(ReachError::HeadingTooWide(bounds.heading_bound));
        }
        let v_lo = (obs.speed - bounds.speed_bound).max(0.0);
        let v_hi = obs.speed + bounds.speed_bound;
        let (sin_h, cos_h) = bounds.heading_bound.sin_cos();

        let n = (horizon / step).ceil().max(1.0) as usize;
        let mut segments = Vec::with_capacity(n);
        let (mut lo, mut hi) = (Vec2::zeros(), Vec2::zeros());
        let mut t = 0.0;
        for k in 0..n {
            let t_next = if k + 1 == n { horizon } else { (k + 1) as f64 * step };
            let dt = t_next - t;
            let next_lo = Vec2::new(lo.x + dt * v_lo * cos_h, lo.y - dt * v_hi * sin_h);
            let next_hi = Vec2::new(hi.x + dt * v_hi, hi.y + dt * v_hi * sin_h);
            segments.push(SegmentBox {
                t_end: obs.timestamp + t_next,
                lo: Vec2::new(lo.x, next_lo.y),
                hi: Vec2::new(next_hi.x, next_hi.y),
            });
            lo = next_lo;
            hi = next_hi;
            t = t_next;
        }
        Ok(Flowpipe {
            origin: obs.position,
            heading: obs.heading,
            t0: obs.timestamp,
            horizon,
            footprint_radius: footprint_radius.max(0.0),
            segments,
        })
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.horizon
    }

    fn to_local(&self, p: Vec2) -> Vec2 {
        let (s, c) = self.heading.sin_cos();
        let d = p - self.origin;
        Vec2::new(c * d.x + s * d.y, -s * d.x + c * d.y)
    }

    fn to_world(&self, p: Vec2) -> Vec2 {
        let (s, c) = self.heading.sin_cos();
        self.origin + Vec2::new(c * p.x - s * p.y, s * p.x + c * p.y)
    }

    fn nearest_core(&self, t1: f64, local: Vec2) -> (Vec2, f64) {
        let mut best = (local, f64::INFINITY);
        for seg in self.segments.iter().filter(|s| s.t_end >= t1) {
            let p = seg.nearest(local);
            let d = (local - p).norm();
            if d < best.1 {
                best = (p, d);
                if d == 0.0 {
                    break;
                }
            }
        }
        best
    }

    /// Closest point of the dilated union of segments overlapping `[t1, t0 + T]`.
    pub fn closest_point(&self, t1: f64, query: Vec2) -> ClosestPoint {
        let local = self.to_local(query);
        let (p, d) = self.nearest_core(t1.min(self.t_end()), local);
        if d <= self.footprint_radius {
            return ClosestPoint { point: query, distance: 0.0 };
        }
        let point = self.to_world(p + (local - p) * (self.footprint_radius / d));
        ClosestPoint { point, distance: (query - point).norm() }
    }

    pub fn distance(&self, t1: f64, query: Vec2) -> f64 {
        self.closest_point(t1, query).distance
    }

    pub fn contains(&self, t1: f64, point: Vec2) -> bool {
        let scale = self.segments.last().map_or(1.0, |s| s.hi.x.abs().max(1.0));
        let (_, d) = self.nearest_core(t1.min(self.t_end()), self.to_local(point));
        d <= self.footprint_radius + 1e-9 * scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reachability::{forward_reach_tube, sample_reach, sample_reach_resampled};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_noise_reduces_to_swept_segment() {
        let o = ObstacleState::new(Vec2::zeros(), 0.0, 1.0, 0.0);
        let fp = Flowpipe::compute(&o, &NoiseBounds::zero(), 10.0, 0.0, 0.1).unwrap();
        assert_eq!(fp.segment_count(), 100);
        let cp = fp.closest_point(0.0, Vec2::new(5.0, 3.0));
        assert_relative_eq!(cp.distance, 3.0, epsilon = 1e-9);
        // The window start falls on a segment boundary; the segment ending
        // there is still included, so the enclosure is one step conservative.
        assert_relative_eq!(fp.distance(5.0, Vec2::new(0.0, 0.0)), 4.9, epsilon = 1e-9);
        assert_relative_eq!(fp.distance(5.05, Vec2::new(0.0, 0.0)), 5.0, epsilon = 1e-9);
    }

    #[test]
    fn partial_last_step() {
        let o = ObstacleState::new(Vec2::zeros(), 0.0, 2.0, 0.0);
        let fp = Flowpipe::compute(&o, &NoiseBounds::zero(), 1.05, 0.0, 0.1).unwrap();
        assert_eq!(fp.segment_count(), 11);
        assert_relative_eq!(fp.distance(0.0, Vec2::new(3.0, 0.0)), 3.0 - 2.1, epsilon = 1e-9);
    }

    #[test]
    fn encloses_both_noise_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let b = NoiseBounds::new(0.05, 0.01);
        let o = ObstacleState::new(Vec2::new(100.0, 50.0), 2.5, 5.0, 3.0);
        let fp = Flowpipe::compute(&o, &b, 120.0, 1.0, 0.1).unwrap();
        for _ in 0..300 {
            let t = rng.random_range(3.0..123.0);
            let t1 = rng.random_range(3.0..=t);
            for p in sample_reach(&o, &b, t, 4, &mut rng).unwrap() {
                assert!(fp.contains(t1, p));
            }
            for p in sample_reach_resampled(&o, &b, t, 0.1, 1, &mut rng).unwrap() {
                assert!(fp.contains(t1, p));
            }
        }
    }

    #[test]
    fn agrees_with_sector_up_to_enclosure_slack() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let b = NoiseBounds::new(0.05, 0.01);
        let o = ObstacleState::new(Vec2::zeros(), 0.0, 5.0, 0.0);
        let tube = forward_reach_tube(&o, &b, 600.0, 39.5).unwrap();
        let fp = Flowpipe::compute(&o, &b, 600.0, 39.5, 0.1).unwrap();
        for _ in 0..200 {
            let t1 = rng.random_range(0.0..600.0);
            let q = Vec2::new(rng.random_range(-300.0..3300.0), rng.random_range(-200.0..200.0));
            let exact = tube.slice(t1).unwrap().distance(q);
            let boxed = fp.distance(t1, q);
            // Boxes add at most the sector's sagitta plus one step of travel.
            assert!((exact - boxed).abs() < 3030.0 * (1.0 - 0.01f64.cos()) + 0.6 + 1e-6,
                "exact {exact} boxed {boxed}");
        }
    }
}
