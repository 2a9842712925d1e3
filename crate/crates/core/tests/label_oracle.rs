//! Training labels against an independently written evaluator of the
//! repulsive gradient over a dilated annular sector.

use reachpf::nn::{generate_training_data, AxisSpec, GridSpec, GRID_SPEC_VERSION};
use reachpf::potential::Gains;
use reachpf::reachability::SliceGeometry;
use reachpf::{NoiseBounds, Vec2};

/// Repulsive gradient at relative position `q` (robot minus report
/// position, report heading along +x). `None` inside the margin.
fn oracle(q: Vec2, speed: f64, elapsed: f64, spec: &GridSpec) -> Option<Vec2> {
    let h = spec.noise.heading_bound;
    let v_lo = (speed - spec.noise.speed_bound).max(0.0);
    let v_hi = speed + spec.noise.speed_bound;
    let a = v_lo * elapsed * h.cos();
    let b = v_hi * spec.horizon;

    let r = q.norm();
    let phi = q.y.atan2(q.x);
    let gap = (phi.abs() - h).max(0.0);
    let r_star = (r * gap.cos()).clamp(a, b);
    let core = (r * r + r_star * r_star - 2.0 * r_star * r * gap.cos()).max(0.0).sqrt();
    let theta = phi.clamp(-h, h);
    let nearest = Vec2::new(theta.cos(), theta.sin()) * r_star;

    let d = (core - spec.footprint_radius).max(0.0);
    if d <= spec.gains.delta {
        return None;
    }
    let away = (q - nearest) / core;
    Some(away * (-spec.gains.k_r / (d - spec.gains.delta).powi(3)))
}

fn value(axis: &AxisSpec, k: usize) -> f64 {
    if axis.steps == 1 {
        axis.min
    } else {
        axis.min + (axis.max - axis.min) * (k as f64 / (axis.steps - 1) as f64)
    }
}

#[test]
fn labels_match_independent_evaluator() {
    let spec = GridSpec {
        version: GRID_SPEC_VERSION,
        along: AxisSpec::new(-60.0, 320.0, 50),
        cross: AxisSpec::new(-110.0, 110.0, 50),
        rel_heading: AxisSpec::new(-1.0, 1.0, 2),
        speed: AxisSpec::new(2.0, 3.5, 2),
        elapsed: AxisSpec::new(0.0, 60.0, 30),
        gains: Gains::new(5.0, 500.0, 2.0),
        horizon: 60.0,
        footprint_radius: 2.5,
        noise: NoiseBounds::new(0.1, 0.2),
        geometry: SliceGeometry::Sector,
        label_cap: 1e300,
    };
    assert_eq!(spec.point_count(), 300_000);
    let data = generate_training_data(&spec).unwrap();

    let mut row = 0;
    let mut inside = 0;
    let mut worst: f64 = 0.0;
    for ia in 0..spec.along.steps {
        for ic in 0..spec.cross.steps {
            for ih in 0..spec.rel_heading.steps {
                for is in 0..spec.speed.steps {
                    for ie in 0..spec.elapsed.steps {
                        let along = value(&spec.along, ia);
                        let cross = value(&spec.cross, ic);
                        let speed = value(&spec.speed, is);
                        let elapsed = value(&spec.elapsed, ie);
                        let Some(expected) = oracle(Vec2::new(along, cross), speed, elapsed, &spec) else {
                            inside += 1;
                            continue;
                        };
                        let x = data.input(row);
                        let want = [along, cross, value(&spec.rel_heading, ih), speed, elapsed];
                        for (got, want) in x.iter().zip(want) {
                            assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "row {row}: {x:?} vs {want:?}");
                        }
                        let err = (data.label(row) - expected).norm() / expected.norm();
                        worst = worst.max(err);
                        assert!(err <= 1e-9, "row {row} at {want:?}: {:?} vs {expected:?}", data.label(row));
                        row += 1;
                    }
                }
            }
        }
    }
    assert_eq!(row, data.len());
    assert_eq!(inside, data.excluded_margin);
    assert_eq!(data.excluded_cap, 0);
    assert!(data.len() > 250_000, "grid mostly outside the margin");
    eprintln!("{} labels checked, worst relative error {worst:.2e}", data.len());
}
