//! Reach tube of one noisy obstacle: slice radii, closest-point queries,
//! a Monte-Carlo containment check, and the interval flowpipe for
//! comparison.
//!
//!     cargo run --release --example reach_tube

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reachpf::reachability::{forward_reach_tube, sample_reach_resampled, Flowpipe};
use reachpf::{NoiseBounds, ObstacleState, Vec2};

fn main() {
    // A ship heading north-east at 5 m/s, reported at t = 0.
    let ship = ObstacleState::new(Vec2::new(0.0, 0.0), std::f64::consts::FRAC_PI_4, 5.0, 0.0);
    let bounds = NoiseBounds::new(0.05, 0.01);
    let tube = forward_reach_tube(&ship, &bounds, 600.0, 39.5).unwrap();

    println!("speed interval {:?}, heading interval {:?}", tube.speed_interval(), tube.heading_interval());
    println!("max extent {:.1} m", tube.max_extent());
    for t1 in [0.0, 60.0, 300.0, 600.0] {
        let slice = tube.slice(t1).unwrap();
        let (r_in, r_out) = slice.radii();
        println!("slice [{t1:>5.0}, 600] radii {r_in:>8.2} .. {r_out:>8.2}");
    }

    let slice = tube.slice(120.0).unwrap();
    for q in [Vec2::new(0.0, 0.0), Vec2::new(500.0, 500.0), Vec2::new(800.0, 200.0), Vec2::new(-300.0, 100.0)] {
        let cp = slice.closest_point(q);
        println!(
            "query ({:>6.1}, {:>6.1}) -> closest ({:>7.1}, {:>7.1}), distance {:>7.2}",
            q.x, q.y, cp.point.x, cp.point.y, cp.distance
        );
    }

    // Every simulated trajectory (offsets redrawn each 0.1 s step) must end
    // inside the slice that starts no later than its endpoint time.
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut outside = 0;
    let mut total = 0;
    for t in [30.0, 150.0, 450.0] {
        for p in sample_reach_resampled(&ship, &bounds, t, 0.1, 500, &mut rng).unwrap() {
            total += 1;
            if !tube.slice(t).unwrap().contains(p) {
                outside += 1;
            }
        }
    }
    println!("monte carlo: {outside} of {total} endpoints outside the tube");

    let fp = Flowpipe::compute(&ship, &bounds, 600.0, 39.5, 0.1).unwrap();
    let q = Vec2::new(800.0, 200.0);
    println!(
        "flowpipe ({} boxes) distance {:.2} vs sector {:.2}",
        fp.segment_count(),
        fp.distance(120.0, q),
        slice.distance(q)
    );
}
