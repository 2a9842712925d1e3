//! The reach-tube potential field around one obstacle: descent directions
//! on a coarse grid, and the analytic gradient against central finite
//! differences of the field value.
//!
//!     cargo run --release --example potential_field

use reachpf::potential::{composed_descent, composed_value, Gains};
use reachpf::reachability::forward_reach_tube;
use reachpf::{NoiseBounds, ObstacleState, Vec2};

fn main() {
    let gains = Gains::new(5.0, 10.0, 0.5);
    let goal = Vec2::new(10.0, 0.0);
    let obstacle = ObstacleState::new(Vec2::new(5.0, -3.0), std::f64::consts::FRAC_PI_2, 0.5, 0.0);
    let tube = forward_reach_tube(&obstacle, &NoiseBounds::new(0.05, 0.05), 8.0, 0.3).unwrap();
    let slices = [tube.slice(2.0).unwrap()];

    // One arrow per cell; '#' marks points inside the safety margin.
    let arrows = ['→', '↗', '↑', '↖', '←', '↙', '↓', '↘'];
    for row in (0..=12).rev() {
        let y = -4.0 + row as f64 * 0.75;
        let line: String = (0..=24)
            .map(|col| {
                let x = col as f64 * 0.5;
                match composed_descent(Vec2::new(x, y), goal, &slices, &gains) {
                    Ok(u) => {
                        let k = (u.y.atan2(u.x) / std::f64::consts::FRAC_PI_4).round().rem_euclid(8.0) as usize;
                        arrows[k]
                    }
                    Err(_) => '#',
                }
            })
            .collect();
        println!("{y:>6.2} {line}");
    }

    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for q in [Vec2::new(1.0, 1.0), Vec2::new(8.0, -1.0), Vec2::new(3.0, 4.0), Vec2::new(9.0, 2.5)] {
        let analytic = -composed_descent(q, goal, &slices, &gains).unwrap();
        let f = |p: Vec2| composed_value(p, goal, &slices, &gains).unwrap();
        let fd = Vec2::new(
            (f(q + Vec2::new(h, 0.0)) - f(q - Vec2::new(h, 0.0))) / (2.0 * h),
            (f(q + Vec2::new(0.0, h)) - f(q - Vec2::new(0.0, h))) / (2.0 * h),
        );
        let rel = (analytic - fd).norm() / analytic.norm();
        worst = worst.max(rel);
        println!("grad U at ({:.1}, {:.1}) = ({:.5}, {:.5}), finite difference rel. error {rel:.1e}", q.x, q.y, analytic.x, analytic.y);
    }
    println!("worst relative error {worst:.1e}");
}
