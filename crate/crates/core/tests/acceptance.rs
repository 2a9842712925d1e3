//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.
//!
//!     cargo test --release --test acceptance

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reachpf::eval::{run_trials, speedup_benchmark, EvalConfig, Family, TrialRun};
use reachpf::nn::{fit_gradient_net, generate_training_data, GradientNet, Mlp, TrainConfig};
use reachpf::potential::{attractive_gradient, attractive_value, repulsive_gradient, repulsive_value};
use reachpf::reachability::{forward_reach_tube, sample_reach, sample_reach_resampled};
use reachpf::scenarios::{build_head_on_scenario, build_ugv_scenario, ugv, ugv_grid_spec, uuv, uuv_grid_spec, UgvCase};
use reachpf::sim::{run, write_trace_csv};
use reachpf::{ControllerKind, NoiseBounds, ObstacleState, Scenario, SliceGeometry, Status, Trace, Vec2};

const TRIALS: usize = 20;

struct Report {
    failed: usize,
}

impl Report {
    fn check(&mut self, id: &str, pass: bool, detail: String) {
        println!("{id:<4} {}  {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed += 1;
        }
    }
}

fn traces(runs: &[TrialRun]) -> Vec<&Trace> {
    runs.iter().map(|r| r.outcome.as_ref().expect("trial runs")).collect()
}

fn uuv_runs(controller: ControllerKind, model: Option<&GradientNet>) -> (Vec<TrialRun>, f64) {
    let cfg = EvalConfig {
        family: Family::Uuv,
        controllers: vec![controller],
        trials: TRIALS,
        base_seed: 0,
        benchmark_iterations: 0,
    };
    let t = Instant::now();
    let runs = run_trials(&cfg, model);
    (runs, t.elapsed().as_secs_f64())
}

fn min_of(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(f64::INFINITY, f64::min)
}

fn safety(id: &str, report: &mut Report, runs: &[TrialRun], secs: f64, budget: Option<f64>) {
    let ts = traces(runs);
    let reached = ts.iter().filter(|t| t.status == Status::GoalReached).count();
    let min_tube = min_of(ts.iter().map(|t| t.min_dist_tube()));
    let min_true = min_of(ts.iter().map(|t| t.min_dist_true()));
    let pass = reached == TRIALS && min_tube >= uuv::DELTA && budget.is_none_or(|b| secs <= b);
    report.check(
        id,
        pass,
        format!(
            "goal reached {reached}/{TRIALS}, min tube distance {min_tube:.2} m, min ship distance {min_true:.2} m \
             (delta {} m), {secs:.1} s",
            uuv::DELTA
        ),
    );
}

fn csv_bytes(trace: &Trace) -> Vec<u8> {
    let mut buf = Vec::new();
    write_trace_csv(trace, &mut buf).unwrap();
    buf
}

/// Central differences of `f` against `grad` at `x`; `None` when the
/// analytic gradient jumps within the stencil (a kink).
fn fd_error(x: Vec2, f: impl Fn(Vec2) -> f64, grad: impl Fn(Vec2) -> Vec2) -> Option<f64> {
    let g = grad(x);
    let h = 1e-6 * x.norm().max(1.0);
    let mut fd = Vec2::zeros();
    for k in 0..2 {
        let mut e = Vec2::zeros();
        e[k] = h;
        for s in [1.0, -1.0] {
            if (grad(x + e * s) - g).norm() > 1e-3 * g.norm() {
                return None;
            }
        }
        fd[k] = (f(x + e) - f(x - e)) / (2.0 * h);
    }
    Some((fd - g).norm() / g.norm().max(f64::MIN_POSITIVE))
}

fn random_report(rng: &mut ChaCha8Rng) -> (ObstacleState, NoiseBounds, f64, f64) {
    let o = ObstacleState::new(
        Vec2::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)),
        rng.random_range(-PI..PI),
        rng.random_range(0.0..6.0),
        rng.random_range(0.0..100.0),
    );
    let noise = NoiseBounds::new(rng.random_range(0.0..0.5), rng.random_range(0.0..0.6));
    (o, noise, rng.random_range(1.0..60.0), rng.random_range(0.0..3.0))
}

fn c6_gradients(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (k_r, delta, k_p) = (50.0, 1.0, 2.0);
    let (mut n, mut skipped, mut worst_rep, mut worst_att) = (0, 0, 0.0f64, 0.0f64);
    while n < 500 {
        let (o, noise, horizon, footprint) = random_report(&mut rng);
        let tube = forward_reach_tube(&o, &noise, horizon, footprint).unwrap();
        let slice = tube.slice(o.timestamp + rng.random_range(0.0..horizon)).unwrap();
        let x = o.position + Vec2::new(rng.random_range(-150.0..150.0), rng.random_range(-150.0..150.0));
        if slice.distance(x) <= delta * 1.5 {
            skipped += 1;
            continue;
        }
        let f = |p: Vec2| repulsive_value(&slice.closest_point(p), k_r, delta).unwrap();
        let g = |p: Vec2| repulsive_gradient(p, &slice, k_r, delta).unwrap();
        let Some(rep) = fd_error(x, f, g) else {
            skipped += 1;
            continue;
        };
        let goal = Vec2::new(rng.random_range(-100.0..100.0), rng.random_range(-100.0..100.0));
        let att = fd_error(x, |p| attractive_value(p, goal, k_p), |p| attractive_gradient(p, goal, k_p)).unwrap();
        worst_rep = worst_rep.max(rep);
        worst_att = worst_att.max(att);
        n += 1;
    }

    let mut worst_bp: f64 = 0.0;
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = Mlp::new(&[2, 3, 2], &mut rng).unwrap();
        let xs: Vec<f64> = (0..14).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ys: Vec<f64> = (0..14).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, g) = m.loss_and_gradient(&xs, &ys);
        let h = 1e-6;
        for k in 0..m.parameters().len() {
            let mut p = m.clone();
            p.parameters_mut()[k] += h;
            let up = p.mse(&xs, &ys);
            p.parameters_mut()[k] -= 2.0 * h;
            let fd = (up - p.mse(&xs, &ys)) / (2.0 * h);
            worst_bp = worst_bp.max((fd - g[k]).abs() / fd.abs().max(g[k].abs()).max(1e-6));
        }
    }
    report.check(
        "C6",
        worst_rep < 1e-3 && worst_att < 1e-3 && worst_bp < 1e-4,
        format!(
            "500 configurations ({skipped} near kinks or the margin skipped): repulsive {worst_rep:.1e}, attractive \
             {worst_att:.1e}; 2-3-2 backprop over 10 nets {worst_bp:.1e}"
        ),
    );
}

fn c7_reachability(report: &mut Report) {
    const ENDPOINTS: usize = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut violations = 0usize;
    let mut checked = 0usize;
    for _ in 0..100 {
        let (o, noise, horizon, _) = random_report(&mut rng);
        let horizon = horizon.min(30.0);
        for geometry in [SliceGeometry::Sector, SliceGeometry::ConvexHull] {
            let tube = forward_reach_tube(&o, &noise, horizon, 0.0).unwrap().with_geometry(geometry);
            let t = o.timestamp + rng.random_range(0.0..=horizon);
            let slice = tube.slice(o.timestamp + rng.random_range(0.0..=t - o.timestamp)).unwrap();
            let mut pts = sample_reach(&o, &noise, t, ENDPOINTS / 2, &mut rng).unwrap();
            pts.extend(sample_reach_resampled(&o, &noise, t, 0.1, ENDPOINTS / 2, &mut rng).unwrap());
            violations += pts.iter().filter(|p| !slice.contains(**p)).count();
            checked += pts.len();
        }
    }

    let mut nest_fail = 0usize;
    for _ in 0..1000 {
        let (o, noise, horizon, footprint) = random_report(&mut rng);
        let tube = forward_reach_tube(&o, &noise, horizon, footprint).unwrap();
        let mut ts = [rng.random_range(0.0..=horizon), rng.random_range(0.0..=horizon)];
        ts.sort_by(f64::total_cmp);
        let early = tube.slice(o.timestamp + ts[0]).unwrap();
        let late = tube.slice(o.timestamp + ts[1]).unwrap();
        let scale = tube.max_extent() * 1.5 + 1.0;
        let nested = (0..200).all(|k| {
            let q = if k % 2 == 0 {
                o.position + Vec2::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale))
            } else {
                late.closest_point(o.position + Vec2::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale))).point
            };
            (!late.contains(q) || early.contains(q)) && early.distance(q) <= late.distance(q) + 1e-9 * scale
        });
        nest_fail += usize::from(!nested);
    }
    report.check(
        "C7",
        violations == 0 && checked >= 100 * 2 * ENDPOINTS && nest_fail == 0,
        format!(
            "{violations} of {checked} endpoints outside their slice (100 configurations x 2 geometries); nestedness \
             failed on {nest_fail} of 1000 triples"
        ),
    );
}

fn c5_fidelity(report: &mut Report, net: &GradientNet, data: &reachpf::nn::Dataset, val: &[usize]) {
    let spec = &data.spec;
    let mut cos = Vec::new();
    let mut angles = Vec::new();
    for &i in val {
        let x: [f64; 5] = data.input(i).try_into().unwrap();
        let o = ObstacleState::new(Vec2::zeros(), 0.0, x[3], 0.0);
        let tube = forward_reach_tube(&o, &spec.noise, spec.horizon, spec.footprint_radius).unwrap();
        if tube.slice(x[4]).unwrap().distance(Vec2::new(x[0], x[1])) >= 2.0 * tube.max_extent() {
            continue;
        }
        let exact = data.label(i);
        let approx = net.predict_features(&x);
        let c = (approx.dot(&exact) / (approx.norm() * exact.norm())).clamp(-1.0, 1.0);
        cos.push(if c.is_finite() { c } else { -1.0 });
        angles.push(cos.last().unwrap().acos().to_degrees());
    }
    angles.sort_by(f64::total_cmp);
    let mean = cos.iter().sum::<f64>() / cos.len() as f64;
    let median = angles[angles.len() / 2];
    let p95 = angles[angles.len() * 95 / 100];
    report.check(
        "C5",
        mean >= 0.95 && median < 10.0,
        format!(
            "{} near-field held-out points of {}: mean cosine {mean:.4}, median angle {median:.2} deg (95th \
             percentile {p95:.2} deg)",
            cos.len(),
            val.len()
        ),
    );
}

fn c9_ugv(report: &mut Report) -> Vec<(Scenario, ControllerKind, Option<GradientNet>)> {
    let data = generate_training_data(&ugv_grid_spec()).unwrap();
    let cfg = TrainConfig { epochs: 20, learning_rate: 0.005, decay_every: 7, seed: 1, ..TrainConfig::default() };
    let (net, _) = fit_gradient_net(&data, &cfg).unwrap();
    let mut lines = Vec::new();
    let mut pass = true;
    let mut runs = Vec::new();
    for case in [UgvCase::Crossing, UgvCase::Parallel] {
        let scenario = build_ugv_scenario(case);
        for c in [ControllerKind::ExactPf, ControllerKind::Nn] {
            let model = (c == ControllerKind::Nn).then_some(&net);
            let t = run(&scenario, c, model).unwrap();
            pass &= t.status == Status::GoalReached && t.min_dist_true() >= ugv::DELTA;
            lines.push(format!("{} {} {} {:.3} m", scenario.name, c.name(), t.status.name(), t.min_dist_true()));
            runs.push((scenario.clone(), c, model.cloned()));
        }
    }
    report.check("C9", pass, format!("{} (delta {} m)", lines.join(", "), ugv::DELTA));
    runs
}

fn main() {
    let mut report = Report { failed: 0 };
    let started = Instant::now();

    let (exact, secs) = uuv_runs(ControllerKind::ExactPf, None);
    safety("C1", &mut report, &exact, secs, Some(300.0));

    let data = generate_training_data(&uuv_grid_spec()).unwrap();
    let cfg = TrainConfig { epochs: 40, learning_rate: 0.02, decay_every: 14, seed: 1, ..TrainConfig::default() };
    let t = Instant::now();
    let (net, train) = fit_gradient_net(&data, &cfg).unwrap();
    println!(
        "     uuv network: {} samples, {} epochs in {:.0} s, held-out mse {:.5}",
        data.len(),
        cfg.epochs,
        t.elapsed().as_secs_f64(),
        train.final_val_mse()
    );
    let (nn, secs) = uuv_runs(ControllerKind::Nn, Some(&net));
    safety("C2", &mut report, &nn, secs, None);

    let (noise_free, _) = uuv_runs(ControllerKind::NoiseFreePf, None);
    let breaches = traces(&noise_free).iter().filter(|t| t.min_dist_tube() < uuv::DELTA).count();
    report.check("C3", breaches >= 1, format!("noise-free tubes: {breaches} of {TRIALS} trials came within delta of the true tube"));

    let reports: Vec<ObstacleState> = Family::Uuv.scenario(0).obstacles.iter().map(|o| o.initial).collect();
    let bench = speedup_benchmark(&net, &reports, 20_000, 4);
    report.check(
        "C4",
        bench.factor >= 100.0 && bench.iterations >= 10_000,
        format!(
            "{} iterations: nn {:.0} ns, flowpipe rebuild + query {:.0} ns, speedup {:.0}x",
            bench.iterations, bench.nn_mean_ns, bench.rebuild_mean_ns, bench.factor
        ),
    );

    c5_fidelity(&mut report, &net, &data, &train.val_indices);
    c6_gradients(&mut report);
    c7_reachability(&mut report);

    let head_on = build_head_on_scenario();
    let tube = run(&head_on, ControllerKind::ExactPf, None).unwrap();
    let point = run(&head_on, ControllerKind::PointPf, None).unwrap();
    report.check(
        "C8",
        tube.status == Status::GoalReached && tube.path_length() < point.path_length(),
        format!(
            "tube field {} in {:.1} s, path {:.2} m; point field {} path {:.2} m",
            tube.status.name(),
            tube.final_time(),
            tube.path_length(),
            point.status.name(),
            point.path_length()
        ),
    );

    let ugv_runs = c9_ugv(&mut report);

    let mut compared = 0;
    let mut differing = 0;
    for (runs, model) in [(&exact, None), (&nn, Some(&net)), (&noise_free, None)] {
        for r in runs {
            let again = run(&Family::Uuv.scenario(r.seed), r.controller, model).unwrap();
            compared += 1;
            differing += usize::from(csv_bytes(r.outcome.as_ref().unwrap()) != csv_bytes(&again));
        }
    }
    for (scenario, c, model) in ugv_runs.iter().map(|(s, c, m)| (s.clone(), *c, m.as_ref())).chain([
        (head_on.clone(), ControllerKind::ExactPf, None),
        (head_on.clone(), ControllerKind::PointPf, None),
    ]) {
        compared += 1;
        differing += usize::from(csv_bytes(&run(&scenario, c, model).unwrap()) != csv_bytes(&run(&scenario, c, model).unwrap()));
    }
    report.check("C10", differing == 0, format!("{differing} of {compared} repeated runs differ in their trace CSV"));

    println!("     {} failed, {:.0} s total", report.failed, started.elapsed().as_secs_f64());
    if report.failed > 0 {
        std::process::exit(1);
    }
}
