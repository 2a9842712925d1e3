//! Fixed-step scenario simulator.
//!
//! Each step, in order: due information broadcasts are delivered, the
//! safety monitor and the goal/timeout checks run on the current state,
//! the selected controller computes a command from the reports it has
//! received, and robot and obstacles advance by `dt` (obstacles with
//! freshly sampled bounded noise). Given the scenario seed a run is fully
//! deterministic; wall-clock timings are kept out of the trace records.

mod channel;
mod scenario;
mod trace;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use channel::InfoChannel;
pub use scenario::{
    default_time_budget, Footprint, InfoSchedule, ObstacleSpec, Scenario, SCENARIO_VERSION,
};
pub use trace::{
    min_distance_report, read_trace_csv, trace_csv_header, write_trace_csv, ObstacleMinima,
    ObstacleRecord, ObstacleSummary, StepRecord, Trace, TraceReadError, TraceTable, TrialSummary,
};

use crate::dynamics::{sample_noise, step_obstacle, step_robot, Command, NoiseBounds, ObstacleState};
use crate::nn::{nn_control, GradientNet, NnError};
use crate::potential::{composed_control, repulsive_gradient_at, attractive_gradient, PotentialError};
use crate::reachability::{forward_reach_tube, ClosestPoint, ReachTube};
use crate::Vec2;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {field}: {reason}")]
    InvalidScenario { field: &'static str, reason: String },
    #[error("the nn controller needs a model")]
    MissingModel,
    #[error("a model was given but the controller is {0}")]
    UnexpectedModel(ControllerKind),
    #[error("robot step failed: {0}")]
    Dynamics(#[from] crate::dynamics::DynamicsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    /// Sums one network inference per report.
    Nn,
    /// Reach-tube field built with the true noise bounds.
    ExactPf,
    /// Reach-tube field built with zero noise bounds.
    NoiseFreePf,
    /// Point-obstacle field around each obstacle's live true position.
    /// A comparison baseline only: it bypasses the information channel.
    PointPf,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 4] =
        [ControllerKind::Nn, ControllerKind::ExactPf, ControllerKind::NoiseFreePf, ControllerKind::PointPf];

    pub fn name(&self) -> &'static str {
        match self {
            ControllerKind::Nn => "nn",
            ControllerKind::ExactPf => "exact-pf",
            ControllerKind::NoiseFreePf => "noise-free-pf",
            ControllerKind::PointPf => "point-pf",
        }
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ControllerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ControllerKind::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown controller '{s}' (expected nn, exact-pf, noise-free-pf or point-pf)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    GoalReached,
    Timeout,
    /// Some true robot-obstacle distance fell below delta.
    SafetyViolation,
    /// The field controller found a tube within delta and could not act.
    MarginBreached,
    /// The network was queried outside its trained domain.
    OutOfDomain,
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::GoalReached => "goal-reached",
            Status::Timeout => "timeout",
            Status::SafetyViolation => "safety-violation",
            Status::MarginBreached => "margin-breached",
            Status::OutOfDomain => "out-of-domain",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Latest report for one obstacle together with the tubes built from it.
#[derive(Debug, Clone)]
struct Belief {
    report: ObstacleState,
    tube: ReachTube,
    noise_free_tube: ReachTube,
}

fn build_belief(report: ObstacleState, spec: &ObstacleSpec, scenario: &Scenario) -> Belief {
    let radius = spec.footprint.radius();
    let tube = forward_reach_tube(&report, &spec.noise, scenario.horizon, radius)
        .expect("validated scenario")
        .with_geometry(scenario.geometry);
    let noise_free_tube = forward_reach_tube(&report, &NoiseBounds::zero(), scenario.horizon, radius)
        .expect("validated scenario")
        .with_geometry(scenario.geometry);
    Belief { report, tube, noise_free_tube }
}

fn true_distance(x: Vec2, o: &ObstacleState, radius: f64) -> f64 {
    ((x - o.position).norm() - radius).max(0.0)
}

enum ControlOutcome {
    Command(Command),
    Stop(Status),
}

struct Controller<'a> {
    kind: ControllerKind,
    model: Option<&'a GradientNet>,
}

impl Controller<'_> {
    fn command(
        &self,
        scenario: &Scenario,
        x: Vec2,
        heading: f64,
        now: f64,
        beliefs: &[Option<Belief>],
        truth: &[ObstacleState],
        expired: &mut bool,
    ) -> ControlOutcome {
        let gains = &scenario.gains;
        if !scenario.obstacles.is_empty() && beliefs.iter().all(Option::is_none) {
            return ControlOutcome::Command(Command::zero());
        }
        let result = match self.kind {
            ControllerKind::ExactPf | ControllerKind::NoiseFreePf => {
                let mut slices = Vec::with_capacity(beliefs.len());
                for b in beliefs.iter().flatten() {
                    let tube = if self.kind == ControllerKind::ExactPf { &b.tube } else { &b.noise_free_tube };
                    let (slice, past) = tube.slice_clamped(now).expect("report precedes now");
                    *expired |= past;
                    slices.push(slice);
                }
                composed_control(x, scenario.goal, &slices, gains, scenario.max_speed)
                    .map_err(|PotentialError::MarginBreached { .. }| Status::MarginBreached)
            }
            ControllerKind::PointPf => {
                let mut u = -attractive_gradient(x, scenario.goal, gains.k_p);
                let mut out = Ok(());
                for (o, spec) in truth.iter().zip(&scenario.obstacles) {
                    let r = spec.footprint.radius();
                    let offset = x - o.position;
                    let dist = offset.norm();
                    let point = if dist > r { o.position + offset * (r / dist) } else { x };
                    let cp = ClosestPoint { point, distance: (dist - r).max(0.0) };
                    match repulsive_gradient_at(x, &cp, gains.k_r, gains.delta) {
                        Ok(g) => u -= g,
                        Err(_) => {
                            out = Err(Status::MarginBreached);
                            break;
                        }
                    }
                }
                out.map(|_| Command::saturated(u, scenario.max_speed))
            }
            ControllerKind::Nn => {
                let net = self.model.expect("checked before the run");
                let reports: Vec<(ObstacleState, f64)> =
                    beliefs.iter().flatten().map(|b| (b.report, b.report.timestamp)).collect();
                nn_control(net, x, heading, scenario.goal, &reports, now, gains, scenario.max_speed)
                    .map_err(|_: NnError| Status::OutOfDomain)
            }
        };
        match result {
            Ok(cmd) => ControlOutcome::Command(cmd),
            Err(status) => ControlOutcome::Stop(status),
        }
    }
}

/// Runs one trial. `model` must be given exactly when `controller` is
/// [`ControllerKind::Nn`].
pub fn run(
    scenario: &Scenario,
    controller: ControllerKind,
    model: Option<&GradientNet>,
) -> Result<Trace, SimError> {
    scenario.validate()?;
    match (controller, model) {
        (ControllerKind::Nn, None) => return Err(SimError::MissingModel),
        (ControllerKind::Nn, Some(_)) => {}
        (kind, Some(_)) => return Err(SimError::UnexpectedModel(kind)),
        _ => {}
    }
    let ctrl = Controller { kind: controller, model };
    let n_obs = scenario.obstacles.len();
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let mut channel = InfoChannel::new(scenario.broadcast_times());
    let mut beliefs: Vec<Option<Belief>> = vec![None; n_obs];
    let mut truth: Vec<ObstacleState> = scenario.obstacles.iter().map(|o| o.initial).collect();
    let mut robot = scenario.start_state();
    let mut trace = Trace::new(scenario, controller);

    let mut k: u64 = 0;
    loop {
        let now = k as f64 * scenario.dt;
        if let Some(reports) = channel.deliver(now, &truth) {
            for (i, r) in reports.into_iter().enumerate() {
                beliefs[i] = Some(build_belief(r, &scenario.obstacles[i], scenario));
            }
        }
        let x = robot.position;
        let mut obstacles = Vec::with_capacity(n_obs);
        let mut violation = false;
        for (i, spec) in scenario.obstacles.iter().enumerate() {
            let dist_true = true_distance(x, &truth[i], spec.footprint.radius());
            violation |= dist_true < scenario.gains.delta;
            let (age, dist_tube) = match &beliefs[i] {
                Some(b) => {
                    let (slice, _) = b.tube.slice_clamped(now).expect("report precedes now");
                    (now - b.report.timestamp, slice.distance(x))
                }
                None => (f64::INFINITY, f64::INFINITY),
            };
            obstacles.push(ObstacleRecord { position: truth[i].position, age, dist_tube, dist_true });
        }
        let mut record = StepRecord { time: now, position: x, heading: robot.heading, command: Vec2::zeros(), obstacles };

        let stop = if violation {
            Some(Status::SafetyViolation)
        } else if (x - scenario.goal).norm() <= scenario.goal_tolerance {
            Some(Status::GoalReached)
        } else if now >= scenario.time_budget {
            Some(Status::Timeout)
        } else {
            None
        };
        if let Some(status) = stop {
            trace.records.push(record);
            trace.status = status;
            break;
        }

        let started = Instant::now();
        let outcome = ctrl.command(scenario, x, robot.heading, now, &beliefs, &truth, &mut trace.horizon_expired);
        trace.control_nanos.push(started.elapsed().as_nanos() as u64);
        let cmd = match outcome {
            ControlOutcome::Command(cmd) => cmd,
            ControlOutcome::Stop(status) => {
                trace.records.push(record);
                trace.status = status;
                break;
            }
        };
        record.command = cmd.velocity;
        trace.records.push(record);

        robot = step_robot(&robot, &cmd, scenario.dt, scenario.max_speed)?;
        robot.time = (k + 1) as f64 * scenario.dt;
        for (o, spec) in truth.iter_mut().zip(&scenario.obstacles) {
            let noise = sample_noise(&spec.noise, &mut rng);
            *o = step_obstacle(o, &noise, scenario.dt)?;
            o.timestamp = (k + 1) as f64 * scenario.dt;
        }
        k += 1;
    }
    Ok(trace)
}
