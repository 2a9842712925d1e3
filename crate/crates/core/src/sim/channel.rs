use crate::dynamics::ObstacleState;

/// Intermittent information channel. A broadcast at `t_s` hands the
/// controller a noiseless snapshot of every obstacle; nothing else about
/// the obstacles reaches the controller.
#[derive(Debug, Clone)]
pub struct InfoChannel {
    times: Vec<f64>,
    next: usize,
}

impl InfoChannel {
    /// `times` must be sorted.
    pub fn new(times: Vec<f64>) -> Self {
        InfoChannel { times, next: 0 }
    }

    pub fn pending(&self) -> &[f64] {
        &self.times[self.next..]
    }

    /// Snapshots of `truth` stamped `now` if any broadcast is due at or
    /// before `now`. Several overdue broadcasts collapse into one.
    pub fn deliver(&mut self, now: f64, truth: &[ObstacleState]) -> Option<Vec<ObstacleState>> {
        let slack = 1e-9 * now.abs().max(1.0);
        let mut due = false;
        while self.next < self.times.len() && self.times[self.next] <= now + slack {
            self.next += 1;
            due = true;
        }
        due.then(|| truth.iter().map(|o| ObstacleState { timestamp: now, ..*o }).collect())
    }
}
