use serde::{Deserialize, Serialize};

/// Learning-rate halving with early stopping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleState {
    pub lr: f64,
    pub min_lr: f64,
    pub best: Option<f64>,
    pub halvings: u32,
    pub stop: bool,
}

/// What the trainer should do after a dev evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduleOutcome {
    /// The dev score is a new best; keep these weights.
    pub improved: bool,
    /// The learning rate was halved; go back to the best weights.
    pub restore_best: bool,
}

impl ScheduleState {
    pub fn new(lr: f64, min_lr: f64) -> Self {
        ScheduleState {
            lr,
            min_lr,
            best: None,
            halvings: 0,
            stop: lr <= min_lr,
        }
    }

    /// Records a dev log-likelihood. A value that does not beat the best so
    /// far halves the learning rate; `stop` is set once `lr <= min_lr`.
    pub fn step(&mut self, dev_log_likelihood: f64) -> ScheduleOutcome {
        if self.best.is_none_or(|b| dev_log_likelihood > b) {
            self.best = Some(dev_log_likelihood);
            return ScheduleOutcome {
                improved: true,
                restore_best: false,
            };
        }
        self.halvings += 1;
        self.lr /= 2.0;
        self.stop = self.lr <= self.min_lr;
        ScheduleOutcome {
            improved: false,
            restore_best: true,
        }
    }
}

/// Functional form of [`ScheduleState::step`].
pub fn schedule_step(
    mut state: ScheduleState,
    dev_log_likelihood: f64,
) -> (ScheduleState, ScheduleOutcome) {
    let outcome = state.step(dev_log_likelihood);
    (state, outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_records_best() {
        let (s, o) = schedule_step(ScheduleState::new(0.001, 1e-5), -3.0);
        assert!(o.improved);
        assert_eq!(s.lr, 0.001);
        assert_eq!(s.best, Some(-3.0));
    }

    #[test]
    fn no_improvement_halves() {
        let mut s = ScheduleState::new(0.001, 1e-5);
        s.step(-3.0);
        let o = s.step(-3.0);
        assert!(o.restore_best && !o.improved);
        assert_eq!(s.lr, 0.0005);
        assert!(!s.stop);
    }

    #[test]
    fn stops_after_seven_halvings() {
        let mut s = ScheduleState::new(0.001, 1e-5);
        s.step(-1.0);
        for h in 1..=7 {
            assert!(!s.stop);
            s.step(-2.0);
            assert_eq!(s.halvings, h);
            assert_eq!(s.lr, 0.001 * 2f64.powi(-(h as i32)));
        }
        assert!(s.stop);
        assert!((s.lr - 7.8125e-6).abs() < 1e-18);
    }
}
