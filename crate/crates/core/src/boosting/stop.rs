use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// No training example misclassified.
    PerfectFit,
    /// No example misclassified before this round became correct; the
    /// round's learner is discarded.
    NoProgress,
    /// The learner budget was reached.
    Budget,
    /// AdaBoost.R2 average loss reached 0.5; the round's learner is discarded.
    WeakLearnerViolation,
    /// AdaBoost.R2 average loss was zero.
    PerfectLearner,
}

impl StopReason {
    pub fn label(self) -> &'static str {
        match self {
            StopReason::PerfectFit => "perfect fit",
            StopReason::NoProgress => "no progress",
            StopReason::Budget => "budget",
            StopReason::WeakLearnerViolation => "weak learning violated",
            StopReason::PerfectLearner => "perfect learner",
        }
    }

    /// Whether the learner of the round that triggered the stop is dropped.
    pub fn discards_round(self) -> bool {
        matches!(
            self,
            StopReason::NoProgress | StopReason::WeakLearnerViolation
        )
    }
}

/// Stopping decision after a round. `previous` and `current` flag the
/// examples misclassified by the ensemble before and after the round;
/// `previous` is `None` after the first round. `learners` counts the
/// learners including this round's.
pub fn should_stop(
    learners: usize,
    budget: usize,
    previous: Option<&[bool]>,
    current: &[bool],
    no_progress_rule: bool,
) -> Option<StopReason> {
    if let (true, Some(prev)) = (no_progress_rule, previous) {
        let had_errors = prev.iter().any(|&m| m);
        let fixed = prev.iter().zip(current).any(|(&p, &c)| p && !c);
        if had_errors && !fixed {
            return Some(StopReason::NoProgress);
        }
    }
    if !current.iter().any(|&m| m) {
        return Some(StopReason::PerfectFit);
    }
    if learners >= budget {
        return Some(StopReason::Budget);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules() {
        assert_eq!(
            should_stop(1, 5, None, &[false, false], true),
            Some(StopReason::PerfectFit)
        );
        assert_eq!(
            should_stop(2, 5, Some(&[true, true]), &[false, true], true),
            None
        );
        assert_eq!(
            should_stop(2, 5, Some(&[true, false]), &[true, true], true),
            Some(StopReason::NoProgress)
        );
        assert_eq!(
            should_stop(2, 5, Some(&[true, false]), &[true, true], false),
            None
        );
        assert_eq!(
            should_stop(5, 5, Some(&[true, false]), &[false, true], true),
            Some(StopReason::Budget)
        );
    }
}
