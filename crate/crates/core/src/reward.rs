//! Streaming confusion counts and the AUC reward the bandit maximises.
//!
//! For hard (binary) predictions the AUC over the ROC corner points is the
//! balanced accuracy `(TPR + TNR) / 2`.

use serde::{Deserialize, Serialize};

/// Agreement class of one prediction against one observed outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Tp,
    Fp,
    Tn,
    Fn,
}

pub fn classify(prediction: bool, observed: bool) -> Outcome {
    match (prediction, observed) {
        (true, true) => Outcome::Tp,
        (true, false) => Outcome::Fp,
        (false, false) => Outcome::Tn,
        (false, true) => Outcome::Fn,
    }
}

/// Running TP/FP/TN/FN counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamingConfusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl StreamingConfusion {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Self { tp, fp, tn, fn_ }
    }

    pub fn from_pairs<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (bool, bool)>,
    {
        pairs
            .into_iter()
            .fold(Self::default(), |c, (p, o)| c.record(classify(p, o)))
    }

    #[must_use]
    pub fn record(mut self, outcome: Outcome) -> Self {
        self.push(outcome);
        self
    }

    pub fn push(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::Tp => self.tp += 1,
            Outcome::Fp => self.fp += 1,
            Outcome::Tn => self.tn += 1,
            Outcome::Fn => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Balanced accuracy of the counts.
    ///
    /// With a single observed class the rate of that class is returned; with no
    /// observations the reward is 0.
    pub fn auc(&self) -> f64 {
        let positives = self.tp + self.fn_;
        let negatives = self.tn + self.fp;
        match (positives, negatives) {
            (0, 0) => 0.0,
            (p, 0) => self.tp as f64 / p as f64,
            (0, n) => self.tn as f64 / n as f64,
            (p, n) => (self.tp as f64 / p as f64 + self.tn as f64 / n as f64) / 2.0,
        }
    }
}

pub fn record(confusion: StreamingConfusion, outcome: Outcome) -> StreamingConfusion {
    confusion.record(outcome)
}

pub fn auc(confusion: &StreamingConfusion) -> f64 {
    confusion.auc()
}

/// Balanced AUC of `predictions` against `labels`.
pub fn balanced_auc(predictions: &[bool], labels: &[bool]) -> f64 {
    debug_assert_eq!(predictions.len(), labels.len());
    StreamingConfusion::from_pairs(predictions.iter().copied().zip(labels.iter().copied())).auc()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn classify_cells() {
        assert_eq!(classify(true, true), Outcome::Tp);
        assert_eq!(classify(false, true), Outcome::Fn);
        assert_eq!(classify(false, false), Outcome::Tn);
        assert_eq!(classify(true, false), Outcome::Fp);
    }

    #[test]
    fn record_increments_one_count() {
        let c = record(StreamingConfusion::default(), Outcome::Tp);
        assert_eq!(c, StreamingConfusion::new(1, 0, 0, 0));
        let c = record(StreamingConfusion::new(1, 0, 1, 0), Outcome::Fp);
        assert_eq!(c, StreamingConfusion::new(1, 1, 1, 0));
    }

    #[test]
    fn record_arm_b_sequence() {
        let c = [Outcome::Fn, Outcome::Fn, Outcome::Tn, Outcome::Fp]
            .into_iter()
            .fold(StreamingConfusion::default(), record);
        assert_eq!(c, StreamingConfusion::new(0, 1, 1, 2));
    }

    #[test]
    fn auc_worked_values() {
        assert!(close(StreamingConfusion::new(2, 1, 1, 0).auc(), 0.75));
        assert!(close(StreamingConfusion::new(0, 0, 1, 2).auc(), 0.50));
        assert!(close(StreamingConfusion::new(0, 2, 1, 0).auc(), 1.0 / 3.0));
        assert!(close(StreamingConfusion::new(5, 0, 5, 0).auc(), 1.0));
    }

    #[test]
    fn auc_degenerate_cases() {
        assert_eq!(StreamingConfusion::default().auc(), 0.0);
        assert_eq!(StreamingConfusion::new(0, 0, 3, 0).auc(), 1.0);
        assert_eq!(StreamingConfusion::new(0, 0, 0, 2).auc(), 0.0);
        assert_eq!(StreamingConfusion::new(1, 0, 0, 1).auc(), 0.5);
    }

    #[test]
    fn replay_two_arm_reward_cells() {
        // arm A: TP TP TN FP, arm B: FN FN TN FP
        let a = [Outcome::Tp, Outcome::Tp, Outcome::Tn, Outcome::Fp];
        let b = [Outcome::Fn, Outcome::Fn, Outcome::Tn, Outcome::Fp];
        let expect_a = [1.00, 1.00, 1.00, 0.75];
        let expect_b = [0.00, 0.00, 0.50, 0.25];
        let (mut ca, mut cb) = (StreamingConfusion::default(), StreamingConfusion::default());
        for i in 0..4 {
            ca.push(a[i]);
            cb.push(b[i]);
            assert_eq!(ca.auc(), expect_a[i]);
            assert_eq!(cb.auc(), expect_b[i]);
        }
    }

    proptest! {
        #[test]
        fn auc_in_unit_interval(tp in 0u64..1000, fp in 0u64..1000, tn in 0u64..1000, fn_ in 0u64..1000) {
            let a = StreamingConfusion::new(tp, fp, tn, fn_).auc();
            prop_assert!((0.0..=1.0).contains(&a));
        }

        #[test]
        fn auc_scale_invariant(tp in 0u64..200, fp in 0u64..200, tn in 0u64..200, fn_ in 0u64..200, k in 1u64..50) {
            let a = StreamingConfusion::new(tp, fp, tn, fn_).auc();
            let b = StreamingConfusion::new(tp * k, fp * k, tn * k, fn_ * k).auc();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn total_matches_observations(pairs in proptest::collection::vec((any::<bool>(), any::<bool>()), 0..100)) {
            let c = StreamingConfusion::from_pairs(pairs.iter().copied());
            prop_assert_eq!(c.total(), pairs.len() as u64);
        }
    }
}
