//! Arm selection (epsilon-greedy and UCB1) and the forced-positive warmup.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reward::{Outcome, StreamingConfusion};
use crate::types::{Policy, Selection};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ArmStats {
    pub confusion: StreamingConfusion,
    /// Cached `confusion.auc()`.
    pub auc: f64,
    pub times_selected: u64,
}

/// Per-run bandit state. Every arm is rewarded on every tested module; only the
/// selected arm's pull count advances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyState {
    arms: Vec<ArmStats>,
    total_steps: u64,
}

impl PolicyState {
    pub fn new(arm_count: usize) -> Result<Self> {
        if arm_count == 0 {
            return Err(Error::NoArms);
        }
        Ok(Self {
            arms: vec![ArmStats::default(); arm_count],
            total_steps: 0,
        })
    }

    /// State with preset rewards and pull counts; confusion counts stay empty.
    pub fn with_rewards(aucs: &[f64], times_selected: &[u64], total_steps: u64) -> Result<Self> {
        if aucs.len() != times_selected.len() {
            return Err(Error::OutcomeCount {
                expected: aucs.len(),
                got: times_selected.len(),
            });
        }
        let mut state = Self::new(aucs.len())?;
        for (arm, (&auc, &n)) in state.arms.iter_mut().zip(aucs.iter().zip(times_selected)) {
            arm.auc = auc;
            arm.times_selected = n;
        }
        state.total_steps = total_steps;
        Ok(state)
    }

    pub fn arms(&self) -> &[ArmStats] {
        &self.arms
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn total_steps(&self) -> u64 {
        self.total_steps
    }

    pub fn aucs(&self) -> Vec<f64> {
        self.arms.iter().map(|a| a.auc).collect()
    }

    /// Rewards every arm with its own outcome and counts the pull.
    pub fn update(&mut self, selected: Selection, per_arm_outcomes: &[Outcome]) -> Result<()> {
        if per_arm_outcomes.len() != self.arms.len() {
            return Err(Error::OutcomeCount {
                expected: self.arms.len(),
                got: per_arm_outcomes.len(),
            });
        }
        if let Selection::Arm(i) = selected {
            if i >= self.arms.len() {
                return Err(Error::InvalidParameter(format!("arm index {i} out of range")));
            }
            self.arms[i].times_selected += 1;
        }
        for (arm, &outcome) in self.arms.iter_mut().zip(per_arm_outcomes) {
            arm.confusion.push(outcome);
            arm.auc = arm.confusion.auc();
        }
        self.total_steps += 1;
        Ok(())
    }

    pub fn select<R: Rng + ?Sized>(&self, policy: Policy, rng: &mut R) -> Result<usize> {
        select_arm(self, policy, rng)
    }
}

pub fn select_arm<R: Rng + ?Sized>(state: &PolicyState, policy: Policy, rng: &mut R) -> Result<usize> {
    if state.arms.is_empty() {
        return Err(Error::NoArms);
    }
    match policy {
        Policy::EpsilonGreedy { epsilon } => {
            if !(0.0..=1.0).contains(&epsilon) {
                return Err(Error::InvalidParameter(format!(
                    "epsilon must be in [0, 1], got {epsilon}"
                )));
            }
            if rng.gen_bool(epsilon) {
                Ok(rng.gen_range(0..state.arms.len()))
            } else {
                Ok(argmax_random_tie(state.arms.iter().map(|a| a.auc), rng))
            }
        }
        Policy::Ucb => {
            let untried: Vec<usize> = state
                .arms
                .iter()
                .enumerate()
                .filter(|(_, a)| a.times_selected == 0)
                .map(|(i, _)| i)
                .collect();
            if let Some(&i) = untried.choose(rng) {
                return Ok(i);
            }
            let log_t = (state.total_steps.max(1) as f64).ln();
            let scores = state
                .arms
                .iter()
                .map(|a| a.auc + (2.0 * log_t / a.times_selected as f64).sqrt());
            Ok(argmax_random_tie(scores, rng))
        }
    }
}

fn argmax_random_tie<R: Rng + ?Sized>(values: impl Iterator<Item = f64>, rng: &mut R) -> usize {
    let mut best = f64::NEG_INFINITY;
    let mut ties: Vec<usize> = Vec::new();
    for (i, v) in values.enumerate() {
        if v > best {
            best = v;
            ties.clear();
            ties.push(i);
        } else if v == best {
            ties.push(i);
        }
    }
    match ties.as_slice() {
        [only] => *only,
        _ => *ties.choose(rng).expect("at least one arm"),
    }
}

/// Number of forced-positive warmup steps: `ceil(fraction * total_modules)`.
///
/// Products within 1e-9 of an integer are treated as that integer, so e.g.
/// `0.1 * 30` gives 3 rather than 4.
pub fn warmup_len(total_modules: usize, banp_fraction: f64) -> usize {
    let x = banp_fraction * total_modules as f64;
    let nearest = x.round();
    let k = if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        x.ceil()
    };
    (k.max(0.0) as usize).min(total_modules)
}

/// Applies the warmup rule to one step: returns `(effective_prediction, in_warmup)`.
pub fn banp_effective_prediction(
    step_index: usize,
    total_modules: usize,
    banp_fraction: f64,
    arm_prediction: bool,
) -> (bool, bool) {
    let in_warmup = step_index < warmup_len(total_modules, banp_fraction);
    (in_warmup || arm_prediction, in_warmup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    const GREEDY: Policy = Policy::EpsilonGreedy { epsilon: 0.0 };

    #[test]
    fn greedy_picks_argmax() {
        let s = PolicyState::with_rewards(&[0.9, 0.5], &[3, 3], 6).unwrap();
        for seed in 0..20 {
            assert_eq!(select_arm(&s, GREEDY, &mut rng(seed)).unwrap(), 0);
        }
    }

    #[test]
    fn initial_state_is_uniform_random() {
        let s = PolicyState::new(3).unwrap();
        let mut r = rng(11);
        let mut counts = [0usize; 3];
        for _ in 0..3000 {
            counts[select_arm(&s, GREEDY, &mut r).unwrap()] += 1;
        }
        for c in counts {
            assert!((c as f64 / 3000.0 - 1.0 / 3.0).abs() < 0.04, "{counts:?}");
        }
    }

    #[test]
    fn ucb_prefers_less_pulled_arm() {
        // direct evaluation of the index for both arms
        let bonus = |n: f64| (2.0 * 11f64.ln() / n).sqrt();
        let score0 = 0.5 + bonus(10.0);
        let score1 = 0.5 + bonus(1.0);
        assert!((bonus(10.0) - 0.69).abs() < 0.01);
        assert!((bonus(1.0) - 2.19).abs() < 0.01);
        assert!(score1 > score0);

        let s = PolicyState::with_rewards(&[0.5, 0.5], &[10, 1], 11).unwrap();
        for seed in 0..20 {
            assert_eq!(select_arm(&s, Policy::Ucb, &mut rng(seed)).unwrap(), 1);
        }
    }

    #[test]
    fn ucb_tries_unpulled_arms_first() {
        let s = PolicyState::with_rewards(&[0.99, 0.0, 0.0], &[5, 0, 0], 5).unwrap();
        for seed in 0..50 {
            let a = select_arm(&s, Policy::Ucb, &mut rng(seed)).unwrap();
            assert!(a == 1 || a == 2);
        }
    }

    #[test]
    fn full_exploration_is_uniform() {
        let s = PolicyState::with_rewards(&[0.9, 0.1, 0.5, 0.3], &[1, 1, 1, 1], 4).unwrap();
        let mut r = rng(7);
        let mut counts = [0usize; 4];
        let draws = 10_000;
        for _ in 0..draws {
            counts[select_arm(&s, Policy::EpsilonGreedy { epsilon: 1.0 }, &mut r).unwrap()] += 1;
        }
        for c in counts {
            assert!((c as f64 / draws as f64 - 0.25).abs() <= 0.03, "{counts:?}");
        }
    }

    #[test]
    fn empty_and_invalid() {
        assert!(matches!(PolicyState::new(0), Err(Error::NoArms)));
        let s = PolicyState::new(2).unwrap();
        assert!(select_arm(&s, Policy::EpsilonGreedy { epsilon: 1.5 }, &mut rng(0)).is_err());
    }

    #[test]
    fn warmup_examples() {
        assert_eq!(banp_effective_prediction(0, 20, 0.1, false), (true, true));
        assert_eq!(banp_effective_prediction(2, 20, 0.1, false), (false, false));
        assert_eq!(banp_effective_prediction(5, 20, 0.0, true), (true, false));
        assert_eq!(warmup_len(660, 0.1), 66);
        assert_eq!(warmup_len(745, 0.1), 75);
        assert_eq!(warmup_len(30, 0.1), 3);
        assert_eq!(warmup_len(4, 0.5), 2);
        assert_eq!(warmup_len(10, 1.0), 10);
        assert_eq!(warmup_len(10, 0.0), 0);
    }

    #[test]
    fn update_rewards_every_arm() {
        let mut s = PolicyState::new(2).unwrap();
        s.update(Selection::Arm(0), &[Outcome::Tp, Outcome::Fn]).unwrap();
        assert_eq!(s.aucs(), vec![1.0, 0.0]);
        assert_eq!(s.arms()[0].times_selected, 1);
        assert_eq!(s.total_steps(), 1);

        s.update(Selection::Warmup, &[Outcome::Tp, Outcome::Fn]).unwrap();
        assert_eq!(s.total_steps(), 2);
        assert_eq!(s.arms()[0].times_selected, 1);
        assert_eq!(s.arms()[1].times_selected, 0);

        let mut t = PolicyState::new(2).unwrap();
        t.update(Selection::Warmup, &[Outcome::Tn, Outcome::Tn]).unwrap();
        t.update(Selection::Warmup, &[Outcome::Tn, Outcome::Tn]).unwrap();
        assert_eq!(t.aucs(), vec![1.0, 1.0]);

        assert!(matches!(
            t.update(Selection::Arm(0), &[Outcome::Tn]),
            Err(Error::OutcomeCount { expected: 2, got: 1 })
        ));
    }

    fn outcome() -> impl Strategy<Value = Outcome> {
        prop_oneof![
            Just(Outcome::Tp),
            Just(Outcome::Fp),
            Just(Outcome::Tn),
            Just(Outcome::Fn)
        ]
    }

    proptest! {
        #[test]
        fn greedy_argmax_scale_invariant(
            aucs in proptest::collection::hash_set(0u32..10_000, 2..8),
            k in 0.01f64..100.0,
            seed in any::<u64>(),
        ) {
            let aucs: Vec<f64> = aucs.into_iter().map(|v| v as f64 / 10_000.0).collect();
            let n = vec![1; aucs.len()];
            let scaled: Vec<f64> = aucs.iter().map(|a| a * k).collect();
            let best = aucs.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
            let s1 = PolicyState::with_rewards(&aucs, &n, 5).unwrap();
            let s2 = PolicyState::with_rewards(&scaled, &n, 5).unwrap();
            prop_assert_eq!(select_arm(&s1, GREEDY, &mut rng(seed)).unwrap(), best);
            prop_assert_eq!(select_arm(&s2, GREEDY, &mut rng(seed)).unwrap(), best);
        }

        #[test]
        fn confusion_totals_stay_equal(
            steps in proptest::collection::vec((proptest::collection::vec(outcome(), 3), proptest::option::of(0usize..3)), 0..60)
        ) {
            let mut s = PolicyState::new(3).unwrap();
            for (outs, sel) in &steps {
                let sel = sel.map(Selection::Arm).unwrap_or(Selection::Warmup);
                s.update(sel, outs).unwrap();
                let t = s.total_steps();
                prop_assert!(s.arms().iter().all(|a| a.confusion.total() == t));
                prop_assert!(s.arms().iter().map(|a| a.times_selected).sum::<u64>() <= t);
                prop_assert!(s.arms().iter().all(|a| a.auc == a.confusion.auc()));
            }
        }
    }
}
