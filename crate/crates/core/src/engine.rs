//! The online loop: order modules, then for each module select an arm, test
//! the module, and reward every arm against the observed outcome.
//!
//! # Seeds
//!
//! A run seed feeds two independent ChaCha8 streams: stream 0 drives arm
//! selection and stream 1 drives overlooking draws. Repetition `r` of an
//! experiment with master seed `m` uses the run seed
//! `splitmix64(m + (r + 1) * 0x9E3779B97F4A7C15)` (see [`derive_seed`]).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::outcome::{self, ObservedOutcome, OverlookKind};
use crate::policy::{warmup_len, PolicyState};
use crate::reward::{balanced_auc, classify};
use crate::strategy::order_positions;
use crate::types::{Arm, ArmTable, Dataset, Module, RunResult, Selection, SimConfig, StepRecord};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Run seed for repetition `repetition` under `master_seed`.
pub fn derive_seed(master_seed: u64, repetition: u32) -> u64 {
    splitmix64(master_seed.wrapping_add(u64::from(repetition).wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Produces the test outcome of each visited module.
pub trait OutcomeSource {
    fn observe(
        &mut self,
        step_index: usize,
        module: &Module,
        effective_prediction: bool,
        config: &SimConfig,
    ) -> Result<ObservedOutcome>;
}

/// Draws outcomes from the overlooking model.
#[derive(Debug, Clone)]
pub struct StochasticOutcomes {
    rng: ChaCha8Rng,
}

impl StochasticOutcomes {
    pub fn new(seed: u64) -> Self {
        Self { rng: stream(seed, 1) }
    }
}

impl OutcomeSource for StochasticOutcomes {
    fn observe(
        &mut self,
        _step_index: usize,
        module: &Module,
        effective_prediction: bool,
        config: &SimConfig,
    ) -> Result<ObservedOutcome> {
        Ok(outcome::observe_outcome(
            module.defective,
            effective_prediction,
            config.effort_ratio,
            config.type2_prob,
            &mut self.rng,
        ))
    }
}

/// Replays a fixed sequence of observed outcomes, one per step.
#[derive(Debug, Clone)]
pub struct ScriptedOutcomes {
    observed: Vec<bool>,
}

impl ScriptedOutcomes {
    pub fn new(observed: Vec<bool>) -> Self {
        Self { observed }
    }
}

impl OutcomeSource for ScriptedOutcomes {
    fn observe(
        &mut self,
        step_index: usize,
        module: &Module,
        effective_prediction: bool,
        _config: &SimConfig,
    ) -> Result<ObservedOutcome> {
        let observed = *self
            .observed
            .get(step_index)
            .ok_or_else(|| Error::InvalidParameter(format!("no scripted outcome for step {step_index}")))?;
        ObservedOutcome::from_observation(module.defective, effective_prediction, observed)
    }
}

/// Runs one simulation with overlooking drawn from `seed`.
pub fn run_simulation(dataset: &Dataset, arms: &[Arm], config: &SimConfig, seed: u64) -> Result<RunResult> {
    let table = ArmTable::align(dataset, arms)?;
    simulate(dataset, &table, config, seed, &mut StochasticOutcomes::new(seed))
}

/// Runs one simulation on pre-aligned arms with a caller-supplied outcome source.
pub fn simulate(
    dataset: &Dataset,
    arms: &ArmTable,
    config: &SimConfig,
    seed: u64,
    outcomes: &mut dyn OutcomeSource,
) -> Result<RunResult> {
    config.validate()?;
    if arms.is_empty() {
        return Err(Error::NoArms);
    }
    let n = dataset.len();
    let order = order_positions(dataset, arms, config.strategy);
    let warmup = warmup_len(n, config.banp_fraction);
    let mut select_rng = stream(seed, 0);
    let mut state = PolicyState::new(arms.len())?;

    let mut steps = Vec::with_capacity(n);
    let mut effective = vec![false; n];
    let mut total_effort = 0.0;
    let (mut found, mut raw_tp, mut type1, mut type2) = (0u64, 0u64, 0u64, 0u64);
    let mut per_arm_outcomes = Vec::with_capacity(arms.len());

    for (step_index, &pos) in order.iter().enumerate() {
        let module = &dataset.modules()[pos];
        let (selection, arm_prediction, prediction) = if step_index < warmup {
            (Selection::Warmup, None, true)
        } else {
            let arm = state.select(config.policy, &mut select_rng)?;
            let p = arms.prediction(arm, pos);
            (Selection::Arm(arm), Some(p), p)
        };

        let effort_charged = outcome::effort(module.size, prediction, config.effort_constant, config.effort_ratio)?;
        let observed = outcomes.observe(step_index, module, prediction, config)?;
        if observed.observed_defective && !module.defective {
            return Err(Error::InvalidParameter(format!(
                "outcome source reported a defect in clean module `{}`",
                module.id
            )));
        }

        per_arm_outcomes.clear();
        per_arm_outcomes
            .extend((0..arms.len()).map(|a| classify(arms.prediction(a, pos), observed.observed_defective)));
        state.update(selection, &per_arm_outcomes)?;

        total_effort += effort_charged;
        effective[pos] = prediction;
        if prediction && module.defective {
            raw_tp += 1;
            if observed.observed_defective {
                found += 1;
            }
        }
        match observed.overlook_kind {
            OverlookKind::None => {}
            OverlookKind::Type1 => type1 += 1,
            OverlookKind::Type2 => type2 += 1,
        }

        steps.push(StepRecord {
            step_index,
            module_id: module.id.clone(),
            selected_arm: selection,
            arm_prediction,
            effective_prediction: prediction,
            observed_outcome: observed.observed_defective,
            overlook: observed.overlook_kind,
            true_label: module.defective,
            effort_charged,
            per_arm_auc_after: state.aucs(),
        });
    }

    Ok(RunResult {
        seed,
        steps,
        final_auc_vs_truth: balanced_auc(&effective, &dataset.labels()),
        total_effort,
        found_defects: found,
        true_positives_raw: raw_tp,
        positive_predictions: effective.iter().filter(|&&p| p).count() as u64,
        defects_overlooked_type1: type1,
        defects_overlooked_type2: type2,
        warmup_steps: warmup,
        per_arm_final_auc: state.aucs(),
        per_arm_times_selected: state.arms().iter().map(|a| a.times_selected).collect(),
    })
}
