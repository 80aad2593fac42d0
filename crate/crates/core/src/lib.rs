//! Online selection among competing defect prediction models while modules
//! are tested one at a time.
//!
//! Each prediction model is a bandit arm. Modules are visited in a fixed test
//! order ([`strategy`]); at each step a policy ([`policy`]) picks the arm whose
//! prediction decides how much effort the module receives ([`outcome`]), the
//! test reports a possibly incomplete outcome, and every arm is rewarded with
//! its running balanced AUC against the observed outcomes ([`reward`]).
//! [`engine`] runs one such pass, [`experiment`] sweeps configurations and
//! computes the comparison metrics, and [`io`] / [`report`] handle files.

pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod io;
pub mod outcome;
pub mod policy;
pub mod report;
pub mod reward;
pub mod strategy;
pub mod types;

pub use engine::{derive_seed, run_simulation, simulate, OutcomeSource, ScriptedOutcomes, StochasticOutcomes};
pub use error::{Error, Result};
pub use experiment::{
    benchmark, pearson, rdiff, relative_change, run_experiment, run_study, static_auc, ExperimentSummary,
};
pub use outcome::{effort, observe_outcome, ObservedOutcome, OverlookKind};
pub use policy::{banp_effective_prediction, select_arm, warmup_len, PolicyState};
pub use reward::{auc, classify, record, Outcome, StreamingConfusion};
pub use strategy::order_modules;
pub use types::{Arm, ArmTable, Dataset, Module, Policy, RunResult, Selection, SimConfig, StepRecord, Strategy};
