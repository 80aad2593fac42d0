//! Domain types shared across the simulator.
//!
//! Predictions and labels are binary and stored as `bool` (`true` = defective /
//! positive). Files on disk use `1`/`0`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::outcome::OverlookKind;

/// One testable unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Module {
    pub id: String,
    /// Size in lines of code, or any positive size proxy.
    pub size: f64,
    pub defective: bool,
}

impl Module {
    pub fn new(id: impl Into<String>, size: f64, defective: bool) -> Self {
        Self {
            id: id.into(),
            size,
            defective,
        }
    }
}

/// A validated, non-empty list of modules with unique ids and positive sizes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    modules: Vec<Module>,
}

impl Dataset {
    pub fn new(modules: Vec<Module>) -> Result<Self> {
        if modules.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut seen = HashSet::with_capacity(modules.len());
        for m in &modules {
            if !(m.size > 0.0 && m.size.is_finite()) {
                return Err(Error::InvalidSize {
                    id: m.id.clone(),
                    size: m.size,
                });
            }
            if !seen.insert(m.id.as_str()) {
                return Err(Error::DuplicateModule(m.id.clone()));
            }
        }
        Ok(Self { modules })
    }

    pub fn modules(&self) -> &[Module] {
        &self.modules
    }

    pub fn len(&self) -> usize {
        self.modules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modules.is_empty()
    }

    pub fn defective_count(&self) -> usize {
        self.modules.iter().filter(|m| m.defective).count()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.modules.iter().map(|m| m.defective).collect()
    }
}

impl<'de> Deserialize<'de> for Dataset {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            modules: Vec<Module>,
        }
        let raw = Raw::deserialize(de)?;
        Dataset::new(raw.modules).map_err(serde::de::Error::custom)
    }
}

/// A named prediction model reduced to per-module binary predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arm {
    pub name: String,
    pub predictions: BTreeMap<String, bool>,
}

impl Arm {
    pub fn new(name: impl Into<String>, predictions: BTreeMap<String, bool>) -> Self {
        Self {
            name: name.into(),
            predictions,
        }
    }

    /// Builds an arm from predictions listed in dataset order.
    pub fn from_ordered(name: impl Into<String>, dataset: &Dataset, preds: &[bool]) -> Result<Self> {
        let name = name.into();
        if preds.len() != dataset.len() {
            return Err(Error::Coverage {
                arm: name,
                detail: format!("{} predictions for {} modules", preds.len(), dataset.len()),
            });
        }
        let predictions = dataset
            .modules()
            .iter()
            .zip(preds)
            .map(|(m, &p)| (m.id.clone(), p))
            .collect();
        Ok(Self { name, predictions })
    }
}

/// Arm predictions aligned to dataset positions: `prediction(arm, module)`.
///
/// Construction checks that every arm predicts every module of the dataset and
/// nothing else.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmTable {
    names: Vec<String>,
    predictions: Vec<Vec<bool>>,
}

impl ArmTable {
    pub fn align(dataset: &Dataset, arms: &[Arm]) -> Result<Self> {
        if arms.is_empty() {
            return Err(Error::NoArms);
        }
        let index: HashMap<&str, usize> = dataset
            .modules()
            .iter()
            .enumerate()
            .map(|(i, m)| (m.id.as_str(), i))
            .collect();
        let mut predictions = Vec::with_capacity(arms.len());
        for arm in arms {
            if let Some(extra) = arm.predictions.keys().find(|k| !index.contains_key(k.as_str())) {
                return Err(Error::Coverage {
                    arm: arm.name.clone(),
                    detail: format!("unknown module id `{extra}`"),
                });
            }
            let mut row = Vec::with_capacity(dataset.len());
            for m in dataset.modules() {
                match arm.predictions.get(&m.id) {
                    Some(&p) => row.push(p),
                    None => {
                        return Err(Error::Coverage {
                            arm: arm.name.clone(),
                            detail: format!("missing prediction for module `{}`", m.id),
                        })
                    }
                }
            }
            predictions.push(row);
        }
        Ok(Self {
            names: arms.iter().map(|a| a.name.clone()).collect(),
            predictions,
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    #[inline]
    pub fn prediction(&self, arm: usize, module: usize) -> bool {
        self.predictions[arm][module]
    }

    pub fn arm_predictions(&self, arm: usize) -> &[bool] {
        &self.predictions[arm]
    }

    /// True if at least one arm predicts the module defective.
    pub fn any_positive(&self, module: usize) -> bool {
        self.predictions.iter().any(|row| row[module])
    }
}

/// Arm-selection policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Policy {
    EpsilonGreedy { epsilon: f64 },
    Ucb,
}

impl Policy {
    pub fn label(&self) -> String {
        match self {
            Policy::EpsilonGreedy { epsilon } => format!("egreedy:{epsilon}"),
            Policy::Ucb => "ucb".to_string(),
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::EpsilonGreedy { epsilon } => write!(f, "e={epsilon}"),
            Policy::Ucb => f.write_str("UCB"),
        }
    }
}

/// Module test order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Smallest modules first.
    Sf,
    /// Largest modules first.
    Lf,
    /// Modules predicted defective by any arm first, each group largest first.
    Pf,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Sf, Strategy::Lf, Strategy::Pf];

    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Sf => "sf",
            Strategy::Lf => "lf",
            Strategy::Pf => "pf",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.as_str().to_uppercase())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sf" => Ok(Strategy::Sf),
            "lf" => Ok(Strategy::Lf),
            "pf" => Ok(Strategy::Pf),
            other => Err(Error::Config(format!(
                "unknown strategy `{other}` (expected sf, lf or pf)"
            ))),
        }
    }
}

/// Parameters of one simulated configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub policy: Policy,
    pub strategy: Strategy,
    /// Effort on negative-prediction modules relative to positive ones.
    pub effort_ratio: f64,
    /// Effort per unit of module size.
    pub effort_constant: f64,
    /// Probability that a defect is missed despite full-effort testing.
    pub type2_prob: f64,
    /// Fraction of the earliest modules whose prediction is forced positive.
    pub banp_fraction: f64,
    pub seed: u64,
    pub repetitions: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            policy: Policy::EpsilonGreedy { epsilon: 0.0 },
            strategy: Strategy::Pf,
            effort_ratio: 0.1,
            effort_constant: 1.0,
            type2_prob: 0.2,
            banp_fraction: 0.1,
            seed: 0,
            repetitions: 20,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        fn unit(name: &str, v: f64) -> Result<()> {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be in [0, 1], got {v}")))
            }
        }
        if let Policy::EpsilonGreedy { epsilon } = self.policy {
            unit("epsilon", epsilon)?;
        }
        if !(self.effort_ratio > 0.0 && self.effort_ratio <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "effort_ratio must be in (0, 1], got {}",
                self.effort_ratio
            )));
        }
        if !(self.effort_constant > 0.0 && self.effort_constant.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "effort_constant must be positive, got {}",
                self.effort_constant
            )));
        }
        unit("type2_prob", self.type2_prob)?;
        unit("banp_fraction", self.banp_fraction)?;
        if self.repetitions == 0 {
            return Err(Error::InvalidParameter("repetitions must be at least 1".into()));
        }
        Ok(())
    }

    /// Short human-readable cell label, e.g. `PF/0.1/e=0`.
    pub fn label(&self) -> String {
        format!("{}/{}/{}", self.strategy, self.effort_ratio, self.policy)
    }
}

/// Which arm drove a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    /// Forced-positive warmup step; no arm is selected.
    Warmup,
    Arm(usize),
}

impl Selection {
    pub fn arm(&self) -> Option<usize> {
        match self {
            Selection::Warmup => None,
            Selection::Arm(i) => Some(*i),
        }
    }
}

/// One row of the run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step_index: usize,
    pub module_id: String,
    pub selected_arm: Selection,
    /// Raw prediction of the selected arm; `None` during warmup.
    pub arm_prediction: Option<bool>,
    pub effective_prediction: bool,
    pub observed_outcome: bool,
    pub overlook: OverlookKind,
    pub true_label: bool,
    pub effort_charged: f64,
    pub per_arm_auc_after: Vec<f64>,
}

/// Log and final metrics of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub steps: Vec<StepRecord>,
    /// Balanced AUC of the effective predictions against true labels.
    pub final_auc_vs_truth: f64,
    pub total_effort: f64,
    /// Defective modules predicted positive whose defect the test surfaced.
    pub found_defects: u64,
    /// Defective modules predicted positive, ignoring overlooking.
    pub true_positives_raw: u64,
    /// Modules tested under a positive effective prediction.
    pub positive_predictions: u64,
    pub defects_overlooked_type1: u64,
    pub defects_overlooked_type2: u64,
    pub warmup_steps: usize,
    pub per_arm_final_auc: Vec<f64>,
    pub per_arm_times_selected: Vec<u64>,
}
