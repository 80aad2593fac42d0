//! Experiment configuration file (TOML).
//!
//! ```toml
//! master_seed = 42
//! repetitions = 20          # default 20
//! strategies = ["sf", "lf", "pf"]
//! effort_ratios = [0.1, 0.25, 0.5]
//! epsilons = [0.0, 0.1, 0.2, 0.3]
//! ucb = true
//! effort_constant = 1.0     # default 1
//! type2_prob = 0.2          # default 0.2
//! banp_fraction = 0.1       # default 0.1
//!
//! [[datasets]]
//! name = "ant"
//! modules = "ant-1.7.csv"   # relative to this file
//! arms = "ant-1.7-arms.csv"
//! ```
//!
//! Every key except `datasets` is optional; the defaults above give a
//! 3 x 3 x 5 = 45 cell grid. Cells are ordered strategy-major, then ratio,
//! then policy (epsilons in file order, UCB last).

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::experiment::DatasetInput;
use crate::io::{load_arms, load_dataset};
use crate::types::{Policy, SimConfig, Strategy};

const TOP_KEYS: &[&str] = &[
    "master_seed",
    "repetitions",
    "strategies",
    "effort_ratios",
    "epsilons",
    "ucb",
    "effort_constant",
    "type2_prob",
    "banp_fraction",
    "datasets",
];
const DATASET_KEYS: &[&str] = &["name", "modules", "arms"];

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct DatasetEntry {
    pub name: String,
    pub modules: PathBuf,
    pub arms: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_repetitions")]
    pub repetitions: u32,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<String>,
    #[serde(default = "default_ratios")]
    pub effort_ratios: Vec<f64>,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_true")]
    pub ucb: bool,
    #[serde(default = "default_one")]
    pub effort_constant: f64,
    #[serde(default = "default_type2")]
    pub type2_prob: f64,
    #[serde(default = "default_banp")]
    pub banp_fraction: f64,
    pub datasets: Vec<DatasetEntry>,
}

fn default_repetitions() -> u32 {
    20
}
fn default_strategies() -> Vec<String> {
    Strategy::ALL.iter().map(|s| s.as_str().to_string()).collect()
}
fn default_ratios() -> Vec<f64> {
    vec![0.1, 0.25, 0.5]
}
fn default_epsilons() -> Vec<f64> {
    vec![0.0, 0.1, 0.2, 0.3]
}
fn default_true() -> bool {
    true
}
fn default_one() -> f64 {
    1.0
}
fn default_type2() -> f64 {
    0.2
}
fn default_banp() -> f64 {
    0.1
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut unknown: Vec<String> = table
            .keys()
            .filter(|k| !TOP_KEYS.contains(&k.as_str()))
            .cloned()
            .collect();
        if let Some(toml::Value::Array(entries)) = table.get("datasets") {
            for (i, entry) in entries.iter().enumerate() {
                if let toml::Value::Table(t) = entry {
                    unknown.extend(
                        t.keys()
                            .filter(|k| !DATASET_KEYS.contains(&k.as_str()))
                            .map(|k| format!("datasets[{i}].{k}")),
                    );
                }
            }
        }
        if !unknown.is_empty() {
            return Err(Error::Config(format!("unknown keys: {}", unknown.join(", "))));
        }
        let cfg: Self = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.grid()?;
        if cfg.datasets.is_empty() {
            return Err(Error::Config("`datasets` must list at least one dataset".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn policies(&self) -> Vec<Policy> {
        let mut p: Vec<Policy> = self
            .epsilons
            .iter()
            .map(|&epsilon| Policy::EpsilonGreedy { epsilon })
            .collect();
        if self.ucb {
            p.push(Policy::Ucb);
        }
        p
    }

    /// Expands the sweep into validated cells.
    pub fn grid(&self) -> Result<Vec<SimConfig>> {
        let strategies = self
            .strategies
            .iter()
            .map(|s| s.parse::<Strategy>())
            .collect::<Result<Vec<_>>>()?;
        let policies = self.policies();
        if strategies.is_empty() || self.effort_ratios.is_empty() || policies.is_empty() {
            return Err(Error::Config(
                "grid is empty: strategies, effort_ratios and policies (epsilons/ucb) must be non-empty".into(),
            ));
        }
        let mut grid = Vec::new();
        for &strategy in &strategies {
            for &effort_ratio in &self.effort_ratios {
                for &policy in &policies {
                    let cell = SimConfig {
                        policy,
                        strategy,
                        effort_ratio,
                        effort_constant: self.effort_constant,
                        type2_prob: self.type2_prob,
                        banp_fraction: self.banp_fraction,
                        seed: self.master_seed,
                        repetitions: self.repetitions,
                    };
                    cell.validate().map_err(|e| Error::Config(e.to_string()))?;
                    grid.push(cell);
                }
            }
        }
        Ok(grid)
    }

    /// Loads every dataset and arm file, resolving relative paths against `base`.
    pub fn load_inputs(&self, base: &Path) -> Result<Vec<DatasetInput>> {
        self.datasets
            .iter()
            .map(|d| {
                let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
                Ok(DatasetInput {
                    name: d.name.clone(),
                    dataset: load_dataset(resolve(&d.modules))?,
                    arms: load_arms(resolve(&d.arms))?,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[[datasets]]
name = "ant"
modules = "ant.csv"
arms = "ant_arms.csv"
"#;

    #[test]
    fn defaults_give_45_cells() {
        let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.repetitions, 20);
        let grid = cfg.grid().unwrap();
        assert_eq!(grid.len(), 45);
        assert!(grid
            .iter()
            .all(|c| c.effort_constant == 1.0 && c.type2_prob == 0.2 && c.banp_fraction == 0.1));
        assert_eq!(grid.iter().filter(|c| c.policy == Policy::Ucb).count(), 9);
    }

    #[test]
    fn unknown_keys_are_listed() {
        let text = format!("bogus = 1\nalso_bad = 2\n{MINIMAL}extra = 3\n");
        let err = ExperimentConfig::parse(&text).unwrap_err().to_string();
        assert!(
            err.contains("bogus") && err.contains("also_bad") && err.contains("datasets[0].extra"),
            "{err}"
        );
    }

    #[test]
    fn unknown_strategy_rejected() {
        let text = format!("strategies = [\"sf\", \"random\"]\n{MINIMAL}");
        let err = ExperimentConfig::parse(&text).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(err.to_string().contains("random"));
    }

    #[test]
    fn out_of_range_values_rejected() {
        for bad in [
            "effort_ratios = [0.0]",
            "epsilons = [1.5]",
            "type2_prob = -0.1",
            "repetitions = 0",
        ] {
            let text = format!("{bad}\n{MINIMAL}");
            assert!(ExperimentConfig::parse(&text).is_err(), "{bad}");
        }
    }

    #[test]
    fn missing_datasets_rejected() {
        assert!(ExperimentConfig::parse("master_seed = 1\n").is_err());
    }

    #[test]
    fn custom_grid_order() {
        let text =
            format!("strategies = [\"pf\"]\neffort_ratios = [0.5, 0.1]\nepsilons = [0.2]\nucb = false\n{MINIMAL}");
        let grid = ExperimentConfig::parse(&text).unwrap().grid().unwrap();
        assert_eq!(grid.len(), 2);
        assert_eq!(grid[0].effort_ratio, 0.5);
        assert_eq!(grid[1].policy, Policy::EpsilonGreedy { epsilon: 0.2 });
    }
}
