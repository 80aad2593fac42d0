//! Repetition sweeps over a grid of configurations, plus the comparison
//! metrics used in the report tables.
//!
//! Every cell of the grid runs `repetitions` simulations. Repetition `r` uses
//! the run seed [`derive_seed`]`(master_seed, r)` in every cell and every
//! dataset, so cells are compared under common random numbers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{derive_seed, simulate, StochasticOutcomes};
use crate::error::{Error, Result};
use crate::outcome;
use crate::reward::balanced_auc;
use crate::types::{Arm, ArmTable, Dataset, RunResult, SimConfig, Strategy};

/// Arithmetic mean of the candidate methods' metric: the expected value of
/// picking a method uniformly at random.
pub fn benchmark(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("benchmark input"));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// `1 - target / baseline`.
pub fn rdiff(target: f64, baseline: f64) -> Result<f64> {
    if baseline == 0.0 {
        return Err(Error::ZeroBaseline);
    }
    Ok(1.0 - target / baseline)
}

/// `target / baseline - 1`; positive when the target is larger.
pub fn relative_change(target: f64, baseline: f64) -> Result<f64> {
    rdiff(target, baseline).map(|d| -d)
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidParameter(format!(
            "pearson inputs differ in length ({} vs {})",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::InvalidParameter("pearson needs at least two points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateVariance("xs"));
    }
    if syy == 0.0 {
        return Err(Error::DegenerateVariance("ys"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Balanced AUC of an arm's predictions against the true labels.
pub fn static_auc(arm: &Arm, dataset: &Dataset) -> Result<f64> {
    let table = ArmTable::align(dataset, std::slice::from_ref(arm))?;
    Ok(balanced_auc(table.arm_predictions(0), &dataset.labels()))
}

/// Total effort of testing every module under one arm's predictions.
pub fn static_effort(predictions: &[bool], dataset: &Dataset, c: f64, ratio: f64) -> Result<f64> {
    dataset
        .modules()
        .iter()
        .zip(predictions)
        .map(|(m, &p)| outcome::effort(m.size, p, c, ratio))
        .sum()
}

fn true_positives(predictions: &[bool], dataset: &Dataset) -> u64 {
    dataset
        .modules()
        .iter()
        .zip(predictions)
        .filter(|(m, &p)| p && m.defective)
        .count() as u64
}

/// Ordinal ranks (1 = best) of `values` in descending order; ties keep input order.
pub fn rank_descending(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut ranks = vec![0; values.len()];
    for (r, i) in idx.into_iter().enumerate() {
        ranks[i] = r + 1;
    }
    ranks
}

fn mean(xs: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = xs.len();
    xs.sum::<f64>() / n as f64
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs.iter().copied());
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Scalar metrics of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub repetition: u32,
    pub seed: u64,
    pub final_auc_vs_truth: f64,
    pub total_effort: f64,
    pub found_defects: u64,
    pub true_positives_raw: u64,
    pub positive_predictions: u64,
    pub overlooked_type1: u64,
    pub overlooked_type2: u64,
    pub warmup_steps: usize,
    pub per_arm_final_auc: Vec<f64>,
    pub per_arm_times_selected: Vec<u64>,
}

impl RunMetrics {
    pub fn from_run(repetition: u32, run: &RunResult) -> Self {
        Self {
            repetition,
            seed: run.seed,
            final_auc_vs_truth: run.final_auc_vs_truth,
            total_effort: run.total_effort,
            found_defects: run.found_defects,
            true_positives_raw: run.true_positives_raw,
            positive_predictions: run.positive_predictions,
            overlooked_type1: run.defects_overlooked_type1,
            overlooked_type2: run.defects_overlooked_type2,
            warmup_steps: run.warmup_steps,
            per_arm_final_auc: run.per_arm_final_auc.clone(),
            per_arm_times_selected: run.per_arm_times_selected.clone(),
        }
    }
}

/// Aggregate of one grid cell on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub config: SimConfig,
    pub mean_auc: f64,
    pub std_auc: f64,
    pub min_auc: f64,
    pub max_auc: f64,
    pub mean_effort: f64,
    pub mean_found_defects: f64,
    pub mean_true_positives_raw: f64,
    pub mean_positive_predictions: f64,
    /// Effort of testing every module under each arm, with this cell's effort
    /// constant and ratio.
    pub arm_efforts: Vec<f64>,
    /// Mean over arms of the effort of testing every module under that arm,
    /// with this cell's effort constant and ratio.
    pub benchmark_effort: f64,
    pub runs: Vec<RunMetrics>,
}

impl CellSummary {
    fn aggregate(config: SimConfig, runs: Vec<RunMetrics>, arm_efforts: Vec<f64>) -> Result<Self> {
        let aucs: Vec<f64> = runs.iter().map(|r| r.final_auc_vs_truth).collect();
        Ok(Self {
            config,
            mean_auc: mean(aucs.iter().copied()),
            std_auc: sample_std(&aucs),
            min_auc: aucs.iter().copied().fold(f64::INFINITY, f64::min),
            max_auc: aucs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean_effort: mean(runs.iter().map(|r| r.total_effort)),
            mean_found_defects: mean(runs.iter().map(|r| r.found_defects as f64)),
            mean_true_positives_raw: mean(runs.iter().map(|r| r.true_positives_raw as f64)),
            mean_positive_predictions: mean(runs.iter().map(|r| r.positive_predictions as f64)),
            benchmark_effort: benchmark(&arm_efforts)?,
            arm_efforts,
            runs,
        })
    }
}

/// Standalone (non-bandit) performance of one arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticArm {
    pub name: String,
    pub auc: f64,
    /// Defective modules the arm predicts defective.
    pub found_defects: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: String,
    pub modules: usize,
    pub defective: usize,
    pub arms: Vec<StaticArm>,
    pub benchmark_auc: f64,
    pub benchmark_found_defects: f64,
    /// One entry per grid cell, in grid order.
    pub cells: Vec<CellSummary>,
}

/// One row of the overall ranking (grid cells plus the benchmark).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub label: String,
    /// Grid index; `None` for the benchmark row.
    pub cell: Option<usize>,
    pub mean_auc: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub master_seed: u64,
    pub grid: Vec<SimConfig>,
    pub datasets: Vec<DatasetSummary>,
    /// Per cell, the mean over datasets of the cell's mean AUC.
    pub overall_auc: Vec<f64>,
    /// Mean over datasets of the per-dataset benchmark AUC.
    pub benchmark_auc: f64,
    /// Cells followed by the benchmark; ranks are a permutation of `1..=cells+1`.
    pub ranking: Vec<RankEntry>,
}

impl ExperimentSummary {
    /// Average over datasets and policies of the relative effort change of
    /// `target` against `baseline` at one effort ratio. `None` when the grid
    /// has no matching pairs.
    pub fn strategy_effort_change(&self, target: Strategy, baseline: Strategy, ratio: f64) -> Result<Option<f64>> {
        let mut changes = Vec::new();
        for ds in &self.datasets {
            for t in ds
                .cells
                .iter()
                .filter(|c| c.config.strategy == target && c.config.effort_ratio == ratio)
            {
                let base = ds.cells.iter().find(|c| {
                    c.config.strategy == baseline
                        && c.config.effort_ratio == ratio
                        && c.config.policy == t.config.policy
                        && c.config.effort_constant == t.config.effort_constant
                        && c.config.type2_prob == t.config.type2_prob
                        && c.config.banp_fraction == t.config.banp_fraction
                });
                if let Some(b) = base {
                    changes.push(relative_change(t.mean_effort, b.mean_effort)?);
                }
            }
        }
        Ok((!changes.is_empty()).then(|| mean(changes.iter().copied())))
    }

    /// Mean AUC over datasets for every cell matching `pred`.
    pub fn mean_auc_where(&self, pred: impl Fn(&SimConfig) -> bool) -> Option<f64> {
        let vals: Vec<f64> = self
            .grid
            .iter()
            .zip(&self.overall_auc)
            .filter(|(c, _)| pred(c))
            .map(|(_, &a)| a)
            .collect();
        (!vals.is_empty()).then(|| mean(vals.iter().copied()))
    }
}

/// A named dataset paired with its arms.
#[derive(Debug, Clone)]
pub struct DatasetInput {
    pub name: String,
    pub dataset: Dataset,
    pub arms: Vec<Arm>,
}

/// Runs every cell of `grid` on one dataset.
pub fn run_experiment(
    dataset: &Dataset,
    arms: &[Arm],
    grid: &[SimConfig],
    master_seed: u64,
) -> Result<ExperimentSummary> {
    let input = DatasetInput {
        name: "dataset".to_string(),
        dataset: dataset.clone(),
        arms: arms.to_vec(),
    };
    run_study(std::slice::from_ref(&input), grid, master_seed)
}

/// Runs every cell of `grid` on every dataset and ranks the cells by their
/// mean AUC across datasets.
///
/// Repetitions execute on the current rayon pool; results do not depend on
/// the number of worker threads.
pub fn run_study(inputs: &[DatasetInput], grid: &[SimConfig], master_seed: u64) -> Result<ExperimentSummary> {
    if grid.is_empty() {
        return Err(Error::Empty("experiment grid"));
    }
    if inputs.is_empty() {
        return Err(Error::Empty("dataset list"));
    }
    for (index, cfg) in grid.iter().enumerate() {
        cfg.validate().map_err(|e| Error::Cell {
            index,
            label: cfg.label(),
            source: Box::new(e),
        })?;
    }

    let mut datasets = Vec::with_capacity(inputs.len());
    for input in inputs {
        datasets.push(run_dataset(input, grid, master_seed)?);
    }

    let overall_auc: Vec<f64> = (0..grid.len())
        .map(|i| mean(datasets.iter().map(|d| d.cells[i].mean_auc)))
        .collect();
    let benchmark_auc = mean(datasets.iter().map(|d| d.benchmark_auc));

    let mut values = overall_auc.clone();
    values.push(benchmark_auc);
    let ranks = rank_descending(&values);
    let mut ranking: Vec<RankEntry> = grid
        .iter()
        .enumerate()
        .map(|(i, cfg)| RankEntry {
            label: cfg.label(),
            cell: Some(i),
            mean_auc: overall_auc[i],
            rank: ranks[i],
        })
        .collect();
    ranking.push(RankEntry {
        label: "benchmark".to_string(),
        cell: None,
        mean_auc: benchmark_auc,
        rank: ranks[grid.len()],
    });

    Ok(ExperimentSummary {
        master_seed,
        grid: grid.to_vec(),
        datasets,
        overall_auc,
        benchmark_auc,
        ranking,
    })
}

fn run_dataset(input: &DatasetInput, grid: &[SimConfig], master_seed: u64) -> Result<DatasetSummary> {
    let dataset = &input.dataset;
    let table = ArmTable::align(dataset, &input.arms)?;
    let labels = dataset.labels();

    let arms: Vec<StaticArm> = (0..table.len())
        .map(|a| StaticArm {
            name: table.names()[a].clone(),
            auc: balanced_auc(table.arm_predictions(a), &labels),
            found_defects: true_positives(table.arm_predictions(a), dataset),
        })
        .collect();
    let benchmark_auc = benchmark(&arms.iter().map(|a| a.auc).collect::<Vec<_>>())?;
    let benchmark_found_defects = benchmark(&arms.iter().map(|a| a.found_defects as f64).collect::<Vec<_>>())?;

    let jobs: Vec<(usize, u32)> = grid
        .iter()
        .enumerate()
        .flat_map(|(i, cfg)| (0..cfg.repetitions).map(move |r| (i, r)))
        .collect();
    let results: Vec<Result<RunMetrics>> = jobs
        .par_iter()
        .map(|&(i, rep)| {
            let seed = derive_seed(master_seed, rep);
            let run = simulate(dataset, &table, &grid[i], seed, &mut StochasticOutcomes::new(seed)).map_err(|e| {
                Error::Cell {
                    index: i,
                    label: format!("{} on {}", grid[i].label(), input.name),
                    source: Box::new(e),
                }
            })?;
            Ok(RunMetrics::from_run(rep, &run))
        })
        .collect();

    let mut per_cell: Vec<Vec<RunMetrics>> = vec![Vec::new(); grid.len()];
    for (&(i, _), res) in jobs.iter().zip(results) {
        per_cell[i].push(res?);
    }

    let mut cells = Vec::with_capacity(grid.len());
    for (cfg, runs) in grid.iter().zip(per_cell) {
        let efforts = (0..table.len())
            .map(|a| static_effort(table.arm_predictions(a), dataset, cfg.effort_constant, cfg.effort_ratio))
            .collect::<Result<Vec<_>>>()?;
        cells.push(CellSummary::aggregate(*cfg, runs, efforts)?);
    }

    Ok(DatasetSummary {
        name: input.name.clone(),
        modules: dataset.len(),
        defective: dataset.defective_count(),
        arms,
        benchmark_auc,
        benchmark_found_defects,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Module, Policy};
    use proptest::prelude::*;

    #[test]
    fn benchmark_values() {
        let b = benchmark(&[0.662, 0.694, 0.696, 0.686]).unwrap();
        assert!((b - 0.6845).abs() < 1e-9);
        assert_eq!(benchmark(&[0.3]).unwrap(), 0.3);
        assert!(matches!(benchmark(&[]), Err(Error::Empty(_))));
    }

    #[test]
    fn rdiff_values() {
        assert_eq!(rdiff(2.5, 2.5).unwrap(), 0.0);
        assert!((rdiff(0.9, 1.0).unwrap() - 0.1).abs() < 1e-12);
        assert!((relative_change(104.0, 100.0).unwrap() - 0.04).abs() < 1e-12);
        assert!(matches!(rdiff(1.0, 0.0), Err(Error::ZeroBaseline)));
    }

    #[test]
    fn pearson_extremes_and_errors() {
        let xs = [1.0, 2.0, 4.0, 7.0];
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((pearson(&xs, &xs).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&xs, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert!(matches!(pearson(&xs, &[1.0; 4]), Err(Error::DegenerateVariance("ys"))));
        assert!(pearson(&[1.0], &[1.0]).is_err());
        assert!(pearson(&xs, &xs[..3]).is_err());
    }

    #[test]
    fn static_auc_truth_and_complement() {
        let ds = Dataset::new((0..10).map(|i| Module::new(format!("m{i}"), 1.0, i < 4)).collect()).unwrap();
        let truth = Arm::from_ordered("t", &ds, &ds.labels()).unwrap();
        let flipped: Vec<bool> = ds.labels().iter().map(|l| !l).collect();
        let comp = Arm::from_ordered("c", &ds, &flipped).unwrap();
        assert_eq!(static_auc(&truth, &ds).unwrap(), 1.0);
        assert_eq!(static_auc(&comp, &ds).unwrap(), 0.0);
        let mut partial = truth.clone();
        partial.predictions.remove("m3");
        assert!(static_auc(&partial, &ds).is_err());
    }

    #[test]
    fn ranks_are_ordinal() {
        assert_eq!(rank_descending(&[0.5, 0.9, 0.5, 0.1]), vec![2, 1, 3, 4]);
    }

    #[test]
    fn empty_grid_rejected() {
        let ds = Dataset::new(vec![Module::new("m", 1.0, true)]).unwrap();
        let arm = Arm::from_ordered("a", &ds, &[true]).unwrap();
        assert!(matches!(run_experiment(&ds, &[arm], &[], 1), Err(Error::Empty(_))));
    }

    #[test]
    fn failed_cell_carries_context() {
        let ds = Dataset::new(vec![Module::new("m", 1.0, true)]).unwrap();
        let arm = Arm::from_ordered("a", &ds, &[true]).unwrap();
        let bad = SimConfig {
            policy: Policy::EpsilonGreedy { epsilon: 2.0 },
            ..SimConfig::default()
        };
        let err = run_experiment(&ds, &[arm], &[SimConfig::default(), bad], 1).unwrap_err();
        assert!(matches!(err, Error::Cell { index: 1, .. }), "{err}");
    }

    proptest! {
        #[test]
        fn benchmark_matches_summation(xs in proptest::collection::vec(-1e3f64..1e3, 1..50)) {
            let mut acc = 0.0;
            for x in &xs {
                acc += x;
            }
            prop_assert!((benchmark(&xs).unwrap() - acc / xs.len() as f64).abs() < 1e-9);
        }

        #[test]
        fn rdiff_self_is_zero(x in prop_oneof![-1e6f64..-1e-6, 1e-6f64..1e6]) {
            prop_assert_eq!(rdiff(x, x).unwrap(), 0.0);
        }

        #[test]
        fn pearson_affine_invariant(
            pts in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..30),
            a in 0.1f64..10.0, b in -50.0f64..50.0, c in 0.1f64..10.0, d in -50.0f64..50.0,
        ) {
            let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
            if let Ok(r) = pearson(&xs, &ys) {
                let xs2: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
                let ys2: Vec<f64> = ys.iter().map(|y| c * y + d).collect();
                prop_assert!((pearson(&xs2, &ys2).unwrap() - r).abs() < 1e-9);
                prop_assert!((-1.0..=1.0).contains(&r));
            }
        }

        #[test]
        fn static_auc_matches_confusion_oracle(rows in proptest::collection::vec((any::<bool>(), any::<bool>()), 2..80)) {
            let ds = Dataset::new(rows.iter().enumerate().map(|(i, r)| Module::new(format!("m{i}"), 1.0, r.0)).collect()).unwrap();
            let arm = Arm::from_ordered("a", &ds, &rows.iter().map(|r| r.1).collect::<Vec<_>>()).unwrap();
            let (mut tp, mut fp, mut tn, mut fn_) = (0.0, 0.0, 0.0, 0.0);
            for &(label, pred) in &rows {
                match (pred, label) {
                    (true, true) => tp += 1.0,
                    (true, false) => fp += 1.0,
                    (false, false) => tn += 1.0,
                    (false, true) => fn_ += 1.0,
                }
            }
            let expected = match (tp + fn_ > 0.0, tn + fp > 0.0) {
                (true, true) => (tp / (tp + fn_) + tn / (tn + fp)) / 2.0,
                (true, false) => tp / (tp + fn_),
                (false, true) => tn / (tn + fp),
                (false, false) => 0.0,
            };
            prop_assert!((static_auc(&arm, &ds).unwrap() - expected).abs() < 1e-12);
        }
    }
}
