//! Report emission: per-run metrics, the recorded grid, and markdown tables.
//!
//! Relative comparisons are printed as `change = target / baseline - 1`, so a
//! positive value means the target is larger. The literal relative difference
//! `RDIFF = 1 - target / baseline` is its negation and appears next to it
//! where space allows.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{pearson, rank_descending, relative_change, DatasetSummary, ExperimentSummary};
use crate::io::{write_runs_csv, write_text};
use crate::types::{Policy, SimConfig, Strategy};

pub const RUNS_FILE: &str = "runs.csv";
pub const GRID_FILE: &str = "grid.toml";
pub const SUMMARY_FILE: &str = "summary.json";

/// The configuration grid and master seed, as recorded next to a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRecord {
    pub master_seed: u64,
    pub cells: Vec<SimConfig>,
}

impl GridRecord {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Writes the full report for `summary` into `out_dir` and returns the paths
/// written.
pub fn write_report(summary: &ExperimentSummary, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    if summary.grid.is_empty() {
        return Err(Error::Empty("experiment grid"));
    }
    let out = out_dir.as_ref();
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut written = Vec::new();

    let runs = out.join(RUNS_FILE);
    write_runs_csv(summary, &runs)?;
    written.push(runs);

    let grid = GridRecord {
        master_seed: summary.master_seed,
        cells: summary.grid.clone(),
    };
    let grid_text = toml::to_string(&grid).map_err(|e| Error::Config(e.to_string()))?;
    written.push(emit(out, GRID_FILE, &grid_text)?);

    let json = serde_json::to_string_pretty(summary).map_err(|e| Error::Config(e.to_string()))?;
    written.push(emit(out, SUMMARY_FILE, &json)?);

    written.push(emit(out, "ranking.md", &ranking_table(summary))?);
    written.push(emit(out, "strategy_auc.md", &strategy_auc_table(summary))?);
    written.push(emit(out, "strategy_effort.md", &strategy_effort_table(summary)?)?);
    written.push(emit(out, "method_auc.md", &method_auc_table(summary))?);
    written.push(emit(out, "effort_vs_best_arm.md", &effort_vs_best_table(summary)?)?);
    written.push(emit(out, "found_defects.md", &found_defects_table(summary)?)?);
    written.push(emit(out, "correlation.md", &correlation_table(summary))?);
    Ok(written)
}

fn emit(dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
    let p = dir.join(name);
    write_text(&p, body)?;
    Ok(p)
}

fn md_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "| {} |", header.join(" | "));
    let _ = writeln!(s, "|{}", "---|".repeat(header.len()));
    for r in rows {
        let _ = writeln!(s, "| {} |", r.join(" | "));
    }
    s
}

fn pct(x: f64) -> String {
    format!("{:.1}", x * 100.0)
}

fn distinct<T: PartialEq + Copy>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut out = Vec::new();
    for i in items {
        if !out.contains(&i) {
            out.push(i);
        }
    }
    out
}

fn policies(summary: &ExperimentSummary) -> Vec<Policy> {
    distinct(summary.grid.iter().map(|c| c.policy))
}

fn ratios(summary: &ExperimentSummary) -> Vec<f64> {
    let mut r = distinct(summary.grid.iter().map(|c| c.effort_ratio));
    r.sort_by(f64::total_cmp);
    r
}

fn strategies(summary: &ExperimentSummary) -> Vec<Strategy> {
    Strategy::ALL
        .into_iter()
        .filter(|s| summary.grid.iter().any(|c| c.strategy == *s))
        .collect()
}

fn ranking_table(summary: &ExperimentSummary) -> String {
    let mut rows: Vec<&crate::experiment::RankEntry> = summary.ranking.iter().collect();
    rows.sort_by_key(|r| r.rank);
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.rank.to_string(), r.label.clone(), format!("{:.3}", r.mean_auc)])
        .collect();
    format!(
        "# Ranking of mean AUC over {} dataset(s)\n\n{}",
        summary.datasets.len(),
        md_table(&["rank".into(), "cell".into(), "mean AUC".into()], &body)
    )
}

/// Policies as rows, strategy x ratio as columns, `rank (AUC)` per cell.
fn strategy_auc_table(summary: &ExperimentSummary) -> String {
    let strategies = strategies(summary);
    let ratios = ratios(summary);
    let mut header = vec!["policy".to_string()];
    for s in &strategies {
        for r in &ratios {
            header.push(format!("{s} {r}"));
        }
    }
    let rank_of = |i: usize| summary.ranking.iter().find(|e| e.cell == Some(i)).map(|e| e.rank);
    let rows: Vec<Vec<String>> = policies(summary)
        .into_iter()
        .map(|p| {
            let mut row = vec![p.to_string()];
            for s in &strategies {
                for r in &ratios {
                    let cell = summary
                        .grid
                        .iter()
                        .position(|c| c.policy == p && c.strategy == *s && c.effort_ratio == *r);
                    row.push(match cell {
                        Some(i) => format!("{} ({:.3})", rank_of(i).unwrap_or(0), summary.overall_auc[i]),
                        None => "-".into(),
                    });
                }
            }
            row
        })
        .collect();
    let bench_rank = summary
        .ranking
        .iter()
        .find(|e| e.cell.is_none())
        .map(|e| e.rank)
        .unwrap_or(0);
    format!(
        "# Mean AUC of test strategies\n\nCells show `rank (mean AUC)`; ranks include the benchmark.\n\n{}\nBenchmark (mean AUC of the arms): rank {} ({:.3})\n",
        md_table(&header, &rows),
        bench_rank,
        summary.benchmark_auc
    )
}

/// Effort change of every strategy against SF, averaged over policies and datasets.
fn strategy_effort_table(summary: &ExperimentSummary) -> Result<String> {
    let ratios = ratios(summary);
    let mut header = vec!["strategy".to_string()];
    header.extend(ratios.iter().map(|r| format!("{r}")));
    let mut rows = Vec::new();
    for s in strategies(summary).into_iter().filter(|s| *s != Strategy::Sf) {
        let mut row = vec![s.to_string()];
        for &r in &ratios {
            row.push(match summary.strategy_effort_change(s, Strategy::Sf, r)? {
                Some(c) => format!("{} (RDIFF {})", pct(c), pct(-c)),
                None => "-".into(),
            });
        }
        rows.push(row);
    }
    Ok(format!(
        "# Effort change against SF (%)\n\nchange = effort(target) / effort(SF) - 1, RDIFF = 1 - effort(target) / effort(SF).\n\n{}",
        md_table(&header, &rows)
    ))
}

/// Rows are grid cells followed by arms; columns are datasets.
fn method_auc_table(summary: &ExperimentSummary) -> String {
    let mut labels: Vec<String> = summary.grid.iter().map(|c| format!("BA {}", c.label())).collect();
    let arm_names: Vec<String> = {
        let mut names: Vec<String> = Vec::new();
        for d in &summary.datasets {
            for a in &d.arms {
                if !names.contains(&a.name) {
                    names.push(a.name.clone());
                }
            }
        }
        names
    };
    labels.extend(arm_names.iter().cloned());
    let cells = summary.grid.len();

    // per dataset: auc per row (None when an arm is absent)
    let values: Vec<Vec<Option<f64>>> = summary
        .datasets
        .iter()
        .map(|d| {
            let mut v: Vec<Option<f64>> = d.cells.iter().map(|c| Some(c.mean_auc)).collect();
            v.extend(
                arm_names
                    .iter()
                    .map(|n| d.arms.iter().find(|a| &a.name == n).map(|a| a.auc)),
            );
            v
        })
        .collect();
    let ranks: Vec<Vec<Option<usize>>> = values
        .iter()
        .map(|v| {
            let present: Vec<usize> = (0..v.len()).filter(|&i| v[i].is_some()).collect();
            let r = rank_descending(&present.iter().map(|&i| v[i].unwrap()).collect::<Vec<_>>());
            let mut out = vec![None; v.len()];
            for (k, &i) in present.iter().enumerate() {
                out[i] = Some(r[k]);
            }
            out
        })
        .collect();

    let avg_auc: Vec<f64> = (0..labels.len())
        .map(|i| {
            let xs: Vec<f64> = values.iter().filter_map(|v| v[i]).collect();
            xs.iter().sum::<f64>() / xs.len().max(1) as f64
        })
        .collect();
    let avg_auc_rank = rank_descending(&avg_auc);

    let mut header = vec!["method".to_string()];
    header.extend(summary.datasets.iter().map(|d| d.name.clone()));
    header.push("Avg-AUC".into());
    header.push("Avg-rank".into());
    let rows: Vec<Vec<String>> = (0..labels.len())
        .map(|i| {
            let mut row = vec![labels[i].clone()];
            for (v, r) in values.iter().zip(&ranks) {
                row.push(match (v[i], r[i]) {
                    (Some(a), Some(k)) => format!("{k} ({a:.3})"),
                    _ => "-".into(),
                });
            }
            row.push(format!("{} ({:.3})", avg_auc_rank[i], avg_auc[i]));
            let rs: Vec<f64> = ranks.iter().filter_map(|r| r[i]).map(|k| k as f64).collect();
            row.push(format!("{:.1}", rs.iter().sum::<f64>() / rs.len().max(1) as f64));
            row
        })
        .collect();
    format!(
        "# AUC and rank of each method\n\n{} bandit cells and {} arms ranked per dataset.\n\n{}",
        cells,
        arm_names.len(),
        md_table(&header, &rows)
    )
}

fn best_arm(d: &DatasetSummary) -> usize {
    let aucs: Vec<f64> = d.arms.iter().map(|a| a.auc).collect();
    rank_descending(&aucs).iter().position(|&r| r == 1).unwrap_or(0)
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Effort of every cell against the dataset's highest-AUC arm.
fn effort_vs_best_table(summary: &ExperimentSummary) -> Result<String> {
    let mut header = vec!["cell".to_string()];
    header.extend(summary.datasets.iter().map(|d| d.name.clone()));
    header.push("Avg.".into());
    header.push("Median".into());

    let mut baselines = String::new();
    for d in &summary.datasets {
        let best = best_arm(d);
        let _ = writeln!(
            baselines,
            "- {}: `{}` (AUC {:.3})",
            d.name, d.arms[best].name, d.arms[best].auc
        );
    }

    let mut rows = Vec::new();
    for (i, cfg) in summary.grid.iter().enumerate() {
        let mut row = vec![cfg.label()];
        let mut changes = Vec::new();
        for d in &summary.datasets {
            let best = best_arm(d);
            let cell = &d.cells[i];
            let base = cell_arm_effort(d, i, best);
            let c = relative_change(cell.mean_effort, base)?;
            changes.push(c);
            row.push(pct(c));
        }
        let avg = changes.iter().sum::<f64>() / changes.len() as f64;
        row.push(pct(avg));
        row.push(pct(median(&mut changes)));
        rows.push(row);
    }
    Ok(format!(
        "# Effort change against the best arm (%)\n\nchange = effort(BA) / effort(best arm) - 1. Best arm per dataset:\n\n{}\n{}",
        baselines,
        md_table(&header, &rows)
    ))
}

/// Effort of testing every module under one arm with the cell's parameters.
fn cell_arm_effort(d: &DatasetSummary, cell: usize, arm: usize) -> f64 {
    d.cells[cell].arm_efforts.get(arm).copied().unwrap_or(f64::NAN)
}

/// Found defects of every cell against the mean of the arms.
fn found_defects_table(summary: &ExperimentSummary) -> Result<String> {
    let mut s = String::from("# Found defects\n\n## Arms\n\n");
    let arm_names: Vec<String> = distinct_names(summary);
    let mut header = vec!["dataset (actual defects)".to_string()];
    header.extend(arm_names.iter().cloned());
    header.push("Avg. arms".into());
    let rows: Vec<Vec<String>> = summary
        .datasets
        .iter()
        .map(|d| {
            let mut row = vec![format!("{} ({})", d.name, d.defective)];
            for n in &arm_names {
                row.push(
                    d.arms
                        .iter()
                        .find(|a| &a.name == n)
                        .map(|a| a.found_defects.to_string())
                        .unwrap_or_else(|| "-".into()),
                );
            }
            row.push(format!("{:.1}", d.benchmark_found_defects));
            row
        })
        .collect();
    s.push_str(&md_table(&header, &rows));

    s.push_str("\n## Bandit cells\n\nCells show `mean found (change % against Avg. arms)`; found defects exclude overlooked ones.\n\n");
    let mut header = vec!["cell".to_string()];
    header.extend(summary.datasets.iter().map(|d| d.name.clone()));
    header.push("Avg. change".into());
    let mut rows = Vec::new();
    for (i, cfg) in summary.grid.iter().enumerate() {
        let mut row = vec![cfg.label()];
        let mut changes = Vec::new();
        for d in &summary.datasets {
            let found = d.cells[i].mean_found_defects;
            match relative_change(found, d.benchmark_found_defects) {
                Ok(c) => {
                    changes.push(c);
                    row.push(format!("{found:.1} ({})", pct(c)));
                }
                Err(Error::ZeroBaseline) => row.push(format!("{found:.1} (-)")),
                Err(e) => return Err(e),
            }
        }
        row.push(if changes.is_empty() {
            "-".into()
        } else {
            pct(changes.iter().sum::<f64>() / changes.len() as f64)
        });
        rows.push(row);
    }
    s.push_str(&md_table(&header, &rows));
    Ok(s)
}

fn distinct_names(summary: &ExperimentSummary) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for d in &summary.datasets {
        for a in &d.arms {
            if !names.contains(&a.name) {
                names.push(a.name.clone());
            }
        }
    }
    names
}

/// Pearson correlation between mean effort and mean AUC across cells.
fn correlation_table(summary: &ExperimentSummary) -> String {
    let rows: Vec<Vec<String>> = summary
        .datasets
        .iter()
        .map(|d| {
            let effort: Vec<f64> = d.cells.iter().map(|c| c.mean_effort).collect();
            let auc: Vec<f64> = d.cells.iter().map(|c| c.mean_auc).collect();
            let positives: Vec<f64> = d.cells.iter().map(|c| c.mean_positive_predictions).collect();
            let fmt = |r: Result<f64>| r.map(|v| format!("{v:.2}")).unwrap_or_else(|_| "-".into());
            vec![
                d.name.clone(),
                fmt(pearson(&effort, &auc)),
                fmt(pearson(&auc, &positives)),
            ]
        })
        .collect();
    format!(
        "# Correlation across cells\n\n{}",
        md_table(
            &[
                "dataset".into(),
                "effort vs AUC".into(),
                "AUC vs positive predictions".into()
            ],
            &rows
        )
    )
}
