//! Dataset and arm files, and the per-run metrics file.
//!
//! Dataset file: header `module_id,size,defective`, one row per module,
//! `defective` is `0` or `1`.
//!
//! Arm file: header `module_id,<arm>,<arm>,...`, one row per module, every
//! cell `0` or `1`.
//!
//! Per-run metrics file (`runs.csv`), columns in this order:
//!
//! ```text
//! dataset,cell,policy,epsilon,strategy,effort_ratio,effort_constant,type2_prob,
//! banp_fraction,repetition,seed,final_auc_vs_truth,total_effort,found_defects,
//! true_positives_raw,positive_predictions,overlooked_type1,overlooked_type2,warmup_steps,
//! arm_final_auc,arm_times_selected
//! ```
//!
//! `epsilon` is empty for UCB. The last two columns hold one value per arm,
//! separated by `;`, in arm-file column order. Floats use the shortest
//! representation that round-trips.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiment::ExperimentSummary;
use crate::types::{Arm, ArmTable, Dataset, Module, Policy, RunResult, SimConfig};

pub use crate::report::write_report;

pub const DATASET_HEADER: [&str; 3] = ["module_id", "size", "defective"];

pub const RUNS_HEADER: [&str; 21] = [
    "dataset",
    "cell",
    "policy",
    "epsilon",
    "strategy",
    "effort_ratio",
    "effort_constant",
    "type2_prob",
    "banp_fraction",
    "repetition",
    "seed",
    "final_auc_vs_truth",
    "total_effort",
    "found_defects",
    "true_positives_raw",
    "positive_predictions",
    "overlooked_type1",
    "overlooked_type2",
    "warmup_steps",
    "arm_final_auc",
    "arm_times_selected",
];

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => parse_err(path, line, format!("{other:?}")),
    }
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn parse_binary(path: &Path, line: u64, column: &str, raw: &str) -> Result<bool> {
    match raw {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(parse_err(
            path,
            line,
            format!("column `{column}`: expected 0 or 1, got `{other}`"),
        )),
    }
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().ne(DATASET_HEADER) {
        return Err(parse_err(
            path,
            1,
            format!(
                "expected header `{}`, got `{}`",
                DATASET_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }

    let mut modules = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != 3 {
            return Err(parse_err(path, line, format!("expected 3 fields, got {}", rec.len())));
        }
        let id = rec[0].to_string();
        if id.is_empty() {
            return Err(parse_err(path, line, "empty module id"));
        }
        let size: f64 = rec[1]
            .parse()
            .map_err(|_| parse_err(path, line, format!("invalid size `{}`", &rec[1])))?;
        if !(size > 0.0 && size.is_finite()) {
            return Err(parse_err(
                path,
                line,
                format!("module `{id}` has non-positive size {size}"),
            ));
        }
        let defective = parse_binary(path, line, "defective", &rec[2])?;
        if !seen.insert(id.clone()) {
            return Err(parse_err(path, line, format!("duplicate module id `{id}`")));
        }
        modules.push(Module { id, size, defective });
    }
    if modules.is_empty() {
        return Err(parse_err(path, 1, "no modules"));
    }
    Dataset::new(modules)
}

pub fn load_arms(path: impl AsRef<Path>) -> Result<Vec<Arm>> {
    let path = path.as_ref();
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.get(0) != Some("module_id") {
        return Err(parse_err(path, 1, "first column must be `module_id`"));
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    if names.is_empty() {
        return Err(parse_err(path, 1, "no arm columns"));
    }
    let mut unique = HashSet::new();
    for name in &names {
        if name.is_empty() {
            return Err(parse_err(path, 1, "empty arm name"));
        }
        if !unique.insert(name.as_str()) {
            return Err(parse_err(path, 1, format!("duplicate arm name `{name}`")));
        }
    }

    let mut predictions: Vec<BTreeMap<String, bool>> = vec![BTreeMap::new(); names.len()];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != names.len() + 1 {
            return Err(parse_err(
                path,
                line,
                format!("expected {} fields, got {}", names.len() + 1, rec.len()),
            ));
        }
        let id = &rec[0];
        if id.is_empty() {
            return Err(parse_err(path, line, "empty module id"));
        }
        if predictions[0].contains_key(id) {
            return Err(parse_err(path, line, format!("duplicate module id `{id}`")));
        }
        for (col, name) in names.iter().enumerate() {
            let p = parse_binary(path, line, name, &rec[col + 1])?;
            predictions[col].insert(id.to_string(), p);
        }
    }
    Ok(names
        .into_iter()
        .zip(predictions)
        .map(|(name, predictions)| Arm { name, predictions })
        .collect())
}

fn bit(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

pub fn write_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(DATASET_HEADER).map_err(|e| csv_err(path, e))?;
    for m in dataset.modules() {
        w.write_record([m.id.as_str(), &m.size.to_string(), bit(m.defective)])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes arms in the wide format, rows in dataset order.
pub fn write_arms(dataset: &Dataset, arms: &[Arm], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let table = ArmTable::align(dataset, arms)?;
    let mut w = writer(path)?;
    let mut header = vec!["module_id".to_string()];
    header.extend(table.names().iter().cloned());
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for (pos, m) in dataset.modules().iter().enumerate() {
        let mut row = vec![m.id.as_str()];
        row.extend((0..table.len()).map(|a| bit(table.prediction(a, pos))));
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

#[allow(clippy::too_many_arguments)]
fn run_row(
    dataset: &str,
    cell: usize,
    cfg: &SimConfig,
    repetition: u32,
    seed: u64,
    auc: f64,
    effort: f64,
    found: u64,
    raw_tp: u64,
    positives: u64,
    type1: u64,
    type2: u64,
    warmup: usize,
    arm_auc: &[f64],
    arm_selected: &[u64],
) -> Vec<String> {
    let (policy, epsilon) = match cfg.policy {
        Policy::EpsilonGreedy { epsilon } => ("egreedy", epsilon.to_string()),
        Policy::Ucb => ("ucb", String::new()),
    };
    vec![
        dataset.to_string(),
        cell.to_string(),
        policy.to_string(),
        epsilon,
        cfg.strategy.as_str().to_string(),
        cfg.effort_ratio.to_string(),
        cfg.effort_constant.to_string(),
        cfg.type2_prob.to_string(),
        cfg.banp_fraction.to_string(),
        repetition.to_string(),
        seed.to_string(),
        auc.to_string(),
        effort.to_string(),
        found.to_string(),
        raw_tp.to_string(),
        positives.to_string(),
        type1.to_string(),
        type2.to_string(),
        warmup.to_string(),
        join(arm_auc),
        join(arm_selected),
    ]
}

/// Writes every run of an experiment, ordered by dataset, cell, repetition.
pub fn write_runs_csv(summary: &ExperimentSummary, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(RUNS_HEADER).map_err(|e| csv_err(path, e))?;
    for ds in &summary.datasets {
        for (i, cell) in ds.cells.iter().enumerate() {
            for r in &cell.runs {
                let row = run_row(
                    &ds.name,
                    i,
                    &cell.config,
                    r.repetition,
                    r.seed,
                    r.final_auc_vs_truth,
                    r.total_effort,
                    r.found_defects,
                    r.true_positives_raw,
                    r.positive_predictions,
                    r.overlooked_type1,
                    r.overlooked_type2,
                    r.warmup_steps,
                    &r.per_arm_final_auc,
                    &r.per_arm_times_selected,
                );
                w.write_record(&row).map_err(|e| csv_err(path, e))?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes a single run in the `runs.csv` format.
pub fn write_run_csv(dataset: &str, config: &SimConfig, run: &RunResult, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(RUNS_HEADER).map_err(|e| csv_err(path, e))?;
    let row = run_row(
        dataset,
        0,
        config,
        0,
        run.seed,
        run.final_auc_vs_truth,
        run.total_effort,
        run.found_defects,
        run.true_positives_raw,
        run.positive_predictions,
        run.defects_overlooked_type1,
        run.defects_overlooked_type2,
        run.warmup_steps,
        &run.per_arm_final_auc,
        &run.per_arm_times_selected,
    );
    w.write_record(&row).map_err(|e| csv_err(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes the step log of one run, one row per tested module.
pub fn write_steps_csv(run: &RunResult, arm_names: &[String], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    let mut header: Vec<String> = [
        "step",
        "module_id",
        "selected_arm",
        "arm_prediction",
        "effective_prediction",
        "observed_outcome",
        "overlook",
        "true_label",
        "effort",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(arm_names.iter().map(|n| format!("auc_{n}")));
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for s in &run.steps {
        let mut row = vec![
            s.step_index.to_string(),
            s.module_id.clone(),
            s.selected_arm
                .arm()
                .map(|a| arm_names.get(a).cloned().unwrap_or_else(|| a.to_string()))
                .unwrap_or_else(|| "--".to_string()),
            s.arm_prediction.map(|p| bit(p).to_string()).unwrap_or_default(),
            bit(s.effective_prediction).to_string(),
            bit(s.observed_outcome).to_string(),
            s.overlook.as_str().to_string(),
            bit(s.true_label).to_string(),
            s.effort_charged.to_string(),
        ];
        row.extend(s.per_arm_auc_after.iter().map(|a| a.to_string()));
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn write_text(path: &Path, contents: &str) -> Result<()> {
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn loads_small_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "d.csv", "module_id,size,defective\nm1,100,1\nm2,50,0\n");
        let ds = load_dataset(&p).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.modules()[0], Module::new("m1", 100.0, true));
    }

    #[test]
    fn duplicate_id_names_id_and_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "d.csv", "module_id,size,defective\nm1,100,1\nm2,5,0\nm1,7,0\n");
        let err = load_dataset(&p).unwrap_err();
        match &err {
            Error::Parse { line, message, .. } => {
                assert_eq!(*line, 4);
                assert!(message.contains("m1"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dataset_rejects_bad_rows() {
        let dir = tempfile::tempdir().unwrap();
        for body in [
            "module_id,size,defective\nm1,0,1\n",
            "module_id,size,defective\nm1,-3,1\n",
            "module_id,size,defective\nm1,abc,1\n",
            "module_id,size,defective\nm1,10,2\n",
            "module_id,size,defective\nm1,10\n",
            "id,size,defective\nm1,10,1\n",
            "module_id,size,defective\n",
        ] {
            let p = write(&dir, "bad.csv", body);
            assert!(matches!(load_dataset(&p), Err(Error::Parse { .. })), "{body}");
        }
        assert!(matches!(
            load_dataset(dir.path().join("missing.csv")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn loads_four_arms() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "a.csv",
            "module_id,bagging,rf,stacking,xgboost\nm1,1,0,1,1\nm2,0,0,0,1\n",
        );
        let arms = load_arms(&p).unwrap();
        assert_eq!(arms.len(), 4);
        assert_eq!(arms[3].name, "xgboost");
        assert!(arms[3].predictions["m2"]);
        assert!(!arms[1].predictions["m1"]);
    }

    #[test]
    fn single_arm_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "module_id,only\nm1,1\n");
        assert_eq!(load_arms(&p).unwrap().len(), 1);
    }

    #[test]
    fn non_binary_cell_reports_coordinates() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "module_id,a,b\nm1,1,0\nm2,0,2\n");
        match load_arms(&p).unwrap_err() {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("`b`") && message.contains("`2`"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn arm_file_structure_errors() {
        let dir = tempfile::tempdir().unwrap();
        for body in [
            "module_id\nm1\n",
            "id,a\nm1,1\n",
            "module_id,a,a\nm1,1,0\n",
            "module_id,a\nm1,1\nm1,0\n",
        ] {
            let p = write(&dir, "bad.csv", body);
            assert!(load_arms(&p).is_err(), "{body}");
        }
    }

    #[test]
    fn arm_ids_checked_when_paired() {
        let dir = tempfile::tempdir().unwrap();
        let d = write(&dir, "d.csv", "module_id,size,defective\nm1,100,1\nm2,50,0\n");
        let a = write(&dir, "a.csv", "module_id,x\nm1,1\nm3,0\n");
        let ds = load_dataset(&d).unwrap();
        let arms = load_arms(&a).unwrap();
        assert!(matches!(ArmTable::align(&ds, &arms), Err(Error::Coverage { .. })));
    }
}
