#![allow(dead_code)]

use defect_bandit::{Arm, Dataset, Module};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Quality of a synthetic arm: detection rate on defective modules and false
/// alarm rate on clean ones, separately for small and large modules.
#[derive(Debug, Clone, Copy)]
pub struct ArmQuality {
    pub tpr_small: f64,
    pub fpr_small: f64,
    pub tpr_large: f64,
    pub fpr_large: f64,
}

impl ArmQuality {
    pub const fn uniform(tpr: f64, fpr: f64) -> Self {
        Self {
            tpr_small: tpr,
            fpr_small: fpr,
            tpr_large: tpr,
            fpr_large: fpr,
        }
    }
}

/// Modules with log-normal-like sizes; defect probability grows with size.
pub fn synthetic_dataset(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sizes: Vec<f64> = (0..n)
        .map(|_| {
            // Box-Muller
            let (u1, u2): (f64, f64) = (rng.gen_range(1e-12..1.0), rng.gen());
            let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
            (5.0 + z).exp().round().max(1.0)
        })
        .collect();
    sizes.sort_by(f64::total_cmp);
    let modules = sizes
        .iter()
        .enumerate()
        .map(|(rank, &size)| {
            let p = 0.05 + 0.35 * rank as f64 / n as f64;
            Module::new(format!("m{rank:04}"), size, rng.gen_bool(p))
        })
        .collect::<Vec<_>>();
    // shuffle ids away from size order
    let mut modules = modules;
    for i in (1..modules.len()).rev() {
        let j = rng.gen_range(0..=i);
        modules.swap(i, j);
    }
    Dataset::new(modules).unwrap()
}

pub fn synthetic_arms(ds: &Dataset, qualities: &[ArmQuality], seed: u64) -> Vec<Arm> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sizes: Vec<f64> = ds.modules().iter().map(|m| m.size).collect();
    sizes.sort_by(f64::total_cmp);
    let median = sizes[sizes.len() / 2];
    qualities
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let preds: Vec<bool> = ds
                .modules()
                .iter()
                .map(|m| {
                    let large = m.size >= median;
                    let p = match (m.defective, large) {
                        (true, false) => q.tpr_small,
                        (true, true) => q.tpr_large,
                        (false, false) => q.fpr_small,
                        (false, true) => q.fpr_large,
                    };
                    rng.gen_bool(p)
                })
                .collect();
            Arm::from_ordered(format!("arm{i}"), ds, &preds).unwrap()
        })
        .collect()
}

/// Ground-truth arm and constant-negative arm.
pub fn truth_and_constant(ds: &Dataset) -> Vec<Arm> {
    vec![
        Arm::from_ordered("truth", ds, &ds.labels()).unwrap(),
        Arm::from_ordered("never", ds, &vec![false; ds.len()]).unwrap(),
    ]
}

/// Dataset of `n` modules where exactly `defective` are defective.
pub fn dataset_with_defects(n: usize, defective: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<bool> = (0..n).map(|i| i < defective).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        labels.swap(i, j);
    }
    Dataset::new(
        labels
            .into_iter()
            .enumerate()
            .map(|(i, d)| Module::new(format!("m{i:04}"), rng.gen_range(10.0..2000.0f64).round(), d))
            .collect(),
    )
    .unwrap()
}
