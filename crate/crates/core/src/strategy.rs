//! Test order, fixed before the bandit loop starts.

use std::cmp::Ordering;

use crate::error::Result;
use crate::types::{Arm, ArmTable, Dataset, Module, Strategy};

/// Orders module ids for testing.
///
/// Size ties are broken by ascending module id.
pub fn order_modules(dataset: &Dataset, arms: &[Arm], strategy: Strategy) -> Result<Vec<String>> {
    let table = ArmTable::align(dataset, arms)?;
    Ok(order_positions(dataset, &table, strategy)
        .into_iter()
        .map(|i| dataset.modules()[i].id.clone())
        .collect())
}

/// Same as [`order_modules`] but returns dataset positions.
pub fn order_positions(dataset: &Dataset, arms: &ArmTable, strategy: Strategy) -> Vec<usize> {
    let modules = dataset.modules();
    let mut order: Vec<usize> = (0..modules.len()).collect();
    match strategy {
        Strategy::Sf => order.sort_by(|&a, &b| ascending(&modules[a], &modules[b])),
        Strategy::Lf => order.sort_by(|&a, &b| descending(&modules[a], &modules[b])),
        Strategy::Pf => order.sort_by(|&a, &b| {
            // positives (by any arm) first
            arms.any_positive(b)
                .cmp(&arms.any_positive(a))
                .then_with(|| descending(&modules[a], &modules[b]))
        }),
    }
    order
}

fn ascending(a: &Module, b: &Module) -> Ordering {
    a.size.total_cmp(&b.size).then_with(|| a.id.cmp(&b.id))
}

fn descending(a: &Module, b: &Module) -> Ordering {
    b.size.total_cmp(&a.size).then_with(|| a.id.cmp(&b.id))
}
