use std::collections::{HashMap, HashSet};

use crate::model::ItemId;

/// 1-based position of each test item in `list`, `None` when absent.
pub fn positions_of(list: &[ItemId], test: &HashSet<ItemId>) -> Vec<Option<usize>> {
    let pos: HashMap<ItemId, usize> = list
        .iter()
        .enumerate()
        .filter(|(_, i)| test.contains(i))
        .map(|(p, &i)| (i, p + 1))
        .collect();
    let mut items: Vec<ItemId> = test.iter().copied().collect();
    items.sort_unstable();
    items.into_iter().map(|i| pos.get(&i).copied()).collect()
}

/// Percentile of one test item: `position / list length`, or 1 when the
/// item is missing from the list.
pub fn item_percentile(position: Option<usize>, list_len: usize) -> f64 {
    match position {
        Some(p) if list_len > 0 => p as f64 / list_len as f64,
        _ => 1.0,
    }
}

/// Mean percentile of the test items in `list`; `None` without test items.
pub fn percentile_score(list: &[ItemId], test: &HashSet<ItemId>) -> Option<f64> {
    if test.is_empty() {
        return None;
    }
    let ps = positions_of(list, test);
    Some(ps.iter().map(|&p| item_percentile(p, list.len())).sum::<f64>() / ps.len() as f64)
}

/// Fraction of test items found among the first `k` of `list`.
pub fn recall_at_k(list: &[ItemId], test: &HashSet<ItemId>, k: usize) -> Option<f64> {
    if test.is_empty() || k == 0 {
        return None;
    }
    let hits = list.iter().take(k).filter(|i| test.contains(i)).count();
    Some(hits as f64 / test.len() as f64)
}
