use super::graph::ComparisonGraph;
use crate::error::{Error, Result};
use crate::model::{ItemId, PartialRanking};

/// Largest component the exact solver accepts (2^s subsets of work).
pub const EXACT_KEMENY_CAP: usize = 20;

/// Total weight of edges that point from a later item to an earlier one.
pub fn feedback_cost(g: &ComparisonGraph, order: &[ItemId]) -> u64 {
    let mut cost = 0;
    for (i, &early) in order.iter().enumerate() {
        for &late in &order[i + 1..] {
            cost += u64::from(g.weight(late, early));
        }
    }
    cost
}

/// Orders `nodes` to minimize the weight of backward edges among them
/// (weighted minimum feedback arc set), by dynamic programming over subsets.
///
/// Among optimal orders the lexicographically smallest id sequence wins.
pub fn exact_kemeny(g: &ComparisonGraph, nodes: &[ItemId]) -> Result<PartialRanking> {
    let mut nodes = nodes.to_vec();
    nodes.sort_unstable();
    nodes.dedup();
    let s = nodes.len();
    if s > EXACT_KEMENY_CAP {
        return Err(Error::Capacity(format!(
            "exact Kemeny limited to {EXACT_KEMENY_CAP} items, component has {s}"
        )));
    }
    if s <= 1 {
        return PartialRanking::new(nodes);
    }
    // incoming[v][u] = weight of u -> v
    let incoming: Vec<Vec<u64>> = nodes
        .iter()
        .map(|&v| nodes.iter().map(|&u| u64::from(g.weight(u, v))).collect())
        .collect();
    let cost_first = |v: usize, mask: u32| -> u64 {
        let mut rest = mask & !(1 << v);
        let mut c = 0;
        while rest != 0 {
            let u = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            c += incoming[v][u];
        }
        c
    };

    // best[mask]: cheapest ordering of the items in `mask`, placed after the rest.
    let full: u32 = if s == 32 { u32::MAX } else { (1u32 << s) - 1 };
    let mut best = vec![0u64; 1usize << s];
    for mask in 1..=full {
        let mut m = mask;
        let mut b = u64::MAX;
        while m != 0 {
            let v = m.trailing_zeros() as usize;
            m &= m - 1;
            b = b.min(cost_first(v, mask) + best[(mask & !(1 << v)) as usize]);
        }
        best[mask as usize] = b;
    }

    let mut order = Vec::with_capacity(s);
    let mut mask = full;
    while mask != 0 {
        let target = best[mask as usize];
        let v = (0..s)
            .find(|&v| {
                mask >> v & 1 == 1
                    && cost_first(v, mask) + best[(mask & !(1 << v)) as usize] == target
            })
            .expect("optimal choice exists");
        order.push(nodes[v]);
        mask &= !(1 << v);
    }
    PartialRanking::new(order)
}
