use serde::{Deserialize, Serialize};

use super::graph::ComparisonGraph;
use super::AggregationConfig;
use crate::model::ItemId;

/// Components popped from the comparison graph, best first.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SccExtraction {
    /// Popularity-filtered components in topological order of the graph;
    /// items inside a component are sorted by id.
    pub components: Vec<Vec<ItemId>>,
    /// Items popped so far (after filtering).
    pub count: usize,
    /// Largest filtered component popped.
    pub beta_max: usize,
    /// Edge inspections plus vertex visits; linear in `|V| + |E|`.
    pub operations: u64,
}

const UNVISITED: u32 = u32::MAX;

/// Pops strongly connected components from the best end of the preference
/// order until at least `config.k` popular-enough items have been seen.
///
/// Tarjan's algorithm emits components in reverse topological order of the
/// graph it walks, so it runs on the transpose: the first component out is a
/// source of the preference graph. Items below `config.theta_p` are dropped
/// from each component as it is popped. Vertices and neighbours are visited
/// by popularity (descending) then id.
pub fn tarjan_topk(g: &ComparisonGraph, config: &AggregationConfig, popularity: &[f64]) -> SccExtraction {
    let n = g.n_nodes();
    assert_eq!(popularity.len(), n, "popularity must cover every item");
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_by(|&a, &b| {
        popularity[b as usize]
            .total_cmp(&popularity[a as usize])
            .then(a.cmp(&b))
    });
    let mut rank = vec![0u32; n];
    for (r, &v) in order.iter().enumerate() {
        rank[v as usize] = r as u32;
    }

    // Transpose: y -> x for every x -> y.
    let mut transpose: Vec<Vec<u32>> = vec![Vec::new(); n];
    for x in 0..n {
        for &(y, _) in g.edges(ItemId::from(x)) {
            transpose[y as usize].push(x as u32);
        }
    }
    for adj in &mut transpose {
        adj.sort_unstable_by_key(|&v| rank[v as usize]);
    }

    let mut out = SccExtraction::default();
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<u32> = Vec::new();
    let mut calls: Vec<(u32, usize)> = Vec::new();
    let mut next_index = 0u32;

    for &root in &order {
        if index[root as usize] != UNVISITED {
            continue;
        }
        index[root as usize] = next_index;
        low[root as usize] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root as usize] = true;
        calls.push((root, 0));
        out.operations += 1;

        while let Some(frame) = calls.last_mut() {
            let v = frame.0 as usize;
            if let Some(&w) = transpose[v].get(frame.1) {
                frame.1 += 1;
                out.operations += 1;
                let wi = w as usize;
                if index[wi] == UNVISITED {
                    index[wi] = next_index;
                    low[wi] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[wi] = true;
                    calls.push((w, 0));
                    out.operations += 1;
                } else if on_stack[wi] {
                    low[v] = low[v].min(index[wi]);
                }
                continue;
            }
            calls.pop();
            if let Some(&(parent, _)) = calls.last() {
                low[parent as usize] = low[parent as usize].min(low[v]);
            }
            if low[v] != index[v] {
                continue;
            }
            let mut component = Vec::new();
            loop {
                let u = stack.pop().expect("tarjan stack underflow");
                on_stack[u as usize] = false;
                out.operations += 1;
                if popularity[u as usize] >= config.theta_p {
                    component.push(ItemId(u));
                }
                if u as usize == v {
                    break;
                }
            }
            if component.is_empty() {
                continue;
            }
            component.sort_unstable();
            out.count += component.len();
            out.beta_max = out.beta_max.max(component.len());
            out.components.push(component);
            if out.count >= config.k {
                return out;
            }
        }
    }
    out
}
