use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{ItemId, PairwiseComparisonMatrix, RatingRecord};

/// Net-preference graph of a group: edge `x -> y` with weight
/// `sum M_xy - sum M_yx` whenever that difference is positive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComparisonGraph {
    out: Vec<Vec<(u32, u32)>>,
    /// Raw `sum_y sum_members M_xy` per item, kept for Borda.
    wins: Vec<u64>,
}

impl ComparisonGraph {
    /// Builds a graph from explicit weighted edges. Opposite edges are netted
    /// against each other; `wins` is the total outgoing weight before netting.
    pub fn from_edges(n: usize, edges: &[(ItemId, ItemId, u32)]) -> Result<Self> {
        let mut raw: HashMap<(usize, usize), u64> = HashMap::new();
        let mut wins = vec![0u64; n];
        for &(x, y, w) in edges {
            let (x, y) = (x.index(), y.index());
            if x >= n || y >= n || x == y {
                return Err(Error::Domain(format!("invalid edge {x}->{y} for {n} nodes")));
            }
            *raw.entry((x, y)).or_default() += u64::from(w);
            wins[x] += u64::from(w);
        }
        let mut out = vec![Vec::new(); n];
        for (&(x, y), &w) in &raw {
            let back = raw.get(&(y, x)).copied().unwrap_or(0);
            if w > back {
                out[x].push((y as u32, (w - back) as u32));
            }
        }
        for adj in &mut out {
            adj.sort_unstable();
        }
        Ok(ComparisonGraph { out, wins })
    }

    pub fn n_nodes(&self) -> usize {
        self.out.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    /// Outgoing `(target, weight)` pairs of `x`, sorted by target.
    pub fn edges(&self, x: ItemId) -> &[(u32, u32)] {
        &self.out[x.index()]
    }

    pub fn weight(&self, x: ItemId, y: ItemId) -> u32 {
        let adj = &self.out[x.index()];
        adj.binary_search_by_key(&y.0, |&(t, _)| t)
            .map(|i| adj[i].1)
            .unwrap_or(0)
    }

    pub fn wins(&self) -> &[u64] {
        &self.wins
    }

    /// `sum_y (M_xy - M_yx)` per item: net out-weight minus net in-weight.
    pub fn net_scores(&self) -> Vec<i64> {
        let mut s = vec![0i64; self.n_nodes()];
        for (x, adj) in self.out.iter().enumerate() {
            for &(y, w) in adj {
                s[x] += i64::from(w);
                s[y as usize] -= i64::from(w);
            }
        }
        s
    }
}

/// Sums the members' (cleaned) matrices and keeps the positive net differences.
pub fn build_comparison_graph(matrices: &[PairwiseComparisonMatrix]) -> Result<ComparisonGraph> {
    let Some(first) = matrices.first() else {
        return Err(Error::Domain("cannot aggregate an empty group".into()));
    };
    let n = first.n();
    if matrices.iter().any(|m| m.n() != n) {
        return Err(Error::DataIntegrity("matrices disagree on item count".into()));
    }
    let mut counts = vec![0u32; n * n];
    for m in matrices {
        for (x, y) in m.iter() {
            counts[x * n + y] += 1;
        }
    }
    let mut out = vec![Vec::new(); n];
    let mut wins = vec![0u64; n];
    for x in 0..n {
        for y in 0..n {
            let c = counts[x * n + y];
            wins[x] += u64::from(c);
            let back = counts[y * n + x];
            if c > back {
                out[x].push((y as u32, c - back));
            }
        }
    }
    Ok(ComparisonGraph { out, wins })
}

/// Fraction of the group's `group_size` members who rated each item.
pub fn item_popularity(group_ratings: &[RatingRecord], group_size: usize, n_items: usize) -> Vec<f64> {
    let mut raters: Vec<Vec<u32>> = vec![Vec::new(); n_items];
    for r in group_ratings {
        raters[r.item.index()].push(r.user.0);
    }
    raters
        .into_iter()
        .map(|mut users| {
            users.sort_unstable();
            users.dedup();
            users.len() as f64 / group_size as f64
        })
        .collect()
}

/// Popularity of a single item within a group.
pub fn popularity(item: ItemId, group_ratings: &[RatingRecord], group_size: usize) -> f64 {
    let mut users: Vec<u32> = group_ratings
        .iter()
        .filter(|r| r.item == item)
        .map(|r| r.user.0)
        .collect();
    users.sort_unstable();
    users.dedup();
    users.len() as f64 / group_size as f64
}
