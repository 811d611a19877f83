//! Intra-group preference aggregation.
//!
//! The server sums a group's mixed comparison matrices into a net-preference
//! graph, pops strongly connected components from its best end until `k`
//! popular-enough items are collected, and orders them exactly (small
//! components) or by Borda count (when a component reaches `theta_scc`).

mod borda;
mod graph;
mod kemeny;
mod kendall;
mod tarjan;

pub use borda::{borda, pairwise_borda_scores, rating_borda_scores, Borda, RankHeuristic};
pub use graph::{build_comparison_graph, item_popularity, popularity, ComparisonGraph};
pub use kemeny::{exact_kemeny, feedback_cost, EXACT_KEMENY_CAP};
pub use kendall::{kemeny_cost, kendall_tau};
pub use tarjan::{tarjan_topk, SccExtraction};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ItemId, PairwiseComparisonMatrix, PartialRanking};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AggregationConfig {
    /// Length of the top-k list.
    pub k: usize,
    /// Component size at which exact ordering gives way to the heuristic.
    pub theta_scc: usize,
    /// Minimum fraction of members who rated an item for it to be listed.
    pub theta_p: f64,
}

impl Default for AggregationConfig {
    fn default() -> Self {
        AggregationConfig {
            k: 500,
            theta_scc: 20,
            theta_p: 0.01,
        }
    }
}

impl AggregationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::config("aggregation.k", "must be at least 1"));
        }
        if self.theta_scc == 0 || self.theta_scc > EXACT_KEMENY_CAP + 1 {
            return Err(Error::config(
                "aggregation.theta_scc",
                format!("must be in 1..={} (exact solver cap + 1)", EXACT_KEMENY_CAP + 1),
            ));
        }
        if !(0.0..=1.0).contains(&self.theta_p) {
            return Err(Error::config(
                "aggregation.theta_p",
                format!("must be in [0, 1], got {}", self.theta_p),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationMethod {
    /// Components ordered exactly and concatenated.
    Exact,
    /// A component reached `theta_scc`; heuristic ranking of all eligible items.
    Heuristic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopKEntry {
    pub item: ItemId,
    /// Pairwise Borda score (net wins in the group).
    pub score: f64,
}

/// A group's aggregated top-k list, best first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopKList {
    /// Requested length.
    pub k: usize,
    pub entries: Vec<TopKEntry>,
    pub method: AggregationMethod,
    /// Fewer than `k` eligible items were available.
    pub short: bool,
}

impl TopKList {
    pub fn items(&self) -> impl Iterator<Item = ItemId> + '_ {
        self.entries.iter().map(|e| e.item)
    }

    pub fn ranking(&self) -> PartialRanking {
        PartialRanking::new(self.items().collect()).expect("top-k items are distinct")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Aggregates a group's cleaned matrices into a top-k list using Borda as the
/// fallback heuristic.
pub fn aggregate_topk(
    matrices: &[PairwiseComparisonMatrix],
    popularity: &[f64],
    config: &AggregationConfig,
) -> Result<TopKList> {
    aggregate_topk_with(matrices, popularity, config, &Borda)
}

pub fn aggregate_topk_with(
    matrices: &[PairwiseComparisonMatrix],
    popularity: &[f64],
    config: &AggregationConfig,
    heuristic: &dyn RankHeuristic,
) -> Result<TopKList> {
    let g = build_comparison_graph(matrices)?;
    aggregate_graph(&g, popularity, config, heuristic)
}

/// Aggregation once the comparison graph is built.
pub fn aggregate_graph(
    g: &ComparisonGraph,
    popularity: &[f64],
    config: &AggregationConfig,
    heuristic: &dyn RankHeuristic,
) -> Result<TopKList> {
    config.validate()?;
    if popularity.len() != g.n_nodes() {
        return Err(Error::DataIntegrity(format!(
            "popularity covers {} items, graph has {}",
            popularity.len(),
            g.n_nodes()
        )));
    }
    let extraction = tarjan_topk(g, config, popularity);
    let (mut ranking, method) = if extraction.beta_max < config.theta_scc {
        let mut items = Vec::with_capacity(extraction.count);
        for component in &extraction.components {
            items.extend_from_slice(exact_kemeny(g, component)?.items());
        }
        (items, AggregationMethod::Exact)
    } else {
        let eligible: Vec<ItemId> = (0..g.n_nodes())
            .filter(|&i| popularity[i] >= config.theta_p)
            .map(ItemId::from)
            .collect();
        let r = heuristic.rank(g, popularity, &eligible);
        (r.items().to_vec(), AggregationMethod::Heuristic)
    };
    ranking.truncate(config.k);
    let scores = pairwise_borda_scores(g);
    Ok(TopKList {
        k: config.k,
        short: ranking.len() < config.k,
        entries: ranking
            .into_iter()
            .map(|item| TopKEntry {
                item,
                score: scores[item.index()],
            })
            .collect(),
        method,
    })
}
