use super::graph::ComparisonGraph;
use crate::model::{ItemId, PartialRanking, RatingRecord};

/// Sorts `candidates` by descending score; ties go to the more popular item,
/// then to the smaller id.
pub fn borda(scores: &[f64], popularity: &[f64], candidates: &[ItemId]) -> PartialRanking {
    let mut items = candidates.to_vec();
    items.sort_unstable();
    items.dedup();
    items.sort_by(|&a, &b| {
        scores[b.index()]
            .total_cmp(&scores[a.index()])
            .then(popularity[b.index()].total_cmp(&popularity[a.index()]))
            .then(a.cmp(&b))
    });
    PartialRanking::new(items).expect("deduplicated")
}

/// Borda scores from mixed pairwise data: `sum_y (M_xy - M_yx)` over the group.
pub fn pairwise_borda_scores(g: &ComparisonGraph) -> Vec<f64> {
    g.net_scores().into_iter().map(|w| w as f64).collect()
}

/// Borda scores from raw ratings: the sum of ratings each item received.
pub fn rating_borda_scores(ratings: &[RatingRecord], n_items: usize) -> Vec<f64> {
    let mut scores = vec![0.0; n_items];
    for r in ratings {
        scores[r.item.index()] += f64::from(r.rating);
    }
    scores
}

/// Fallback ranking used when the leading components are too large to solve
/// exactly. Other Kemeny heuristics plug in here.
pub trait RankHeuristic {
    fn rank(&self, g: &ComparisonGraph, popularity: &[f64], candidates: &[ItemId]) -> PartialRanking;
}

/// Borda count on the pairwise win totals.
#[derive(Clone, Copy, Debug, Default)]
pub struct Borda;

impl RankHeuristic for Borda {
    fn rank(&self, g: &ComparisonGraph, popularity: &[f64], candidates: &[ItemId]) -> PartialRanking {
        borda(&pairwise_borda_scores(g), popularity, candidates)
    }
}
