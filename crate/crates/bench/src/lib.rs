//! Synthetic inputs shared by the benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use grouprec_core::aggregate::{build_comparison_graph, ComparisonGraph};
use grouprec_core::{
    pairwise_from_ratings, Catalog, IdMap, ItemId, NodeRef, PairwiseComparisonMatrix, RatingRecord,
    RecommendationGraph, UserId,
};

pub fn catalog(n_items: usize, n_users: usize) -> Catalog {
    Catalog::new(
        IdMap::from_unique((0..n_items).map(|i| i.to_string())).unwrap(),
        IdMap::from_unique((0..n_users).map(|i| i.to_string())).unwrap(),
        IdMap::new(),
        vec![Vec::new(); n_items],
        5,
    )
    .unwrap()
}

/// Users rating a random `density` share of items, with a shared bias so
/// the group agrees on part of the order.
pub fn rated_matrices(n_items: usize, n_users: usize, density: f64, seed: u64) -> Vec<PairwiseComparisonMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = catalog(n_items, n_users);
    let bias: Vec<f64> = (0..n_items).map(|_| rng.random_range(0.0..2.0)).collect();
    (0..n_users)
        .map(|u| {
            let user = UserId::from(u);
            let mut ratings = Vec::new();
            for (i, b) in bias.iter().enumerate() {
                if rng.random_bool(density) {
                    let r = (1.0 + b + rng.random_range(0.0..3.0)).min(5.0) as u8;
                    ratings.push(RatingRecord::new(user, ItemId::from(i), r));
                }
            }
            pairwise_from_ratings(user, &ratings, &c).unwrap()
        })
        .collect()
}

pub fn comparison_graph(n_items: usize, n_users: usize, seed: u64) -> ComparisonGraph {
    build_comparison_graph(&rated_matrices(n_items, n_users, 0.3, seed)).unwrap()
}

/// Random bipartite group-item graph with `degree` edges per group.
pub fn group_graph(groups: usize, items: usize, degree: usize, seed: u64) -> RecommendationGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = RecommendationGraph::with_nodes(groups, items, 0, 0, Vec::new(), 1.0);
    let mut all: Vec<u32> = (0..items as u32).collect();
    for gi in 0..groups {
        all.shuffle(&mut rng);
        for (rank, &i) in all.iter().take(degree).enumerate() {
            let w = (degree - rank) as f64 / degree as f64;
            g.add_edge(NodeRef::group(gi.into()), NodeRef::item(ItemId(i)), w).unwrap();
        }
    }
    g
}
