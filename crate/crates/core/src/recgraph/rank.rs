use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{NodeKind, NodeRef, RecommendationGraph};
use crate::error::{Error, Result};
use crate::model::ItemId;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RankConfig {
    /// Probability of following an edge rather than teleporting home.
    pub damping: f64,
    /// Stop once the l1 change between iterates falls below this.
    pub epsilon: f64,
    pub max_iterations: usize,
}

impl Default for RankConfig {
    fn default() -> Self {
        RankConfig {
            damping: 0.85,
            epsilon: 1e-8,
            max_iterations: 200,
        }
    }
}

impl RankConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::config(
                "rank.damping",
                format!("must be in (0, 1), got {}", self.damping),
            ));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::config("rank.epsilon", format!("must be positive, got {}", self.epsilon)));
        }
        if self.max_iterations == 0 {
            return Err(Error::config("rank.max_iterations", "must be at least 1"));
        }
        Ok(())
    }
}

/// Column-stochastic transition operator of the walk, stored by source:
/// `columns[j]` lists `(i, W_ij)`, the probability of stepping `j -> i`.
#[derive(Clone, Debug)]
pub struct TransitionOperator {
    columns: Vec<Vec<(u32, f64)>>,
    dangling: Vec<bool>,
}

impl TransitionOperator {
    pub fn n(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[(u32, f64)] {
        &self.columns[j]
    }

    pub fn is_dangling(&self, j: usize) -> bool {
        self.dangling[j]
    }

    /// `W_ij`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.columns[j]
            .iter()
            .filter(|&&(t, _)| t as usize == i)
            .map(|&(_, p)| p)
            .sum()
    }
}

pub fn transition_operator(g: &RecommendationGraph) -> TransitionOperator {
    let n = g.n_nodes();
    let mut columns = Vec::with_capacity(n);
    let mut dangling = Vec::with_capacity(n);
    for j in 0..n {
        let edges = g.out_edges(j);
        let total: f64 = edges.iter().map(|&(_, w)| w).sum();
        if total > 0.0 {
            columns.push(edges.iter().map(|&(i, w)| (i, w / total)).collect());
            dangling.push(false);
        } else {
            columns.push(Vec::new());
            dangling.push(true);
        }
    }
    TransitionOperator { columns, dangling }
}

/// Personalized rank scores for one target node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankScoreVector {
    pub target: NodeRef,
    pub scores: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl RankScoreVector {
    pub fn score(&self, g: &RecommendationGraph, node: NodeRef) -> f64 {
        g.node_index(node).map_or(0.0, |i| self.scores[i])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

pub fn rank_scores(g: &RecommendationGraph, target: NodeRef, config: &RankConfig) -> Result<RankScoreVector> {
    rank_scores_with(g, &transition_operator(g), target, config)
}

/// Power iteration on `s <- beta W s + (1 - beta) theta` with `theta` the
/// indicator of `target`, starting from the uniform vector. Mass sitting on
/// dangling nodes is sent to `theta`.
pub fn rank_scores_with(
    g: &RecommendationGraph,
    op: &TransitionOperator,
    target: NodeRef,
    config: &RankConfig,
) -> Result<RankScoreVector> {
    config.validate()?;
    let t = g
        .node_index(target)
        .ok_or_else(|| Error::Usage(format!("target {target} is not a node of the graph")))?;
    let n = op.n();
    let beta = config.damping;
    let mut s = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iterations {
        next.iter_mut().for_each(|x| *x = 0.0);
        let mut home = 1.0 - beta;
        for (j, &sj) in s.iter().enumerate() {
            if sj == 0.0 {
                continue;
            }
            if op.dangling[j] {
                home += beta * sj;
                continue;
            }
            let m = beta * sj;
            for &(i, p) in &op.columns[j] {
                next[i as usize] += m * p;
            }
        }
        next[t] += home;
        iterations += 1;
        let delta: f64 = s.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut s, &mut next);
        if delta < config.epsilon {
            converged = true;
            break;
        }
    }
    // Rounding drift only; the iteration is mass-preserving.
    let total: f64 = s.iter().sum();
    s.iter_mut().for_each(|x| *x /= total);
    Ok(RankScoreVector {
        target,
        scores: s,
        iterations,
        converged,
    })
}

/// Items by descending score, ties by id; `exclude` removed.
pub fn recommend(s: &RankScoreVector, g: &RecommendationGraph, exclude: &HashSet<ItemId>) -> Vec<ItemId> {
    let range = g.range(NodeKind::Item);
    let base = range.start;
    let mut items: Vec<ItemId> = range
        .map(|i| ItemId::from(i - base))
        .filter(|i| !exclude.contains(i))
        .collect();
    items.sort_by(|a, b| {
        s.scores[base + b.index()]
            .total_cmp(&s.scores[base + a.index()])
            .then(a.cmp(b))
    });
    items
}

/// Drops the items a user already rated, keeping the order of the rest.
pub fn personalize<I: IntoIterator<Item = ItemId>>(list: &[ItemId], rated: I) -> Vec<ItemId> {
    let rated: HashSet<ItemId> = rated.into_iter().collect();
    list.iter().copied().filter(|i| !rated.contains(i)).collect()
}
