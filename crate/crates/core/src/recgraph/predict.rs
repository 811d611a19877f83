use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{NodeRef, RankScoreVector, RecommendationGraph};
use crate::error::{Error, Result};
use crate::model::{GroupId, GroupSet, ItemId, RatingRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionMethod {
    UserBased,
    ItemBased,
    GroupAverage,
    /// No usable neighbours; the global mean rating.
    GlobalMean,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub group: GroupId,
    pub item: ItemId,
    pub value: f64,
    pub method: PredictionMethod,
}

#[derive(Clone, Copy, Debug, Default)]
struct Acc {
    sum: f64,
    count: u32,
}

impl Acc {
    fn add(&mut self, r: f64) {
        self.sum += r;
        self.count += 1;
    }

    fn mean(self) -> Option<f64> {
        (self.count > 0).then(|| self.sum / f64::from(self.count))
    }
}

/// Per-group rating aggregates used by the predictors.
#[derive(Clone, Debug)]
pub struct GroupRatingStats {
    sizes: Vec<usize>,
    overall: Vec<Acc>,
    per_item: Vec<HashMap<ItemId, Acc>>,
    global: Acc,
    rating_scale: u8,
}

impl GroupRatingStats {
    pub fn new(ratings: &[RatingRecord], groups: &GroupSet, n_users: usize, rating_scale: u8) -> Result<Self> {
        let membership = groups.membership(n_users);
        let mut overall = vec![Acc::default(); groups.len()];
        let mut per_item = vec![HashMap::new(); groups.len()];
        let mut global = Acc::default();
        for r in ratings {
            let g = membership
                .get(r.user.index())
                .copied()
                .flatten()
                .ok_or_else(|| Error::DataIntegrity(format!("user {} belongs to no group", r.user)))?;
            let v = f64::from(r.rating);
            overall[g.index()].add(v);
            per_item[g.index()].entry(r.item).or_insert_with(Acc::default).add(v);
            global.add(v);
        }
        Ok(GroupRatingStats {
            sizes: groups.groups().iter().map(|g| g.size()).collect(),
            overall,
            per_item,
            global,
            rating_scale,
        })
    }

    pub fn n_groups(&self) -> usize {
        self.sizes.len()
    }

    /// Mean of all ratings given by the group's members.
    pub fn group_mean(&self, g: GroupId) -> Option<f64> {
        self.overall[g.index()].mean()
    }

    /// Mean rating the group's members gave `item`.
    pub fn item_mean(&self, g: GroupId, item: ItemId) -> Option<f64> {
        self.per_item[g.index()].get(&item).and_then(|a| a.mean())
    }

    /// Fraction of members who rated `item`.
    pub fn popularity(&self, g: GroupId, item: ItemId) -> f64 {
        let n = self.sizes[g.index()];
        if n == 0 {
            return 0.0;
        }
        self.per_item[g.index()].get(&item).map_or(0.0, |a| f64::from(a.count) / n as f64)
    }

    pub fn global_mean(&self) -> f64 {
        self.global.mean().unwrap_or((1.0 + f64::from(self.rating_scale)) / 2.0)
    }

    /// Items the group rated with popularity at least `theta_p`, sorted.
    pub fn popular_items(&self, g: GroupId, theta_p: f64) -> Vec<ItemId> {
        let mut v: Vec<ItemId> = self.per_item[g.index()]
            .keys()
            .copied()
            .filter(|&i| self.popularity(g, i) >= theta_p)
            .collect();
        v.sort_unstable();
        v
    }

    fn clamp(&self, v: f64) -> f64 {
        v.clamp(1.0, f64::from(self.rating_scale))
    }
}

/// Score-weighted mean deviation of neighbour groups, shifted to the target
/// mean. `neighbours` holds `(s_x, mean of x on the item, mean of x)`.
pub fn user_based_value(neighbours: &[(f64, f64, f64)], target_mean: f64) -> Option<f64> {
    let total: f64 = neighbours.iter().map(|n| n.0).sum();
    if !(total > 0.0) {
        return None;
    }
    let dev: f64 = neighbours.iter().map(|&(s, rxi, rx)| s * (rxi - rx)).sum();
    Some(dev / total + target_mean)
}

/// Score-weighted mean of `(s_j, r_j)` pairs.
pub fn item_based_value(items: &[(f64, f64)]) -> Option<f64> {
    let total: f64 = items.iter().map(|n| n.0).sum();
    if !(total > 0.0) {
        return None;
    }
    Some(items.iter().map(|&(s, r)| s * r).sum::<f64>() / total)
}

/// Rating prediction for `item` from groups where it is popular, weighted by
/// the target's rank scores over groups. Popular in the target itself: the
/// members' average. No neighbour groups: item-based.
pub fn predict_user_based(
    target: GroupId,
    item: ItemId,
    scores: &RankScoreVector,
    g: &RecommendationGraph,
    stats: &GroupRatingStats,
    theta_p: f64,
) -> Prediction {
    let done = |value, method| Prediction {
        group: target,
        item,
        value: stats.clamp(value),
        method,
    };
    if stats.popularity(target, item) > 0.0 && stats.popularity(target, item) >= theta_p {
        if let Some(m) = stats.item_mean(target, item) {
            return done(m, PredictionMethod::GroupAverage);
        }
    }
    let neighbours: Vec<(f64, f64, f64)> = (0..stats.n_groups())
        .map(GroupId::from)
        .filter(|&x| x != target && stats.popularity(x, item) > 0.0 && stats.popularity(x, item) >= theta_p)
        .filter_map(|x| {
            Some((
                scores.score(g, NodeRef::group(x)),
                stats.item_mean(x, item)?,
                stats.group_mean(x)?,
            ))
        })
        .collect();
    let target_mean = stats.group_mean(target).unwrap_or_else(|| stats.global_mean());
    match user_based_value(&neighbours, target_mean) {
        Some(v) => done(v, PredictionMethod::UserBased),
        None => predict_item_based(target, item, scores, g, stats, theta_p),
    }
}

/// Rating prediction from the target group's own ratings on other items,
/// weighted by the target's rank scores over items.
pub fn predict_item_based(
    target: GroupId,
    item: ItemId,
    scores: &RankScoreVector,
    g: &RecommendationGraph,
    stats: &GroupRatingStats,
    theta_p: f64,
) -> Prediction {
    let rated: Vec<(f64, f64)> = stats
        .popular_items(target, theta_p)
        .into_iter()
        .filter(|&j| j != item)
        .filter_map(|j| Some((scores.score(g, NodeRef::item(j)), stats.item_mean(target, j)?)))
        .collect();
    let (value, method) = match item_based_value(&rated) {
        Some(v) => (v, PredictionMethod::ItemBased),
        None => (stats.global_mean(), PredictionMethod::GlobalMean),
    };
    Prediction {
        group: target,
        item,
        value: stats.clamp(value),
        method,
    }
}
