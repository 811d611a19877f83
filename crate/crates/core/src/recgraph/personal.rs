use std::collections::BTreeSet;

use super::{NodeRef, RecommendationGraph};
use crate::error::{Error, Result};
use crate::model::{Catalog, RatingRecord, UserId, UserProfile};

/// `exp((r - mean) / sqrt(sum of squared deviations))`; 1 when the user's
/// ratings have no spread.
pub fn personal_edge_weight(rating: f64, mean: f64, sq_dev_sum: f64) -> f64 {
    if sq_dev_sum <= 0.0 {
        return 1.0;
    }
    ((rating - mean) / sq_dev_sum.sqrt()).exp()
}

fn attribute_values(p: &UserProfile) -> Vec<String> {
    let mut v = Vec::new();
    if let Some(g) = p.gender {
        v.push(format!("gender={}", g.label()));
    }
    if let Some(a) = p.age_bucket() {
        v.push(format!("age={}", a.label()));
    }
    if let Some(o) = &p.occupation {
        v.push(format!("occupation={o}"));
    }
    v
}

/// Baseline graph with individual ratings: users, items and profile
/// attribute values. `profiles`, when given, is indexed by user.
pub fn build_personal_graph(
    ratings: &[RatingRecord],
    catalog: &Catalog,
    profiles: Option<&[UserProfile]>,
) -> Result<RecommendationGraph> {
    if ratings.is_empty() {
        return Err(Error::DataIntegrity("personal graph needs at least one rating".into()));
    }
    let n_users = catalog.n_users();
    let labels: Vec<String> = match profiles {
        Some(ps) => {
            if ps.len() != n_users {
                return Err(Error::DataIntegrity(format!(
                    "{} profiles for {n_users} users",
                    ps.len()
                )));
            }
            ps.iter()
                .flat_map(attribute_values)
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect()
        }
        None => Vec::new(),
    };
    let mut g = RecommendationGraph::with_nodes(0, catalog.n_items(), 0, n_users, labels, 1.0);

    let mut sum = vec![0.0; n_users];
    let mut count = vec![0u32; n_users];
    for r in ratings {
        if r.user.index() >= n_users || !catalog.contains_item(r.item) {
            return Err(Error::DataIntegrity(format!("rating ({}, {}) outside catalog", r.user, r.item)));
        }
        sum[r.user.index()] += f64::from(r.rating);
        count[r.user.index()] += 1;
    }
    let mean: Vec<f64> = sum
        .iter()
        .zip(&count)
        .map(|(&s, &c)| if c > 0 { s / f64::from(c) } else { 0.0 })
        .collect();
    let mut sq = vec![0.0; n_users];
    for r in ratings {
        let d = f64::from(r.rating) - mean[r.user.index()];
        sq[r.user.index()] += d * d;
    }
    for r in ratings {
        let u = r.user.index();
        let w = personal_edge_weight(f64::from(r.rating), mean[u], sq[u]);
        g.add_edge(NodeRef::user(r.user), NodeRef::item(r.item), w)?;
    }
    if let Some(ps) = profiles {
        for (u, p) in ps.iter().enumerate() {
            for value in attribute_values(p) {
                let a = g
                    .attribute_labels()
                    .binary_search(&value)
                    .expect("label collected above");
                g.add_edge(NodeRef::user(UserId::from(u)), NodeRef::attribute(a), 1.0)?;
            }
        }
    }
    Ok(g)
}
