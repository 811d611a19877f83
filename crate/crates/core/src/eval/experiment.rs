use std::collections::{BTreeMap, HashSet};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::metrics::{item_percentile, positions_of};
use super::{EvalConfig, EvalReport, FoldResult, Method};
use crate::aggregate::{aggregate_topk, item_popularity, TopKList};
use crate::data::{group_users, DatasetBundle, GroupingStrategy, SplitPlan};
use crate::error::{Error, Result};
use crate::exchange::{cleanup, pad_matrix, simulate_exchange, ExchangeConfig};
use crate::model::{pairwise_from_ratings, Catalog, Group, GroupSet, ItemId, RatingRecord};
use crate::recgraph::{
    build_graph, build_personal_graph, personalize, rank_scores_with, recommend, transition_operator,
    NodeRef, RecommendationGraph,
};
use crate::seed::derive_seed;

/// Private aggregation for one group: each member builds and pads a
/// comparison matrix, the group runs the exchange, members clean up, and the
/// server aggregates the mixed matrices.
pub fn group_topk(
    catalog: &Catalog,
    group: &Group,
    ratings_by_user: &[Vec<RatingRecord>],
    config: &EvalConfig,
    stream: u64,
) -> Result<TopKList> {
    let s = config.seeds;
    let mut matrices = Vec::with_capacity(group.size());
    let mut group_ratings = Vec::new();
    for &u in &group.members {
        let mine = &ratings_by_user[u.index()];
        group_ratings.extend_from_slice(mine);
        let m = pairwise_from_ratings(u, mine, catalog)?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(s.padding, &[stream, group.id.0 as u64, u.0 as u64]));
        matrices.push(pad_matrix(&m, &mut rng)?.0);
    }
    if group.size() >= 2 {
        let ex = ExchangeConfig::new(
            group.clone(),
            config.exchange_time,
            derive_seed(s.exchange, &[stream, group.id.0 as u64]),
        );
        matrices = simulate_exchange(matrices, &ex)?.matrices;
    }
    let cleaned: Vec<_> = matrices.iter().map(cleanup).collect();
    drop(matrices);
    let pop = item_popularity(&group_ratings, group.size(), catalog.n_items());
    aggregate_topk(&cleaned, &pop, &config.aggregation)
}

/// Output of the group side of the pipeline for one training set.
#[derive(Clone, Debug)]
pub struct GroupPipeline {
    pub topk: Vec<TopKList>,
    pub graph: RecommendationGraph,
    /// Ranked items per group, before personalization.
    pub lists: Vec<Vec<ItemId>>,
    pub unconverged: usize,
}

pub fn group_recommendations(
    catalog: &Catalog,
    groups: &GroupSet,
    ratings_by_user: &[Vec<RatingRecord>],
    config: &EvalConfig,
    stream: u64,
) -> Result<GroupPipeline> {
    config.validate()?;
    let topk = groups
        .groups()
        .iter()
        .map(|g| group_topk(catalog, g, ratings_by_user, config, stream))
        .collect::<Result<Vec<_>>>()?;
    let graph = build_graph(&topk, catalog, groups, config.w_max)?;
    let op = transition_operator(&graph);
    let mut lists = Vec::with_capacity(groups.len());
    let mut unconverged = 0;
    for g in groups.groups() {
        let s = rank_scores_with(&graph, &op, NodeRef::group(g.id), &config.rank)?;
        unconverged += usize::from(!s.converged);
        lists.push(recommend(&s, &graph, &HashSet::new()));
    }
    Ok(GroupPipeline {
        topk,
        graph,
        lists,
        unconverged,
    })
}

#[derive(Default)]
struct Tally {
    records: usize,
    missing: usize,
    users: usize,
    percentile_sum: f64,
    hits: BTreeMap<usize, usize>,
}

impl Tally {
    fn score(&mut self, list: &[ItemId], test: &HashSet<ItemId>, ks: &[usize]) {
        self.users += 1;
        for p in positions_of(list, test) {
            self.records += 1;
            self.missing += usize::from(p.is_none());
            self.percentile_sum += item_percentile(p, list.len());
            for &k in ks {
                *self.hits.entry(k).or_default() += usize::from(p.is_some_and(|p| p <= k));
            }
        }
    }

    fn finish(self, fold: usize, ks: &[usize], unconverged: usize) -> FoldResult {
        let n = self.records.max(1) as f64;
        FoldResult {
            fold,
            percentile: self.percentile_sum / n,
            recall: ks
                .iter()
                .map(|&k| (k, self.hits.get(&k).copied().unwrap_or(0) as f64 / n))
                .collect(),
            test_records: self.records,
            missing: self.missing,
            test_users: self.users,
            unconverged,
        }
    }
}

fn mean_of(values: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Cross-validated run of one method.
///
/// Per fold, the held-out fold is removed from training and its top-rated
/// records become test items. Percentile and recall are pooled over the
/// fold's test records, then averaged over folds.
pub fn run_experiment(
    bundle: &DatasetBundle,
    strategy: Option<&GroupingStrategy>,
    config: &EvalConfig,
    method: Method,
    plan: &SplitPlan,
) -> Result<EvalReport> {
    config.validate()?;
    let started = Instant::now();
    let n_users = bundle.catalog.n_users();
    let groups = match (method, strategy) {
        (Method::GroupPrivate, Some(s)) => Some(group_users(bundle, s)?),
        (Method::GroupPrivate, None) => {
            return Err(Error::Usage("group_private needs a grouping strategy".into()))
        }
        (Method::PersonalBaseline, _) => None,
    };
    let ks = {
        let mut ks = config.recall_ks.clone();
        ks.sort_unstable();
        ks.dedup();
        ks
    };
    let mut folds = Vec::with_capacity(plan.fold_count);
    for f in 0..plan.fold_count {
        let mut train_by_user = vec![Vec::new(); n_users];
        let train_idx = plan.train(f);
        for &i in &train_idx {
            let r = bundle.ratings[i];
            train_by_user[r.user.index()].push(r);
        }
        let mut test_by_user: BTreeMap<usize, HashSet<ItemId>> = BTreeMap::new();
        for &i in &plan.test[f] {
            let r = bundle.ratings[i];
            test_by_user.entry(r.user.index()).or_default().insert(r.item);
        }
        let rated = |u: usize| train_by_user[u].iter().map(|r| r.item);
        let mut tally = Tally::default();
        let unconverged;
        match &groups {
            Some(gs) => {
                let out = group_recommendations(&bundle.catalog, gs, &train_by_user, config, f as u64)?;
                let membership = gs.membership(n_users);
                for (&u, test) in &test_by_user {
                    let g = membership[u].expect("grouping covers every user");
                    let mut list = personalize(&out.lists[g.index()], rated(u));
                    list.truncate(config.list_length);
                    tally.score(&list, test, &ks);
                }
                unconverged = out.unconverged;
            }
            None => {
                let train: Vec<RatingRecord> = train_idx.iter().map(|&i| bundle.ratings[i]).collect();
                let graph = build_personal_graph(&train, &bundle.catalog, bundle.profiles.as_deref())?;
                let op = transition_operator(&graph);
                let mut missed = 0;
                for (&u, test) in &test_by_user {
                    let user = crate::model::UserId::from(u);
                    let s = rank_scores_with(&graph, &op, NodeRef::user(user), &config.rank)?;
                    missed += usize::from(!s.converged);
                    let exclude: HashSet<ItemId> = rated(u).collect();
                    let mut list = recommend(&s, &graph, &exclude);
                    list.truncate(config.list_length);
                    tally.score(&list, test, &ks);
                }
                unconverged = missed;
            }
        }
        folds.push(tally.finish(f, &ks, unconverged));
    }
    let mean_percentile = mean_of(folds.iter().map(|f| f.percentile));
    let mean_recall = ks
        .iter()
        .map(|&k| (k, mean_of(folds.iter().map(|f| f.recall[&k]))))
        .collect();
    let strategy_name = strategy.filter(|_| method == Method::GroupPrivate).map(|s| s.name());
    Ok(EvalReport {
        label: match &strategy_name {
            Some(s) => format!("{}:{s}", method.label()),
            None => method.label().to_string(),
        },
        method,
        strategy: strategy_name,
        list_length: config.list_length,
        folds,
        mean_percentile,
        mean_recall,
        runtime_seconds: started.elapsed().as_secs_f64(),
    })
}
