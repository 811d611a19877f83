use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use super::*;
use crate::aggregate::{AggregationMethod, TopKEntry};
use crate::model::{
    fixtures::{catalog, tagged_catalog},
    Gender, Group, RatingRecord, UserProfile};

fn topk(k: usize, items: &[u32]) -> TopKList {
    TopKList {
        k,
        entries: items
            .iter()
            .map(|&i| TopKEntry { item: ItemId(i), score: 0.0 })
            .collect(),
        method: AggregationMethod::Exact,
        short: items.len() < k,
    }
}

fn plain(n: usize, edges: &[(usize, usize, f64)]) -> RecommendationGraph {
    let mut g = RecommendationGraph::with_nodes(n, 0, 0, 0, Vec::new(), 1.0);
    for &(a, b, w) in edges {
        g.add_edge(NodeRef::group(GroupId::from(a)), NodeRef::group(GroupId::from(b)), w)
            .unwrap();
    }
    g
}

/// Solves `(I - beta (W + theta d^T)) s = (1 - beta) theta` densely.
fn dense_solve(g: &RecommendationGraph, target: usize, beta: f64) -> DVector<f64> {
    let n = g.n_nodes();
    let mut w = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let total: f64 = g.out_edges(j).iter().map(|e| e.1).sum();
        if total == 0.0 {
            w[(target, j)] = 1.0;
        }
        for &(i, x) in g.out_edges(j) {
            w[(i as usize, j)] += x / total;
        }
    }
    let a = DMatrix::<f64>::identity(n, n) - w * beta;
    let mut b = DVector::<f64>::zeros(n);
    b[target] = 1.0 - beta;
    a.lu().solve(&b).unwrap()
}

fn residual(g: &RecommendationGraph, s: &RankScoreVector, beta: f64) -> f64 {
    let op = transition_operator(g);
    let t = g.node_index(s.target).unwrap();
    let n = g.n_nodes();
    let mut next = vec![0.0; n];
    for j in 0..n {
        if op.is_dangling(j) {
            next[t] += beta * s.scores[j];
        }
        for &(i, p) in op.column(j) {
            next[i as usize] += beta * p * s.scores[j];
        }
    }
    next[t] += 1.0 - beta;
    next.iter().zip(&s.scores).map(|(a, b)| (a - b).abs()).sum()
}

#[test]
fn group_item_weights() {
    assert_eq!(group_item_weight(1, 10, 1.0), 1.0);
    assert!((group_item_weight(10, 10, 1.0) - 0.1).abs() < 1e-15);
    assert_eq!(group_item_weight(11, 10, 1.0), 0.0);
    assert_eq!(group_item_weight(1, 4, 2.0), 2.0);
}

fn two_group_fixture() -> (RecommendationGraph, Catalog) {
    let c = tagged_catalog(2, 2, &[&[0], &[0, 1], &[], &[1]]);
    let mut groups = GroupSet::from_members(vec![
        ("a".into(), vec![UserId(0)]),
        ("b".into(), vec![UserId(1)]),
    ])
    .unwrap();
    groups.associate(GroupId(0), GroupId(1)).unwrap();
    let g = build_graph(&[topk(2, &[1, 0]), topk(2, &[3])], &c, &groups, 1.0).unwrap();
    (g, c)
}

#[test]
fn build_graph_edges() {
    let (g, _) = two_group_fixture();
    assert_eq!(g.n_nodes(), 2 + 4 + 2);
    let (g0, g1) = (NodeRef::group(GroupId(0)), NodeRef::group(GroupId(1)));
    assert_eq!(g.weight(g0, NodeRef::item(ItemId(1))), 1.0);
    assert_eq!(g.weight(NodeRef::item(ItemId(1)), g0), 1.0);
    assert_eq!(g.weight(g0, NodeRef::item(ItemId(0))), 0.5);
    assert_eq!(g.weight(g0, NodeRef::item(ItemId(3))), 0.0);
    assert_eq!(g.weight(g1, NodeRef::item(ItemId(3))), 1.0);
    assert_eq!(g.weight(NodeRef::item(ItemId(1)), NodeRef::tag(TagId(1))), 1.0);
    assert_eq!(g.weight(NodeRef::tag(TagId(1)), NodeRef::item(ItemId(3))), 1.0);
    assert_eq!(g.weight(g0, g1), 1.0);
    assert_eq!(g.weight(g1, g0), 1.0);
    // 3 cf + 4 tag + 1 social, both directions
    assert_eq!(g.edge_count(), 16);
    assert!(g.has_cf_edges());
    for i in 0..g.n_nodes() {
        assert!(g.out_edges(i).iter().all(|&(t, w)| t as usize != i && w > 0.0));
    }
}

#[test]
fn build_graph_without_lists_has_no_cf_edges() {
    let c = catalog(3, 2);
    let groups = GroupSet::from_members(vec![("a".into(), vec![UserId(0), UserId(1)])]).unwrap();
    let g = build_graph(&[topk(5, &[])], &c, &groups, 1.0).unwrap();
    assert!(!g.has_cf_edges());
    assert!(build_graph(&[topk(2, &[7])], &c, &groups, 1.0).is_err());
    assert!(build_graph(&[], &c, &groups, 1.0).is_err());
}

#[test]
fn node_ref_round_trip() {
    let (g, _) = two_group_fixture();
    for i in 0..g.n_nodes() {
        assert_eq!(g.node_index(g.node_ref(i)), Some(i));
    }
    assert_eq!(g.node_ref(2), NodeRef::item(ItemId(0)));
    assert_eq!(g.node_index(NodeRef::user(UserId(0))), None);
}

#[test]
fn transition_normalizes_out_weights() {
    let g = plain(3, &[(0, 1, 3.0), (0, 2, 1.0)]);
    let op = transition_operator(&g);
    assert_eq!(op.get(1, 0), 0.75);
    assert_eq!(op.get(2, 0), 0.25);
    assert_eq!(op.get(0, 1), 1.0);

    let g = plain(3, &[(0, 1, 2.0)]);
    let op = transition_operator(&g);
    assert!(op.is_dangling(2));
    assert!((0..3).all(|i| op.get(i, 2) == 0.0));

    let op = transition_operator(&plain(2, &[(0, 1, 5.0)]));
    for i in 0..2 {
        let row: f64 = (0..2).map(|j| op.get(i, j)).sum();
        let col: f64 = (0..2).map(|j| op.get(j, i)).sum();
        assert_eq!((row, col), (1.0, 1.0));
    }
}

#[test]
fn two_node_scores() {
    let g = plain(2, &[(0, 1, 1.0)]);
    let s = rank_scores(&g, NodeRef::group(GroupId(0)), &RankConfig::default()).unwrap();
    // s0 = 0.15 / (1 - 0.85^2), s1 = 0.85 s0
    let s0 = 0.15 / (1.0 - 0.85 * 0.85);
    assert!((s.scores[0] - s0).abs() < 1e-7);
    assert!((s.scores[1] - 0.85 * s0).abs() < 1e-7);
    assert!((s.scores[0] - 0.5405).abs() < 1e-4 && (s.scores[1] - 0.4595).abs() < 1e-4);
    assert!(s.converged);
}

#[test]
fn tiny_damping_returns_teleport_vector() {
    let (g, _) = two_group_fixture();
    let cfg = RankConfig { damping: 1e-9, ..RankConfig::default() };
    let s = rank_scores(&g, NodeRef::group(GroupId(1)), &cfg).unwrap();
    assert!((s.scores[1] - 1.0).abs() < 1e-8);
}

#[test]
fn non_convergence_is_flagged() {
    let (g, _) = two_group_fixture();
    let cfg = RankConfig { max_iterations: 2, ..RankConfig::default() };
    let s = rank_scores(&g, NodeRef::group(GroupId(0)), &cfg).unwrap();
    assert!(!s.converged);
    assert_eq!(s.iterations, 2);
    assert!((s.scores.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn rank_config_validation() {
    assert!(RankConfig { damping: 1.0, ..RankConfig::default() }.validate().is_err());
    assert!(RankConfig { damping: 0.0, ..RankConfig::default() }.validate().is_err());
    assert!(RankConfig { epsilon: 0.0, ..RankConfig::default() }.validate().is_err());
    assert!(rank_scores(&plain(2, &[]), NodeRef::group(GroupId(5)), &RankConfig::default()).is_err());
}

#[test]
fn adjacent_item_beats_two_hop_item() {
    // g0 - i0 (top-1), i0 - t0 - i1, g1 - i1 (top-1)
    let c = tagged_catalog(2, 1, &[&[0], &[0]]);
    let groups = GroupSet::from_members(vec![
        ("a".into(), vec![UserId(0)]),
        ("b".into(), vec![UserId(1)]),
    ])
    .unwrap();
    let g = build_graph(&[topk(1, &[0]), topk(1, &[1])], &c, &groups, 1.0).unwrap();
    assert_eq!(g.n_nodes(), 5);
    let s = rank_scores(&g, NodeRef::group(GroupId(0)), &RankConfig::default()).unwrap();
    let exact = dense_solve(&g, 0, 0.85);
    for i in 0..5 {
        assert!((s.scores[i] - exact[i]).abs() < 1e-7);
    }
    assert_eq!(recommend(&s, &g, &HashSet::new()), vec![ItemId(0), ItemId(1)]);
    assert!(exact[2] > exact[3]);
}

#[test]
fn recommend_sorts_and_excludes() {
    let (g, _) = two_group_fixture();
    let mut s = RankScoreVector {
        target: NodeRef::group(GroupId(0)),
        scores: vec![0.0; g.n_nodes()],
        iterations: 0,
        converged: true,
    };
    let base = g.range(NodeKind::Item).start;
    for (i, v) in [0.1, 0.4, 0.3, 0.2].iter().enumerate() {
        s.scores[base + i] = *v;
    }
    assert_eq!(recommend(&s, &g, &HashSet::new()), vec![ItemId(1), ItemId(2), ItemId(3), ItemId(0)]);
    let all: HashSet<_> = (0..4).map(ItemId).collect();
    assert!(recommend(&s, &g, &all).is_empty());
    s.scores[base..base + 4].iter_mut().for_each(|x| *x = 0.25);
    let ex: HashSet<_> = [ItemId(2)].into();
    assert_eq!(recommend(&s, &g, &ex), vec![ItemId(0), ItemId(1), ItemId(3)]);
}

#[test]
fn personalize_examples() {
    let list = [ItemId(4), ItemId(2), ItemId(9)];
    assert_eq!(personalize(&list, []), list.to_vec());
    assert!(personalize(&list, list).is_empty());
    assert_eq!(personalize(&list, [ItemId(2)]), vec![ItemId(4), ItemId(9)]);
}

#[test]
fn user_based_examples() {
    assert_eq!(user_based_value(&[(1.0, 4.0, 3.5)], 3.0), Some(3.5));
    assert_eq!(user_based_value(&[(0.3, 4.0, 4.0), (0.2, 2.0, 2.0)], 3.2), Some(3.2));
    let v = user_based_value(&[(0.5, 4.0, 3.0), (0.5, 2.0, 3.0)], 2.7).unwrap();
    assert!((v - 2.7).abs() < 1e-12);
    assert_eq!(user_based_value(&[], 3.0), None);
}

#[test]
fn item_based_examples() {
    assert_eq!(item_based_value(&[(1.0, 4.0)]), Some(4.0));
    assert_eq!(item_based_value(&[(1.0, 2.0), (3.0, 4.0)]), Some(3.5));
    let v = item_based_value(&[(0.2, 3.0), (0.7, 3.0), (0.1, 3.0)]).unwrap();
    assert!((v - 3.0).abs() < 1e-12);
    assert_eq!(item_based_value(&[(0.0, 3.0)]), None);
}

fn prediction_fixture() -> (RecommendationGraph, GroupRatingStats, RankScoreVector) {
    let c = catalog(3, 4);
    let groups = GroupSet::from_members(vec![
        ("a".into(), vec![UserId(0), UserId(1)]),
        ("b".into(), vec![UserId(2), UserId(3)]),
    ])
    .unwrap();
    let ratings = vec![
        RatingRecord::new(UserId(0), ItemId(0), 3),
        RatingRecord::new(UserId(1), ItemId(0), 3),
        RatingRecord::new(UserId(2), ItemId(1), 5),
        RatingRecord::new(UserId(3), ItemId(0), 2),
    ];
    let stats = GroupRatingStats::new(&ratings, &groups, 4, 5).unwrap();
    let g = build_graph(&[topk(1, &[0]), topk(1, &[1])], &c, &groups, 1.0).unwrap();
    let s = rank_scores(&g, NodeRef::group(GroupId(0)), &RankConfig::default()).unwrap();
    (g, stats, s)
}

#[test]
fn predictions_pick_method() {
    let (g, stats, s) = prediction_fixture();
    let a = GroupId(0);
    let p = predict_user_based(a, ItemId(0), &s, &g, &stats, 0.4);
    assert_eq!((p.method, p.value), (PredictionMethod::GroupAverage, 3.0));
    // group b: mean 3.5, rated item 1 at 5 -> deviation 1.5 on target mean 3.0
    let p = predict_user_based(a, ItemId(1), &s, &g, &stats, 0.4);
    assert_eq!(p.method, PredictionMethod::UserBased);
    assert!((p.value - 4.5).abs() < 1e-12);
    // nobody popular on item 2 -> item-based over group a's items
    let p = predict_user_based(a, ItemId(2), &s, &g, &stats, 0.4);
    assert_eq!((p.method, p.value), (PredictionMethod::ItemBased, 3.0));
    let p = predict_item_based(GroupId(1), ItemId(0), &s, &g, &stats, 0.9);
    assert_eq!(p.method, PredictionMethod::GlobalMean);
    assert!((p.value - 13.0 / 4.0).abs() < 1e-12);
}

#[test]
fn prediction_stats() {
    let (_, stats, _) = prediction_fixture();
    assert_eq!(stats.popularity(GroupId(1), ItemId(0)), 0.5);
    assert_eq!(stats.group_mean(GroupId(1)), Some(3.5));
    assert_eq!(stats.item_mean(GroupId(0), ItemId(1)), None);
    assert_eq!(stats.popular_items(GroupId(1), 0.5), vec![ItemId(0), ItemId(1)]);
}

#[test]
fn personal_weights() {
    assert_eq!(personal_edge_weight(3.0, 3.0, 4.0), 1.0);
    assert!(personal_edge_weight(4.0, 3.0, 4.0) > 1.0);
    assert!(personal_edge_weight(2.0, 3.0, 4.0) < 1.0);
    // ratings {5, 3}: mean 4, squared deviations 2
    let w = personal_edge_weight(5.0, 4.0, 2.0);
    assert!((w - (1.0 / 2f64.sqrt()).exp()).abs() < 1e-15);
    assert!((w - 2.028).abs() < 1e-3);
    assert_eq!(personal_edge_weight(4.0, 4.0, 0.0), 1.0);
}

#[test]
fn personal_graph_structure() {
    let c = catalog(3, 2);
    let ratings = vec![
        RatingRecord::new(UserId(0), ItemId(0), 5),
        RatingRecord::new(UserId(0), ItemId(1), 3),
        RatingRecord::new(UserId(1), ItemId(2), 4),
    ];
    let profiles = vec![
        UserProfile { gender: Some(Gender::Male), age: Some(21), occupation: Some("writer".into()) },
        UserProfile { gender: Some(Gender::Male), age: None, occupation: None },
    ];
    let g = build_personal_graph(&ratings, &c, Some(&profiles)).unwrap();
    assert_eq!(g.count(NodeKind::User), 2);
    assert_eq!(g.count(NodeKind::Attribute), 3);
    let w = g.weight(NodeRef::user(UserId(0)), NodeRef::item(ItemId(0)));
    assert!((w - 2.028).abs() < 1e-3);
    assert_eq!(g.weight(NodeRef::item(ItemId(2)), NodeRef::user(UserId(1))), 1.0);
    let male = g.attribute_labels().iter().position(|l| l == "gender=M").unwrap();
    assert_eq!(g.weight(NodeRef::user(UserId(1)), NodeRef::attribute(male)), 1.0);
    assert_eq!(g.edge_count(), 2 * (3 + 4));
    assert!(build_personal_graph(&[], &c, None).is_err());
    let bare = build_personal_graph(&ratings, &c, None).unwrap();
    assert_eq!(bare.count(NodeKind::Attribute), 0);
}

#[test]
fn edge_csv_and_score_json() {
    let (g, _) = two_group_fixture();
    let mut buf = Vec::new();
    g.write_edges_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("src_type,src_id,dst_type,dst_id,weight"));
    assert_eq!(lines.count(), g.edge_count());
    assert!(text.contains("group,0,item,0,0.5"));

    let s = rank_scores(&g, NodeRef::group(GroupId(0)), &RankConfig::default()).unwrap();
    let back: RankScoreVector = serde_json::from_str(&s.to_json().unwrap()).unwrap();
    assert_eq!(back, s);
}

#[test]
fn associates_must_be_symmetric_in_graph() {
    let c = catalog(1, 3);
    let mut gs = Vec::new();
    for i in 0..3u32 {
        gs.push(Group {
            id: GroupId(i),
            label: format!("g{i}"),
            members: vec![UserId(i)],
            associates: Default::default(),
        });
    }
    let mut groups = GroupSet::new(gs).unwrap();
    groups.associate(GroupId(0), GroupId(2)).unwrap();
    let g = build_graph(&[topk(1, &[]), topk(1, &[]), topk(1, &[])], &c, &groups, 1.0).unwrap();
    assert_eq!(g.edge_count(), 2);
    assert_eq!(g.weight(NodeRef::group(GroupId(2)), NodeRef::group(GroupId(0))), 1.0);
}

fn random_graph() -> impl Strategy<Value = (usize, Vec<(usize, usize, f64)>, usize)> {
    (2usize..=50).prop_flat_map(|n| {
        let edge = (0..n, 0..n, 0.05f64..5.0);
        (
            Just(n),
            proptest::collection::vec(edge, 0..(3 * n)),
            0..n,
        )
    })
}

fn dedup_edges(edges: &[(usize, usize, f64)]) -> Vec<(usize, usize, f64)> {
    let mut seen = HashSet::new();
    edges
        .iter()
        .copied()
        .filter(|&(a, b, _)| a != b && seen.insert((a.min(b), a.max(b))))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn power_iteration_matches_dense_solve((n, edges, target) in random_graph(), beta in 0.05f64..0.95) {
        let g = plain(n, &dedup_edges(&edges));
        let cfg = RankConfig { damping: beta, epsilon: 1e-12, max_iterations: 5000 };
        let s = rank_scores(&g, NodeRef::group(GroupId::from(target)), &cfg).unwrap();
        prop_assert!(s.converged);
        let exact = dense_solve(&g, target, beta);
        for i in 0..n {
            prop_assert!((s.scores[i] - exact[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn scores_are_a_distribution((n, edges, target) in random_graph(), beta in 0.05f64..0.95) {
        let g = plain(n, &dedup_edges(&edges));
        let cfg = RankConfig { damping: beta, ..RankConfig::default() };
        let s = rank_scores(&g, NodeRef::group(GroupId::from(target)), &cfg).unwrap();
        prop_assert!((s.scores.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(s.scores.iter().all(|&x| x >= 0.0));
        prop_assert!(s.scores[target] >= 1.0 - beta - 1e-9);
        if s.converged {
            prop_assert!(residual(&g, &s, beta) <= cfg.epsilon);
        }
    }

    #[test]
    fn heavier_path_edge_never_lowers_item_score(w1 in 0.1f64..3.0, bump in 0.0f64..3.0, w_other in 0.1f64..3.0) {
        // 0 = target, 1 = hub, 2 = leaf reachable only via the hub, 3 = side node
        let base = plain(4, &[(0, 1, 1.0), (1, 2, w1), (0, 3, w_other)]);
        let heavier = plain(4, &[(0, 1, 1.0), (1, 2, w1 + bump), (0, 3, w_other)]);
        let cfg = RankConfig { epsilon: 1e-13, max_iterations: 10_000, ..RankConfig::default() };
        let t = NodeRef::group(GroupId(0));
        let a = rank_scores(&base, t, &cfg).unwrap();
        let b = rank_scores(&heavier, t, &cfg).unwrap();
        prop_assert!(b.scores[2] >= a.scores[2] - 1e-12);
    }
}
