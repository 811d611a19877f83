//! Inter-group recommendation over a heterogeneous weighted graph.

mod personal;
mod predict;
mod rank;

pub use personal::{build_personal_graph, personal_edge_weight};
pub use predict::{
    item_based_value, predict_item_based, predict_user_based, user_based_value, GroupRatingStats,
    Prediction, PredictionMethod,
};
pub use rank::{
    personalize, rank_scores, rank_scores_with, recommend, transition_operator, RankConfig,
    RankScoreVector, TransitionOperator,
};

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::aggregate::TopKList;
use crate::error::{Error, Result};
use crate::model::{Catalog, GroupId, GroupSet, ItemId, TagId, UserId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Group,
    Item,
    Tag,
    User,
    Attribute,
}

impl NodeKind {
    const ALL: [NodeKind; 5] = [
        NodeKind::Group,
        NodeKind::Item,
        NodeKind::Tag,
        NodeKind::User,
        NodeKind::Attribute,
    ];

    pub fn label(self) -> &'static str {
        match self {
            NodeKind::Group => "group",
            NodeKind::Item => "item",
            NodeKind::Tag => "tag",
            NodeKind::User => "user",
            NodeKind::Attribute => "attribute",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

/// A typed node: kind plus the dense id within that kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeRef {
    pub kind: NodeKind,
    pub index: u32,
}

impl NodeRef {
    pub fn group(g: GroupId) -> Self {
        NodeRef { kind: NodeKind::Group, index: g.0 }
    }

    pub fn item(i: ItemId) -> Self {
        NodeRef { kind: NodeKind::Item, index: i.0 }
    }

    pub fn tag(t: TagId) -> Self {
        NodeRef { kind: NodeKind::Tag, index: t.0 }
    }

    pub fn user(u: UserId) -> Self {
        NodeRef { kind: NodeKind::User, index: u.0 }
    }

    pub fn attribute(a: usize) -> Self {
        NodeRef { kind: NodeKind::Attribute, index: a as u32 }
    }
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.label(), self.index)
    }
}

/// Weighted directed graph over groups, items, tags, users and attribute
/// values. Nodes are laid out kind by kind; edges are stored per source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecommendationGraph {
    counts: [usize; 5],
    offsets: [usize; 5],
    attribute_labels: Vec<String>,
    adj: Vec<Vec<(u32, f64)>>,
    w_max: f64,
}

impl RecommendationGraph {
    /// Graph without edges. Attribute nodes take their count from
    /// `attribute_labels`.
    pub fn with_nodes(
        groups: usize,
        items: usize,
        tags: usize,
        users: usize,
        attribute_labels: Vec<String>,
        w_max: f64,
    ) -> Self {
        let counts = [groups, items, tags, users, attribute_labels.len()];
        let mut offsets = [0; 5];
        let mut acc = 0;
        for k in 0..5 {
            offsets[k] = acc;
            acc += counts[k];
        }
        RecommendationGraph {
            counts,
            offsets,
            attribute_labels,
            adj: vec![Vec::new(); acc],
            w_max,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.adj.len()
    }

    pub fn count(&self, kind: NodeKind) -> usize {
        self.counts[kind.slot()]
    }

    pub fn w_max(&self) -> f64 {
        self.w_max
    }

    pub fn attribute_labels(&self) -> &[String] {
        &self.attribute_labels
    }

    /// Position of a typed node in score vectors, if it exists.
    pub fn node_index(&self, node: NodeRef) -> Option<usize> {
        let k = node.kind.slot();
        ((node.index as usize) < self.counts[k]).then(|| self.offsets[k] + node.index as usize)
    }

    pub fn node_ref(&self, index: usize) -> NodeRef {
        assert!(index < self.n_nodes(), "node {index} out of range");
        let k = (0..5).rev().find(|&k| self.offsets[k] <= index && self.counts[k] > 0).unwrap();
        NodeRef {
            kind: NodeKind::ALL[k],
            index: (index - self.offsets[k]) as u32,
        }
    }

    /// Slice of node positions holding nodes of `kind`.
    pub fn range(&self, kind: NodeKind) -> std::ops::Range<usize> {
        let k = kind.slot();
        self.offsets[k]..self.offsets[k] + self.counts[k]
    }

    pub fn out_edges(&self, index: usize) -> &[(u32, f64)] {
        &self.adj[index]
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }

    pub fn weight(&self, from: NodeRef, to: NodeRef) -> f64 {
        match (self.node_index(from), self.node_index(to)) {
            (Some(a), Some(b)) => self.adj[a]
                .iter()
                .find(|&&(t, _)| t as usize == b)
                .map_or(0.0, |&(_, w)| w),
            _ => 0.0,
        }
    }

    /// Whether any group-item edge exists.
    pub fn has_cf_edges(&self) -> bool {
        self.range(NodeKind::Group).any(|g| {
            self.adj[g]
                .iter()
                .any(|&(t, _)| self.range(NodeKind::Item).contains(&(t as usize)))
        })
    }

    /// Adds `a -> b` and `b -> a` with weight `w`.
    pub fn add_edge(&mut self, a: NodeRef, b: NodeRef, w: f64) -> Result<()> {
        let (ia, ib) = match (self.node_index(a), self.node_index(b)) {
            (Some(ia), Some(ib)) => (ia, ib),
            _ => return Err(Error::DataIntegrity(format!("edge {a} - {b} references an unknown node"))),
        };
        if ia == ib {
            return Err(Error::Domain(format!("self-loop on {a}")));
        }
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::Domain(format!("edge {a} - {b} has weight {w}")));
        }
        self.adj[ia].push((ib as u32, w));
        self.adj[ib].push((ia as u32, w));
        Ok(())
    }

    fn external_id(&self, node: NodeRef) -> String {
        match node.kind {
            NodeKind::Attribute => self.attribute_labels[node.index as usize].clone(),
            _ => node.index.to_string(),
        }
    }

    /// Edge list as CSV: `src_type,src_id,dst_type,dst_id,weight`.
    pub fn write_edges_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["src_type", "src_id", "dst_type", "dst_id", "weight"])?;
        for (src, edges) in self.adj.iter().enumerate() {
            let s = self.node_ref(src);
            for &(dst, weight) in edges {
                let d = self.node_ref(dst as usize);
                w.write_record([
                    s.kind.label(),
                    &self.external_id(s),
                    d.kind.label(),
                    &self.external_id(d),
                    &weight.to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io("<edge csv>", e))?;
        Ok(())
    }
}

/// Weight of the edge between a group and the item at 1-based `rank` of its
/// top-k list; 0 when the item is not listed (`rank > k`).
pub fn group_item_weight(rank: usize, k: usize, w_max: f64) -> f64 {
    if rank == 0 || rank > k {
        return 0.0;
    }
    (k + 1 - rank) as f64 / k as f64 * w_max
}

/// Builds the group graph: group-item edges from each group's top-k list,
/// item-tag edges from the catalog, and weight-1 edges between associates.
///
/// `topk_lists[g]` belongs to group `g`.
pub fn build_graph(
    topk_lists: &[TopKList],
    catalog: &Catalog,
    groups: &GroupSet,
    w_max: f64,
) -> Result<RecommendationGraph> {
    if !(w_max > 0.0 && w_max.is_finite()) {
        return Err(Error::config("rank.w_max", format!("must be positive, got {w_max}")));
    }
    if topk_lists.len() != groups.len() {
        return Err(Error::DataIntegrity(format!(
            "{} top-k lists for {} groups",
            topk_lists.len(),
            groups.len()
        )));
    }
    let mut g = RecommendationGraph::with_nodes(groups.len(), catalog.n_items(), catalog.n_tags(), 0, Vec::new(), w_max);
    for (gi, list) in topk_lists.iter().enumerate() {
        let group = NodeRef::group(GroupId::from(gi));
        for (pos, item) in list.items().enumerate() {
            if !catalog.contains_item(item) {
                return Err(Error::DataIntegrity(format!("top-k item {item} not in catalog")));
            }
            let w = group_item_weight(pos + 1, list.k, w_max);
            if w > 0.0 {
                g.add_edge(group, NodeRef::item(item), w)?;
            }
        }
    }
    for i in 0..catalog.n_items() {
        let item = ItemId::from(i);
        for &t in catalog.tags_of(item) {
            g.add_edge(NodeRef::item(item), NodeRef::tag(t), 1.0)?;
        }
    }
    for group in groups.groups() {
        for &other in &group.associates {
            if other > group.id {
                g.add_edge(NodeRef::group(group.id), NodeRef::group(other), 1.0)?;
            }
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests;
