//! Group-based privacy-preserving recommendation.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`exchange`]: members of a group pad and swap entries of their pairwise
//!    comparison matrices so the server only ever sees mixed preferences.
//! 2. [`aggregate`]: the server turns a group's mixed matrices into a top-k
//!    list (SCC-based Kemeny with a Borda fallback).
//! 3. [`recgraph`]: groups, items and tags form a weighted graph; a
//!    personalized random walk from each group ranks items.
//! 4. Members drop items they already rated, locally.
//!
//! [`data`] loads datasets and builds groups and folds; [`eval`] scores the
//! whole pipeline with percentile and recall.

pub mod aggregate;
pub mod data;
pub mod error;
pub mod eval;
pub mod exchange;
pub mod model;
pub mod recgraph;
pub mod seed;

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use aggregate::{aggregate_topk, AggregationConfig, TopKList};
pub use data::{DatasetBundle, GroupingStrategy, SplitPlan};
pub use error::{Error, Result};
pub use eval::{EvalConfig, EvalReport, Method};
pub use recgraph::{NodeKind, NodeRef, RankConfig, RankScoreVector, RecommendationGraph};
pub use model::{
    pairwise_from_ranking, pairwise_from_ratings, AgeBucket, Catalog, Gender, Group, GroupId,
    GroupSet, IdMap, ItemId, PairwiseComparisonMatrix, PartialRanking, RatingRecord, TagId,
    UserId, UserProfile,
};
