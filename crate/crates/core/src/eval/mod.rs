//! Percentile and recall metrics, and cross-validated experiments over the
//! whole pipeline.

mod experiment;
mod metrics;

pub use experiment::{group_recommendations, group_topk, run_experiment, GroupPipeline};
pub use metrics::{item_percentile, percentile_score, positions_of, recall_at_k};

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::aggregate::AggregationConfig;
use crate::error::{Error, Result};
use crate::recgraph::RankConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Exchange, aggregation and group graph; no individual ratings leave a group.
    GroupPrivate,
    /// Individual ratings on a user-item-attribute graph.
    PersonalBaseline,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::GroupPrivate => "group_private",
            Method::PersonalBaseline => "personal_baseline",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "group_private" | "group" => Ok(Method::GroupPrivate),
            "personal_baseline" | "personal" => Ok(Method::PersonalBaseline),
            _ => Err(Error::config("eval.method", format!("unknown method {s:?}"))),
        }
    }
}

/// Seeds of the randomized stages. The grouping seed lives in the
/// grouping strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSeeds {
    pub split: u64,
    pub exchange: u64,
    pub padding: u64,
}

impl Default for EvalSeeds {
    fn default() -> Self {
        EvalSeeds {
            split: 1,
            exchange: 2,
            padding: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub folds: usize,
    /// Length `L` of the per-user recommendation list.
    pub list_length: usize,
    pub recall_ks: Vec<usize>,
    pub aggregation: AggregationConfig,
    pub rank: RankConfig,
    pub w_max: f64,
    /// Exchange deadline used inside each group.
    pub exchange_time: f64,
    pub seeds: EvalSeeds,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            folds: 5,
            list_length: 900,
            recall_ks: (1..=10).map(|i| 5 * i).collect(),
            aggregation: AggregationConfig::default(),
            rank: RankConfig::default(),
            w_max: 1.0,
            exchange_time: 1.0,
            seeds: EvalSeeds::default(),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::config("eval.folds", format!("must be at least 2, got {}", self.folds)));
        }
        if self.list_length == 0 {
            return Err(Error::config("eval.list_length", "must be at least 1"));
        }
        if self.recall_ks.iter().any(|&k| k == 0) {
            return Err(Error::config("eval.recall_ks", "every k must be at least 1"));
        }
        if !(self.w_max > 0.0 && self.w_max.is_finite()) {
            return Err(Error::config("rank.w_max", format!("must be positive, got {}", self.w_max)));
        }
        if !(self.exchange_time >= 0.0 && self.exchange_time.is_finite()) {
            return Err(Error::config(
                "exchange.t_threshold",
                format!("must be finite and >= 0, got {}", self.exchange_time),
            ));
        }
        self.aggregation.validate()?;
        self.rank.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    /// Mean over all test records of the fold.
    pub percentile: f64,
    pub recall: BTreeMap<usize, f64>,
    pub test_records: usize,
    /// Test records not present in the user's list.
    pub missing: usize,
    pub test_users: usize,
    /// Rank computations that hit the iteration cap.
    pub unconverged: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Method plus grouping, e.g. `group_private:occupation`.
    pub label: String,
    pub method: Method,
    pub strategy: Option<String>,
    pub list_length: usize,
    pub folds: Vec<FoldResult>,
    pub mean_percentile: f64,
    pub mean_recall: BTreeMap<usize, f64>,
    pub runtime_seconds: f64,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Flat rows `method,fold,metric,k,value`; fold `mean` holds the
    /// cross-fold averages. Runtime is left out so reruns are identical.
    pub fn write_csv<W: Write>(&self, out: W, header: bool) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        if header {
            w.write_record(["method", "fold", "metric", "k", "value"])?;
        }
        let mut rows = |fold: &str, pct: f64, recall: &BTreeMap<usize, f64>| -> Result<()> {
            w.write_record([self.label.as_str(), fold, "percentile", "", &pct.to_string()])?;
            for (k, v) in recall {
                w.write_record([self.label.as_str(), fold, "recall", &k.to_string(), &v.to_string()])?;
            }
            Ok(())
        };
        for f in &self.folds {
            rows(&f.fold.to_string(), f.percentile, &f.recall)?;
        }
        rows("mean", self.mean_percentile, &self.mean_recall)?;
        w.flush().map_err(|e| Error::io("<report csv>", e))?;
        Ok(())
    }
}
