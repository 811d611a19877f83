use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use grouprec_core::aggregate::AggregationConfig;
use grouprec_core::data::{load_generic, load_movielens, GenericSchema};
use grouprec_core::eval::{EvalConfig, EvalSeeds};
use grouprec_core::{DatasetBundle, Error, GroupingStrategy, RankConfig, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    /// Directory with `u.data`, `u.item`, `u.user`.
    Movielens,
    /// Delimited ratings file, described by `schema`.
    Generic,
    /// JSON dump of a loaded dataset.
    Bundle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub path: PathBuf,
    #[serde(default = "default_format")]
    pub format: DatasetFormat,
    /// `user,group` file for explicit grouping (generic format only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groups: Option<PathBuf>,
    /// `item,tag` file (generic format only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tags: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<GenericSchema>,
}

fn default_format() -> DatasetFormat {
    DatasetFormat::Movielens
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExchangeParams {
    pub t_threshold: f64,
    pub seed: u64,
    pub padding_seed: u64,
}

impl Default for ExchangeParams {
    fn default() -> Self {
        let s = EvalSeeds::default();
        ExchangeParams {
            t_threshold: 1.0,
            seed: s.exchange,
            padding_seed: s.padding,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RankParams {
    pub damping: f64,
    pub epsilon: f64,
    pub max_iterations: usize,
    pub w_max: f64,
}

impl Default for RankParams {
    fn default() -> Self {
        let r = RankConfig::default();
        RankParams {
            damping: r.damping,
            epsilon: r.epsilon,
            max_iterations: r.max_iterations,
            w_max: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalParams {
    pub folds: usize,
    pub list_length: usize,
    pub recall_ks: Vec<usize>,
    pub split_seed: u64,
}

impl Default for EvalParams {
    fn default() -> Self {
        let e = EvalConfig::default();
        EvalParams {
            folds: e.folds,
            list_length: e.list_length,
            recall_ks: e.recall_ks,
            split_seed: e.seeds.split,
        }
    }
}

/// Everything a run needs. Serialized verbatim into the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub dataset: Option<DatasetSpec>,
    pub grouping: GroupingStrategy,
    pub exchange: ExchangeParams,
    pub aggregation: AggregationConfig,
    pub rank: RankParams,
    pub eval: EvalParams,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: None,
            grouping: GroupingStrategy::ByOccupation,
            exchange: ExchangeParams::default(),
            aggregation: AggregationConfig::default(),
            rank: RankParams::default(),
            eval: EvalParams::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Flags that override the config file.
#[derive(Clone, Debug, Default, Args)]
pub struct Overrides {
    /// JSON run config; flags take precedence over its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub dataset: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<DatasetFormat>,
    #[arg(long, global = true)]
    pub groups_file: Option<PathBuf>,
    #[arg(long, global = true)]
    pub tags_file: Option<PathBuf>,
    /// gender | age | occupation | explicit | random:N[:SEED]
    #[arg(long, global = true)]
    pub grouping: Option<String>,
    #[arg(long, global = true)]
    pub t_threshold: Option<f64>,
    #[arg(long, global = true)]
    pub exchange_seed: Option<u64>,
    #[arg(long, global = true)]
    pub padding_seed: Option<u64>,
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub theta_scc: Option<usize>,
    #[arg(long, global = true)]
    pub theta_p: Option<f64>,
    #[arg(long, global = true)]
    pub damping: Option<f64>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    #[arg(long, global = true)]
    pub max_iterations: Option<usize>,
    #[arg(long, global = true)]
    pub w_max: Option<f64>,
    #[arg(long, global = true)]
    pub folds: Option<usize>,
    #[arg(long, global = true)]
    pub list_length: Option<usize>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub recall_ks: Option<Vec<usize>>,
    #[arg(long, global = true)]
    pub split_seed: Option<u64>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

fn set<T>(slot: &mut T, value: &Option<T>)
where
    T: Clone,
{
    if let Some(v) = value {
        *slot = v.clone();
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::config("config", format!("{} does not exist", path.display())),
            _ => Error::io(path, e),
        })?;
        serde_json::from_str(&text).map_err(|e| Error::config("config", format!("{}: {e}", path.display())))
    }

    /// Config file (if any) with flags applied on top, validated.
    pub fn resolve(o: &Overrides) -> Result<Self> {
        let mut c = match &o.config {
            Some(p) => Self::from_file(p)?,
            None => RunConfig::default(),
        };
        c.apply(o)?;
        c.validate()?;
        Ok(c)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(path) = &o.dataset {
            match &mut self.dataset {
                Some(d) => d.path = path.clone(),
                None => {
                    self.dataset = Some(DatasetSpec {
                        path: path.clone(),
                        format: default_format(),
                        groups: None,
                        tags: None,
                        schema: None,
                    })
                }
            }
        }
        if o.format.is_some() || o.groups_file.is_some() || o.tags_file.is_some() {
            let d = self
                .dataset
                .as_mut()
                .ok_or_else(|| Error::config("dataset.path", "dataset options given without a dataset"))?;
            set(&mut d.format, &o.format);
            if o.groups_file.is_some() {
                d.groups = o.groups_file.clone();
            }
            if o.tags_file.is_some() {
                d.tags = o.tags_file.clone();
            }
        }
        if let Some(g) = &o.grouping {
            self.grouping = g.parse()?;
        }
        set(&mut self.exchange.t_threshold, &o.t_threshold);
        set(&mut self.exchange.seed, &o.exchange_seed);
        set(&mut self.exchange.padding_seed, &o.padding_seed);
        set(&mut self.aggregation.k, &o.k);
        set(&mut self.aggregation.theta_scc, &o.theta_scc);
        set(&mut self.aggregation.theta_p, &o.theta_p);
        set(&mut self.rank.damping, &o.damping);
        set(&mut self.rank.epsilon, &o.epsilon);
        set(&mut self.rank.max_iterations, &o.max_iterations);
        set(&mut self.rank.w_max, &o.w_max);
        set(&mut self.eval.folds, &o.folds);
        set(&mut self.eval.list_length, &o.list_length);
        set(&mut self.eval.recall_ks, &o.recall_ks);
        set(&mut self.eval.split_seed, &o.split_seed);
        set(&mut self.output_dir, &o.out);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(d) = &self.dataset {
            let exists = |param: &str, p: &Path| {
                if p.exists() {
                    Ok(())
                } else {
                    Err(Error::config(param, format!("{} does not exist", p.display())))
                }
            };
            exists("dataset.path", &d.path)?;
            if let Some(p) = &d.groups {
                exists("dataset.groups", p)?;
            }
            if let Some(p) = &d.tags {
                exists("dataset.tags", p)?;
            }
            let generic_only = d.groups.is_some() || d.tags.is_some() || d.schema.is_some();
            if generic_only && d.format != DatasetFormat::Generic {
                return Err(Error::config(
                    "dataset.format",
                    "groups, tags and schema apply to the generic format only",
                ));
            }
        }
        if let GroupingStrategy::Random { count: 0, .. } = self.grouping {
            return Err(Error::config("grouping", "random grouping needs at least one group"));
        }
        self.eval_config().validate()
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            folds: self.eval.folds,
            list_length: self.eval.list_length,
            recall_ks: self.eval.recall_ks.clone(),
            aggregation: self.aggregation.clone(),
            rank: RankConfig {
                damping: self.rank.damping,
                epsilon: self.rank.epsilon,
                max_iterations: self.rank.max_iterations,
            },
            w_max: self.rank.w_max,
            exchange_time: self.exchange.t_threshold,
            seeds: EvalSeeds {
                split: self.eval.split_seed,
                exchange: self.exchange.seed,
                padding: self.exchange.padding_seed,
            },
        }
    }

    pub fn load_dataset(&self) -> Result<DatasetBundle> {
        let d = self
            .dataset
            .as_ref()
            .ok_or_else(|| Error::Usage("this command needs --dataset or a `dataset` config entry".into()))?;
        match d.format {
            DatasetFormat::Movielens => load_movielens(&d.path),
            DatasetFormat::Bundle => DatasetBundle::load_json(&d.path),
            DatasetFormat::Generic => {
                let schema = d.schema.clone().unwrap_or_else(GenericSchema::csv);
                load_generic(&d.path, d.groups.as_deref(), d.tags.as_deref(), &schema)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;

    #[derive(Parser)]
    struct T {
        #[command(flatten)]
        o: Overrides,
    }

    fn flags(args: &[&str]) -> Overrides {
        T::parse_from(std::iter::once("t").chain(args.iter().copied())).o
    }

    #[test]
    fn empty_config_has_defaults() {
        let c: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.rank.damping, 0.85);
        assert_eq!(c.aggregation.theta_p, 0.01);
        assert_eq!(c.eval.folds, 5);
        assert_eq!(c.eval.list_length, 900);
        assert_eq!(c.aggregation.k, 500);
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"rank": {"beta": 0.5}}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"colour": 1}"#).is_err());
    }

    #[test]
    fn range_errors_name_the_parameter() {
        let mut c = RunConfig::default();
        c.aggregation.theta_p = 1.5;
        match c.validate() {
            Err(Error::Config { param, .. }) => assert_eq!(param, "aggregation.theta_p"),
            other => panic!("{other:?}"),
        }
        let mut c = RunConfig::default();
        c.rank.damping = 1.0;
        assert!(matches!(c.validate(), Err(Error::Config { param, .. }) if param == "rank.damping"));
    }

    #[test]
    fn flag_beats_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"aggregation": {"k": 50, "theta_p": 0.2}, "eval": {"folds": 3}}"#).unwrap();
        let o = flags(&["--config", path.to_str().unwrap(), "--k", "7", "--grouping", "random:4:9"]);
        let c = RunConfig::resolve(&o).unwrap();
        assert_eq!(c.aggregation.k, 7);
        assert_eq!(c.aggregation.theta_p, 0.2);
        assert_eq!(c.eval.folds, 3);
        assert_eq!(c.grouping, GroupingStrategy::Random { count: 4, seed: 9 });
    }

    #[test]
    fn missing_paths_rejected() {
        let o = flags(&["--dataset", "/definitely/not/here"]);
        assert!(matches!(RunConfig::resolve(&o), Err(Error::Config { param, .. }) if param == "dataset.path"));
    }

    #[test]
    fn round_trips_through_json() {
        let mut c = RunConfig::default();
        c.grouping = GroupingStrategy::Random { count: 3, seed: 1 };
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
