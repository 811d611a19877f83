use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DatasetBundle;
use crate::error::{Error, Result};
use crate::model::{GroupSet, UserId, UserProfile};

/// Label of the group collecting users whose attribute is missing.
pub const UNKNOWN_GROUP: &str = "unknown";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GroupingStrategy {
    ByGender,
    ByAge,
    ByOccupation,
    /// Seeded shuffle, then round-robin into `count` groups.
    Random { count: usize, seed: u64 },
    /// The bundle's precomputed labels.
    Explicit,
}

impl GroupingStrategy {
    pub fn name(&self) -> String {
        match self {
            GroupingStrategy::ByGender => "gender".into(),
            GroupingStrategy::ByAge => "age".into(),
            GroupingStrategy::ByOccupation => "occupation".into(),
            GroupingStrategy::Random { count, .. } => format!("random{count}"),
            GroupingStrategy::Explicit => "explicit".into(),
        }
    }
}

impl fmt::Display for GroupingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupingStrategy::Random { count, seed } => write!(f, "random:{count}:{seed}"),
            other => f.write_str(&other.name()),
        }
    }
}

/// `gender`, `age`, `occupation`, `explicit`, `random:COUNT` or
/// `random:COUNT:SEED`.
impl FromStr for GroupingStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let bad = || Error::config("grouping", format!("unknown grouping strategy {s:?}"));
        match parts.as_slice() {
            ["gender" | "by_gender"] => Ok(GroupingStrategy::ByGender),
            ["age" | "by_age"] => Ok(GroupingStrategy::ByAge),
            ["occupation" | "by_occupation"] => Ok(GroupingStrategy::ByOccupation),
            ["explicit"] => Ok(GroupingStrategy::Explicit),
            ["random", count, rest @ ..] if rest.len() <= 1 => {
                let count = count.parse().map_err(|_| bad())?;
                let seed = match rest.first() {
                    Some(x) => x.parse().map_err(|_| bad())?,
                    None => 0,
                };
                Ok(GroupingStrategy::Random { count, seed })
            }
            _ => Err(bad()),
        }
    }
}

/// Groups users by `(order, label)`; `None` goes to the unknown group.
fn by_label(labels: Vec<Option<(usize, String)>>) -> Result<GroupSet> {
    let mut buckets: BTreeMap<(usize, String), Vec<UserId>> = BTreeMap::new();
    for (u, l) in labels.into_iter().enumerate() {
        let key = l.unwrap_or((usize::MAX, UNKNOWN_GROUP.to_string()));
        buckets.entry(key).or_default().push(UserId::from(u));
    }
    GroupSet::from_members(buckets.into_iter().map(|((_, l), m)| (l, m)).collect())
}

fn unordered(label: Option<String>) -> Option<(usize, String)> {
    label.map(|l| (0, l))
}

fn profiles<'a>(bundle: &'a DatasetBundle, what: &str) -> Result<&'a [UserProfile]> {
    bundle
        .profiles
        .as_deref()
        .ok_or_else(|| Error::Strategy(format!("grouping by {what} needs user profiles, dataset has none")))
}

/// Partitions every user of the bundle into groups.
///
/// Profile-based strategies put users lacking the attribute in an
/// `unknown` group, listed last. Other groups are ordered by attribute
/// (gender and occupation alphabetically, age by bucket).
pub fn group_users(bundle: &DatasetBundle, strategy: &GroupingStrategy) -> Result<GroupSet> {
    let n = bundle.catalog.n_users();
    match strategy {
        GroupingStrategy::ByGender => {
            let p = profiles(bundle, "gender")?;
            by_label(p.iter().map(|x| unordered(x.gender.map(|g| g.label().to_string()))).collect())
        }
        GroupingStrategy::ByAge => {
            let p = profiles(bundle, "age")?;
            by_label(
                p.iter()
                    .map(|x| x.age_bucket().map(|b| (b as usize, b.label().to_string())))
                    .collect(),
            )
        }
        GroupingStrategy::ByOccupation => {
            let p = profiles(bundle, "occupation")?;
            by_label(p.iter().map(|x| unordered(x.occupation.clone())).collect())
        }
        GroupingStrategy::Random { count, seed } => {
            if *count == 0 || *count > n {
                return Err(Error::Strategy(format!(
                    "cannot split {n} users into {count} random groups"
                )));
            }
            let mut users: Vec<UserId> = (0..n).map(UserId::from).collect();
            users.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
            let mut parts: Vec<(String, Vec<UserId>)> =
                (0..*count).map(|i| (format!("random-{}", i + 1), Vec::new())).collect();
            for (i, u) in users.into_iter().enumerate() {
                parts[i % count].1.push(u);
            }
            GroupSet::from_members(parts)
        }
        GroupingStrategy::Explicit => {
            let labels = bundle
                .explicit_groups
                .clone()
                .ok_or_else(|| Error::Strategy("dataset has no explicit group labels".into()))?;
            by_label(labels.into_iter().map(unordered).collect())
        }
    }
}
