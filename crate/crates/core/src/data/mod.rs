//! Dataset ingestion, grouping and cross-validation splits.

mod generic;
mod grouping;
mod movielens;
mod split;

pub use generic::{load_generic, ColumnRef, GenericSchema};
pub use grouping::{group_users, GroupingStrategy, UNKNOWN_GROUP};
pub use movielens::{load_movielens, MOVIELENS_GENRES};
pub use split::{kfold_split, SplitPlan};

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Catalog, Gender, RatingRecord, UserId, UserProfile};

/// Everything the pipeline needs from a dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetBundle {
    pub catalog: Catalog,
    pub ratings: Vec<RatingRecord>,
    /// One profile per user, or none at all.
    pub profiles: Option<Vec<UserProfile>>,
    /// Precomputed group label per user (`None` for unlabelled users).
    pub explicit_groups: Option<Vec<Option<String>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n_users: usize,
    pub n_items: usize,
    pub n_ratings: usize,
    pub n_tags: usize,
    pub male: usize,
    pub female: usize,
}

impl DatasetBundle {
    pub fn new(
        catalog: Catalog,
        ratings: Vec<RatingRecord>,
        profiles: Option<Vec<UserProfile>>,
        explicit_groups: Option<Vec<Option<String>>>,
    ) -> Result<Self> {
        let b = DatasetBundle {
            catalog,
            ratings,
            profiles,
            explicit_groups,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.catalog;
        let mut seen = HashSet::with_capacity(self.ratings.len());
        for r in &self.ratings {
            if r.user.index() >= c.n_users() || !c.contains_item(r.item) {
                return Err(Error::DataIntegrity(format!(
                    "rating ({}, {}) references an unknown user or item",
                    r.user, r.item
                )));
            }
            if r.rating == 0 || r.rating > c.rating_scale {
                return Err(Error::DataIntegrity(format!(
                    "rating {} outside 1..={}",
                    r.rating, c.rating_scale
                )));
            }
            if !seen.insert((r.user, r.item)) {
                return Err(Error::DataIntegrity(format!(
                    "user {} rated item {} twice",
                    r.user, r.item
                )));
            }
        }
        if let Some(p) = &self.profiles {
            if p.len() != c.n_users() {
                return Err(Error::DataIntegrity(format!(
                    "{} profiles for {} users",
                    p.len(),
                    c.n_users()
                )));
            }
        }
        if let Some(g) = &self.explicit_groups {
            if g.len() != c.n_users() {
                return Err(Error::DataIntegrity(format!(
                    "{} group labels for {} users",
                    g.len(),
                    c.n_users()
                )));
            }
        }
        Ok(())
    }

    /// Ratings made by each user, indexed by user.
    pub fn ratings_by_user(&self) -> Vec<Vec<RatingRecord>> {
        let mut out = vec![Vec::new(); self.catalog.n_users()];
        for r in &self.ratings {
            out[r.user.index()].push(*r);
        }
        out
    }

    pub fn user(&self, external: &str) -> Option<UserId> {
        self.catalog.users.dense(external).map(UserId)
    }

    pub fn summary(&self) -> DatasetSummary {
        let count = |g| {
            self.profiles
                .iter()
                .flatten()
                .filter(|p| p.gender == Some(g))
                .count()
        };
        DatasetSummary {
            n_users: self.catalog.n_users(),
            n_items: self.catalog.n_items(),
            n_ratings: self.ratings.len(),
            n_tags: self.catalog.n_tags(),
            male: count(Gender::Male),
            female: count(Gender::Female),
        }
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(BufWriter::new(f), self)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let b: DatasetBundle = serde_json::from_reader(BufReader::new(f))?;
        b.validate()?;
        Ok(b)
    }
}

/// Reads a whole file as Latin-1 text.
pub(crate) fn read_latin1(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile { path: path.to_path_buf() }
        } else {
            Error::io(path, e)
        }
    })?;
    Ok(bytes.iter().map(|&b| b as char).collect())
}

#[cfg(test)]
mod tests;
