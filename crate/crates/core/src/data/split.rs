use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DatasetBundle;
use crate::error::{Error, Result};

/// K-fold partition of a bundle's rating indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub fold_count: usize,
    pub seed: u64,
    /// Rating indices held out in each fold.
    pub folds: Vec<Vec<usize>>,
    /// The top-rated subset of each fold, used as test items.
    pub test: Vec<Vec<usize>>,
}

impl SplitPlan {
    /// Rating indices outside fold `f`, ascending.
    pub fn train(&self, f: usize) -> Vec<usize> {
        let n: usize = self.folds.iter().map(Vec::len).sum();
        let mut held = vec![false; n];
        for &i in &self.folds[f] {
            held[i] = true;
        }
        (0..n).filter(|&i| !held[i]).collect()
    }
}

/// Shuffles rating indices with `seed` and cuts them into `fold_count`
/// near-equal folds. Each fold's test set keeps only ratings at the top of
/// the scale.
pub fn kfold_split(bundle: &DatasetBundle, fold_count: usize, seed: u64) -> Result<SplitPlan> {
    if fold_count < 2 {
        return Err(Error::config("eval.folds", format!("must be at least 2, got {fold_count}")));
    }
    let n = bundle.ratings.len();
    if n < fold_count {
        return Err(Error::Split(format!("{n} ratings cannot fill {fold_count} folds")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let top = bundle.catalog.rating_scale;
    let mut folds = Vec::with_capacity(fold_count);
    let mut test = Vec::with_capacity(fold_count);
    for f in 0..fold_count {
        let mut fold = idx[f * n / fold_count..(f + 1) * n / fold_count].to_vec();
        fold.sort_unstable();
        test.push(
            fold.iter()
                .copied()
                .filter(|&i| bundle.ratings[i].rating == top)
                .collect(),
        );
        folds.push(fold);
    }
    Ok(SplitPlan {
        fold_count,
        seed,
        folds,
        test,
    })
}
