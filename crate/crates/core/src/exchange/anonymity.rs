//! Anonymity of exchanged records.
//!
//! A single record performs a lazy random walk on the complete graph of group
//! members. Its transition matrix has one eigenvalue 1 and `N - 1` copies of
//! `1 - 2 / (n'(N-1))`, so `P^t` has a rank-one closed form and the
//! location distribution converges to uniform.

use serde::{Deserialize, Serialize};

use super::{provenance_distribution, simulate_exchange, ExchangeConfig};
use crate::error::{Error, Result};
use crate::model::{Group, GroupId, PairwiseComparisonMatrix, UserId};
use crate::seed::derive_seed;

/// Transition matrix of one record's walk over `N` members when `n' = n(n-1)`
/// entries are exchanged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionModel {
    pub group_size: usize,
    pub n_prime: u64,
    /// Row-major `N x N`.
    pub matrix: Vec<f64>,
}

pub fn transition_model(group_size: usize, n_items: usize) -> Result<TransitionModel> {
    if group_size < 2 {
        return Err(Error::Domain(format!("group size must be >= 2, got {group_size}")));
    }
    if n_items < 2 {
        return Err(Error::Domain(format!("item count must be >= 2, got {n_items}")));
    }
    let big_n = group_size as f64;
    let n_prime = (n_items as u64) * (n_items as u64 - 1);
    let np = n_prime as f64;
    let stay = 1.0 - (2.0 / big_n) * (1.0 / np);
    let move_to = (1.0 / np) * (1.0 / big_n) * (2.0 / (big_n - 1.0));
    let mut matrix = vec![move_to; group_size * group_size];
    for i in 0..group_size {
        matrix[i * group_size + i] = stay;
    }
    Ok(TransitionModel {
        group_size,
        n_prime,
        matrix,
    })
}

impl TransitionModel {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.group_size + j]
    }

    /// The repeated eigenvalue `1 - 2 / (n'(N-1))`.
    pub fn lambda2(&self) -> f64 {
        1.0 - 2.0 / (self.n_prime as f64 * (self.group_size as f64 - 1.0))
    }

    /// `{1, lambda2 x (N-1)}`, descending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v = vec![self.lambda2(); self.group_size];
        v[0] = 1.0;
        v
    }

    /// Smallest tick count with `lambda2^t < tolerance`.
    pub fn mixing_steps(&self, tolerance: f64) -> u64 {
        let l2 = self.lambda2();
        if l2 <= 0.0 {
            return 1;
        }
        let t = (tolerance.ln() / l2.ln()).floor() as u64 + 1;
        t.max(1)
    }
}

fn check_origin(model: &TransitionModel, origin: usize) -> Result<()> {
    if origin >= model.group_size {
        return Err(Error::Domain(format!(
            "origin {origin} outside group of {}",
            model.group_size
        )));
    }
    Ok(())
}

/// Location distribution of a record from `origin` after `t` clock ticks,
/// `P^t e_origin`, via `P^t = J/N + lambda2^(t-1) (P - J/N)` for `t >= 1`.
pub fn distribution_at(model: &TransitionModel, t: u64, origin: usize) -> Result<Vec<f64>> {
    check_origin(model, origin)?;
    let size = model.group_size;
    let mut out = vec![0.0; size];
    if t == 0 {
        out[origin] = 1.0;
        return Ok(out);
    }
    let uniform = 1.0 / size as f64;
    let decay = model.lambda2().powf((t - 1) as f64);
    for (j, o) in out.iter_mut().enumerate() {
        *o = uniform + decay * (model.get(j, origin) - uniform);
    }
    Ok(out)
}

/// Location distribution after continuous time `time`: the tick count is
/// Poisson with mean `N * time`, so the decay factor becomes
/// `E[lambda2^K] = exp(-N * time * (1 - lambda2))`.
pub fn distribution_after_time(model: &TransitionModel, time: f64, origin: usize) -> Result<Vec<f64>> {
    check_origin(model, origin)?;
    if !(time.is_finite() && time >= 0.0) {
        return Err(Error::Domain(format!("time must be finite and >= 0, got {time}")));
    }
    let size = model.group_size;
    let uniform = 1.0 / size as f64;
    let decay = (-expected_ticks(size, time) * (1.0 - model.lambda2())).exp();
    Ok((0..size)
        .map(|j| {
            let point = if j == origin { 1.0 } else { 0.0 };
            uniform + decay * (point - uniform)
        })
        .collect())
}

/// Expected number of global clock ticks before `t_threshold`.
pub fn expected_ticks(group_size: usize, t_threshold: f64) -> f64 {
    group_size as f64 * t_threshold
}

/// Effective anonymity set size `2^H(p)`, entropy in bits with `0 log 0 = 0`.
pub fn effective_anonymity(distribution: &[f64]) -> Result<f64> {
    if let Some(p) = distribution.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::Domain(format!("probability {p} is not a non-negative number")));
    }
    let total: f64 = distribution.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("probabilities sum to {total}, not 1")));
    }
    let entropy: f64 = distribution
        .iter()
        .map(|p| p / total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum();
    Ok(entropy.exp2())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnonymityReport {
    pub time: f64,
    pub distribution: Vec<f64>,
    pub effective_size: f64,
}

/// Closed-form anonymity at each tick count in `steps`.
pub fn anonymity_series(
    model: &TransitionModel,
    origin: usize,
    steps: impl IntoIterator<Item = u64>,
) -> Result<Vec<AnonymityReport>> {
    steps
        .into_iter()
        .map(|t| {
            let distribution = distribution_at(model, t, origin)?;
            let effective_size = effective_anonymity(&distribution)?;
            Ok(AnonymityReport {
                time: t as f64,
                distribution,
                effective_size,
            })
        })
        .collect()
}

/// Monte Carlo estimate of where records from member slot `origin` sit at
/// `time`, averaged over `replicas` independently seeded exchange runs and
/// pooled over every entry (or just `entry` when given).
pub fn empirical_provenance(
    group_size: usize,
    n_items: usize,
    origin: usize,
    entry: Option<(usize, usize)>,
    time: f64,
    replicas: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if replicas == 0 {
        return Err(Error::Domain("at least one replica is required".into()));
    }
    let group = Group {
        id: GroupId(0),
        label: "replica".into(),
        members: (0..group_size).map(UserId::from).collect(),
        associates: Default::default(),
    };
    let mut sum = vec![0.0; group_size];
    for r in 0..replicas {
        let matrices = group
            .members
            .iter()
            .map(|&u| PairwiseComparisonMatrix::new(u, n_items))
            .collect();
        let config = ExchangeConfig {
            t_threshold: time,
            seed: derive_seed(seed, &[r as u64]),
            group: group.clone(),
            track_provenance: true,
        };
        let outcome = simulate_exchange(matrices, &config)?;
        let dist = provenance_distribution(&outcome, origin, entry)?;
        for (s, d) in sum.iter_mut().zip(dist) {
            *s += d;
        }
    }
    Ok(sum.into_iter().map(|s| s / replicas as f64).collect())
}
