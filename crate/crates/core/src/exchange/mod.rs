//! Peer-to-peer preference exchange inside a group.
//!
//! Each member pads their comparison matrix with symmetric 1s, then members
//! repeatedly swap single matrix entries with random peers on the ticks of a
//! rate-`N` Poisson clock. After the deadline every member clears symmetric
//! pairs and uploads what it holds. The entry-wise sum over the group is
//! invariant under every swap.

mod anonymity;

pub use anonymity::{
    anonymity_series, distribution_after_time, distribution_at, effective_anonymity,
    empirical_provenance, expected_ticks, transition_model, AnonymityReport, TransitionModel,
};

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Group, ItemId, PairwiseComparisonMatrix, UserId};

/// Inserts symmetric 1s so the matrix holds as many 1s as 0s off the diagonal.
///
/// With `c` unordered pairs carrying exactly one preference, the number of
/// padded pairs is `floor((n(n-1)/2 - c) / 2)`, chosen uniformly among the
/// uncompared pairs. Returns the padded matrix and that count.
pub fn pad_matrix<R: Rng + ?Sized>(
    m: &PairwiseComparisonMatrix,
    rng: &mut R,
) -> Result<(PairwiseComparisonMatrix, usize)> {
    let n = m.n();
    let t = m.transpose();
    let both = m.zip_words(&t, |a, b| a & b);
    if let Some((x, y)) = both.iter().next() {
        return Err(Error::DataIntegrity(format!(
            "matrix of user {} already has a symmetric pair ({},{})",
            m.owner(),
            x.min(y),
            x.max(y)
        )));
    }
    let compared = m.count_ones() as usize;
    let seen = m.zip_words(&t, |a, b| a | b);
    let pairs = n * n.saturating_sub(1) / 2;
    let p = (pairs - compared) / 2;
    let mut remaining = pairs - compared;
    let mut needed = p;
    let mut upper = PairwiseComparisonMatrix::new(m.owner(), n);
    // Selection sampling over the uncompared pairs in row-major order.
    'outer: for x in 0..n {
        let mut y = x + 1;
        while y < n {
            let len = (n - y).min(64);
            let mut free = !seen.segment(x * n + y, len);
            if len < 64 {
                free &= (1u64 << len) - 1;
            }
            while free != 0 {
                if needed == 0 {
                    break 'outer;
                }
                let b = free.trailing_zeros() as usize;
                free &= free - 1;
                if draw_below(rng, remaining) < needed {
                    upper.set(x, y + b, true);
                    needed -= 1;
                }
                remaining -= 1;
            }
            y += len;
        }
    }
    if needed != 0 {
        return Err(Error::Internal(format!(
            "padding left {needed} of {p} pairs unplaced"
        )));
    }
    let mirrored = upper.transpose();
    let out = m.zip_words(&upper, |a, b| a | b).zip_words(&mirrored, |a, b| a | b);
    Ok((out, p))
}

/// Uniform in `0..bound`, drawing 32 bits when that suffices.
#[inline]
fn draw_below<R: Rng + ?Sized>(rng: &mut R, bound: usize) -> usize {
    match u32::try_from(bound) {
        Ok(b) => rng.random_range(0..b) as usize,
        Err(_) => rng.random_range(0..bound),
    }
}

/// Clears every unordered pair where both `(x,y)` and `(y,x)` are set.
pub fn cleanup(m: &PairwiseComparisonMatrix) -> PairwiseComparisonMatrix {
    m.zip_words(&m.transpose(), |a, b| a & !b)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExchangeConfig {
    /// Synchronized deadline `T_th`, in clock time units.
    pub t_threshold: f64,
    pub seed: u64,
    pub group: Group,
    /// Carry the original owner of every entry along with its value.
    #[serde(default)]
    pub track_provenance: bool,
}

impl ExchangeConfig {
    pub fn new(group: Group, t_threshold: f64, seed: u64) -> Self {
        ExchangeConfig {
            t_threshold,
            seed,
            group,
            track_provenance: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_threshold.is_finite() && self.t_threshold >= 0.0) {
            return Err(Error::config(
                "exchange.t_threshold",
                format!("must be finite and >= 0, got {}", self.t_threshold),
            ));
        }
        if self.group.size() < 2 {
            return Err(Error::config(
                "exchange.group",
                format!("exchange needs at least 2 members, group `{}` has {}", self.group.label, self.group.size()),
            ));
        }
        Ok(())
    }
}

/// One swap: `initiator` and `partner` trade their values at `(item_x, item_y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExchangeEvent {
    pub time: f64,
    pub initiator: UserId,
    pub partner: UserId,
    pub item_x: ItemId,
    pub item_y: ItemId,
}

/// Origin labels: `labels[member][x * n + y]` is the index (into the group's
/// member list) of the member who owned that entry before the exchange.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub n: usize,
    pub labels: Vec<Vec<u32>>,
}

#[derive(Clone, Debug)]
pub struct ExchangeOutcome {
    pub matrices: Vec<PairwiseComparisonMatrix>,
    pub events: Vec<ExchangeEvent>,
    pub provenance: Option<Provenance>,
}

/// Runs the exchange protocol until `config.t_threshold`.
///
/// `matrices[i]` must belong to `config.group.members[i]`. Ticks come from a
/// single rate-`N` Poisson process; each tick picks a uniform initiator, a
/// uniform other member and a uniform ordered off-diagonal position.
pub fn simulate_exchange(
    matrices: Vec<PairwiseComparisonMatrix>,
    config: &ExchangeConfig,
) -> Result<ExchangeOutcome> {
    config.validate()?;
    let members = &config.group.members;
    let size = members.len();
    if matrices.len() != size {
        return Err(Error::DataIntegrity(format!(
            "{} matrices for a group of {size}",
            matrices.len()
        )));
    }
    for (m, &u) in matrices.iter().zip(members) {
        if m.owner() != u {
            return Err(Error::DataIntegrity(format!(
                "matrix of user {} supplied in the slot of member {u}",
                m.owner()
            )));
        }
    }
    let n = matrices[0].n();
    if matrices.iter().any(|m| m.n() != n) {
        return Err(Error::DataIntegrity("matrices disagree on item count".into()));
    }
    if n < 2 {
        return Err(Error::Domain(format!("exchange needs at least 2 items, got {n}")));
    }

    let mut matrices = matrices;
    let mut provenance = config.track_provenance.then(|| Provenance {
        n,
        labels: (0..size as u32).map(|i| vec![i; n * n]).collect(),
    });
    let mut events = Vec::new();
    let positions = n * (n - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let clock = Exp::new(size as f64).map_err(|e| Error::Internal(e.to_string()))?;
    let mut time = 0.0;
    loop {
        time += clock.sample(&mut rng);
        if time >= config.t_threshold {
            break;
        }
        let a = rng.random_range(0..size);
        let mut b = rng.random_range(0..size - 1);
        if b >= a {
            b += 1;
        }
        let (x, y) = matrices[0].position_to_pair(rng.random_range(0..positions));
        let (lo, hi) = (a.min(b), a.max(b));
        let (left, right) = matrices.split_at_mut(hi);
        left[lo].swap_entry(&mut right[0], x, y);
        if let Some(p) = provenance.as_mut() {
            let slot = x * n + y;
            let (left, right) = p.labels.split_at_mut(hi);
            std::mem::swap(&mut left[lo][slot], &mut right[0][slot]);
        }
        events.push(ExchangeEvent {
            time,
            initiator: members[a],
            partner: members[b],
            item_x: ItemId::from(x),
            item_y: ItemId::from(y),
        });
    }
    Ok(ExchangeOutcome {
        matrices,
        events,
        provenance,
    })
}

/// Location distribution, over member slots, of the records that started at
/// member slot `origin`. Restricted to one ordered entry when `entry` is set,
/// otherwise pooled over all `n(n-1)` entries.
pub fn provenance_distribution(
    outcome: &ExchangeOutcome,
    origin: usize,
    entry: Option<(usize, usize)>,
) -> Result<Vec<f64>> {
    let Some(prov) = &outcome.provenance else {
        return Err(Error::Usage(
            "provenance was not tracked for this exchange run".into(),
        ));
    };
    let size = prov.labels.len();
    if origin >= size {
        return Err(Error::Domain(format!("origin {origin} outside group of {size}")));
    }
    let n = prov.n;
    let mut counts = vec![0u64; size];
    let origin = origin as u32;
    for (member, labels) in prov.labels.iter().enumerate() {
        counts[member] = match entry {
            Some((x, y)) => {
                if x == y || x >= n || y >= n {
                    return Err(Error::Domain(format!("({x},{y}) is not an off-diagonal entry")));
                }
                u64::from(labels[x * n + y] == origin)
            }
            None => (0..n * n)
                .filter(|s| s / n != s % n && labels[*s] == origin)
                .count() as u64,
        };
    }
    let total: u64 = counts.iter().sum();
    Ok(counts.iter().map(|&c| c as f64 / total as f64).collect())
}

/// Replays `events` up to and including `time` and returns the member slot
/// holding the record that started at slot `origin`, position `(x, y)`.
pub fn trace_record(
    events: &[ExchangeEvent],
    members: &[UserId],
    origin: usize,
    entry: (ItemId, ItemId),
    time: f64,
) -> Result<usize> {
    if origin >= members.len() {
        return Err(Error::Domain(format!("origin {origin} outside group")));
    }
    let slot_of = |u: UserId| {
        members
            .iter()
            .position(|&m| m == u)
            .ok_or_else(|| Error::DataIntegrity(format!("event names non-member {u}")))
    };
    let mut at = origin;
    for e in events.iter().take_while(|e| e.time <= time) {
        if (e.item_x, e.item_y) != entry {
            continue;
        }
        let (a, b) = (slot_of(e.initiator)?, slot_of(e.partner)?);
        if at == a {
            at = b;
        } else if at == b {
            at = a;
        }
    }
    Ok(at)
}

/// Writes the event log as CSV with header `time,initiator,partner,item_x,item_y`.
pub fn write_events_csv<W: Write>(events: &[ExchangeEvent], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for e in events {
        w.serialize(e)?;
    }
    w.flush().map_err(|e| Error::io("<events csv>", e))?;
    Ok(())
}

/// Sum of all entries over all matrices.
pub fn total_mass(matrices: &[PairwiseComparisonMatrix]) -> u64 {
    matrices.iter().map(PairwiseComparisonMatrix::count_ones).sum()
}
