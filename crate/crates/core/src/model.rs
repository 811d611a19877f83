//! Identifiers, catalog, ratings, groups and per-user preference matrices.
//!
//! All ids are dense indices assigned at ingestion; [`IdMap`] keeps the
//! mapping back to the identifiers used by the source dataset.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

macro_rules! dense_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl From<usize> for $name {
            #[inline]
            fn from(i: usize) -> Self {
                $name(u32::try_from(i).expect("id overflows u32"))
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt(f)
            }
        }
    };
}

dense_id!(
    /// Dense item index.
    ItemId
);
dense_id!(
    /// Dense user index.
    UserId
);
dense_id!(
    /// Dense group index.
    GroupId
);
dense_id!(
    /// Dense tag (item feature) index.
    TagId
);

/// Bidirectional map between dense indices and external identifiers.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct IdMap {
    external: Vec<String>,
    dense: HashMap<String, u32>,
}

impl From<Vec<String>> for IdMap {
    fn from(external: Vec<String>) -> Self {
        let mut map = IdMap::default();
        for id in external {
            map.get_or_insert(&id);
        }
        map
    }
}

impl From<IdMap> for Vec<String> {
    fn from(map: IdMap) -> Self {
        map.external
    }
}

impl IdMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a map from external ids, rejecting duplicates.
    pub fn from_unique<I, S>(ids: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut map = IdMap::default();
        for id in ids {
            let id = id.as_ref();
            if map.dense.contains_key(id) {
                return Err(Error::DataIntegrity(format!("duplicate id `{id}`")));
            }
            map.get_or_insert(id);
        }
        Ok(map)
    }

    pub fn get_or_insert(&mut self, external: &str) -> u32 {
        if let Some(&i) = self.dense.get(external) {
            return i;
        }
        let i = u32::try_from(self.external.len()).expect("id space overflow");
        self.external.push(external.to_owned());
        self.dense.insert(external.to_owned(), i);
        i
    }

    pub fn dense(&self, external: &str) -> Option<u32> {
        self.dense.get(external).copied()
    }

    pub fn external(&self, dense: u32) -> Option<&str> {
        self.external.get(dense as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.external.len()
    }

    pub fn is_empty(&self) -> bool {
        self.external.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.external.iter().map(String::as_str)
    }
}

/// Items, users and tags of a dataset, plus each item's binary tag vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub items: IdMap,
    pub users: IdMap,
    pub tags: IdMap,
    /// Sorted tag list per item (the non-zero entries of the tag vector).
    tag_assignments: Vec<Vec<TagId>>,
    /// Ratings live on `1..=rating_scale`.
    pub rating_scale: u8,
}

impl Catalog {
    pub fn new(
        items: IdMap,
        users: IdMap,
        tags: IdMap,
        mut tag_assignments: Vec<Vec<TagId>>,
        rating_scale: u8,
    ) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::DataIntegrity("catalog has no items".into()));
        }
        if rating_scale == 0 {
            return Err(Error::config("rating_scale", "must be at least 1"));
        }
        if tag_assignments.is_empty() {
            tag_assignments = vec![Vec::new(); items.len()];
        }
        if tag_assignments.len() != items.len() {
            return Err(Error::DataIntegrity(format!(
                "tag assignments cover {} items, catalog has {}",
                tag_assignments.len(),
                items.len()
            )));
        }
        for (item, item_tags) in tag_assignments.iter_mut().enumerate() {
            item_tags.sort_unstable();
            item_tags.dedup();
            if let Some(t) = item_tags.iter().find(|t| t.index() >= tags.len()) {
                return Err(Error::DataIntegrity(format!(
                    "item {item} references unknown tag {t}"
                )));
            }
        }
        Ok(Catalog {
            items,
            users,
            tags,
            tag_assignments,
            rating_scale,
        })
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_tags(&self) -> usize {
        self.tags.len()
    }

    pub fn tags_of(&self, item: ItemId) -> &[TagId] {
        &self.tag_assignments[item.index()]
    }

    pub fn contains_item(&self, item: ItemId) -> bool {
        item.index() < self.n_items()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub user: UserId,
    pub item: ItemId,
    pub rating: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<i64>,
}

impl RatingRecord {
    pub fn new(user: UserId, item: ItemId, rating: u8) -> Self {
        RatingRecord {
            user,
            item,
            rating,
            timestamp: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Gender {
    #[serde(rename = "F")]
    Female,
    #[serde(rename = "M")]
    Male,
}

impl Gender {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "M" | "m" => Some(Gender::Male),
            "F" | "f" => Some(Gender::Female),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Gender::Male => "M",
            Gender::Female => "F",
        }
    }
}

/// Age ranges used for grouping: below 21, 21-30, 31-40, 41-50, above 50.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgeBucket {
    Under21,
    From21To30,
    From31To40,
    From41To50,
    Over50,
}

impl AgeBucket {
    pub fn of(age: u32) -> Self {
        match age {
            0..=20 => AgeBucket::Under21,
            21..=30 => AgeBucket::From21To30,
            31..=40 => AgeBucket::From31To40,
            41..=50 => AgeBucket::From41To50,
            _ => AgeBucket::Over50,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AgeBucket::Under21 => "below 21",
            AgeBucket::From21To30 => "21 to 30",
            AgeBucket::From31To40 => "31 to 40",
            AgeBucket::From41To50 => "41 to 50",
            AgeBucket::Over50 => "above 50",
        }
    }
}

/// Optional demographic attributes of a user.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserProfile {
    pub gender: Option<Gender>,
    pub age: Option<u32>,
    pub occupation: Option<String>,
}

impl UserProfile {
    pub fn age_bucket(&self) -> Option<AgeBucket> {
        self.age.map(AgeBucket::of)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub id: GroupId,
    pub label: String,
    /// Sorted, distinct.
    pub members: Vec<UserId>,
    pub associates: BTreeSet<GroupId>,
}

impl Group {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

/// A partition of users into groups plus the symmetric association relation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSet {
    groups: Vec<Group>,
}

impl GroupSet {
    /// Builds groups from `(label, members)` pairs; ids follow input order.
    pub fn from_members(parts: Vec<(String, Vec<UserId>)>) -> Result<Self> {
        let groups = parts
            .into_iter()
            .enumerate()
            .map(|(i, (label, mut members))| {
                members.sort_unstable();
                members.dedup();
                Group {
                    id: GroupId::from(i),
                    label,
                    members,
                    associates: BTreeSet::new(),
                }
            })
            .collect();
        Self::new(groups)
    }

    pub fn new(groups: Vec<Group>) -> Result<Self> {
        let mut seen = HashMap::new();
        for (i, g) in groups.iter().enumerate() {
            if g.id.index() != i {
                return Err(Error::DataIntegrity(format!(
                    "group at position {i} has id {}",
                    g.id
                )));
            }
            if g.members.is_empty() {
                return Err(Error::DataIntegrity(format!("group `{}` is empty", g.label)));
            }
            for &u in &g.members {
                if let Some(prev) = seen.insert(u, g.id) {
                    return Err(Error::DataIntegrity(format!(
                        "user {u} belongs to groups {prev} and {}",
                        g.id
                    )));
                }
            }
            for &a in &g.associates {
                if a == g.id {
                    return Err(Error::DataIntegrity(format!("group {} associates itself", g.id)));
                }
                let Some(other) = groups.get(a.index()) else {
                    return Err(Error::DataIntegrity(format!("unknown associate group {a}")));
                };
                if !other.associates.contains(&g.id) {
                    return Err(Error::DataIntegrity(format!(
                        "association {} -> {a} is not symmetric",
                        g.id
                    )));
                }
            }
        }
        Ok(GroupSet { groups })
    }

    /// Marks `a` and `b` as associated groups (both directions).
    pub fn associate(&mut self, a: GroupId, b: GroupId) -> Result<()> {
        if a == b {
            return Err(Error::DataIntegrity(format!("group {a} cannot associate itself")));
        }
        if a.index() >= self.groups.len() || b.index() >= self.groups.len() {
            return Err(Error::DataIntegrity(format!("unknown group in association {a}-{b}")));
        }
        self.groups[a.index()].associates.insert(b);
        self.groups[b.index()].associates.insert(a);
        Ok(())
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn get(&self, id: GroupId) -> Option<&Group> {
        self.groups.get(id.index())
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn by_label(&self, label: &str) -> Option<&Group> {
        self.groups.iter().find(|g| g.label == label)
    }

    /// Group of every user id below `n_users`.
    pub fn membership(&self, n_users: usize) -> Vec<Option<GroupId>> {
        let mut out = vec![None; n_users];
        for g in &self.groups {
            for u in &g.members {
                if let Some(slot) = out.get_mut(u.index()) {
                    *slot = Some(g.id);
                }
            }
        }
        out
    }
}

/// Ordered list of distinct items, best first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<ItemId>", into = "Vec<ItemId>")]
pub struct PartialRanking(Vec<ItemId>);

impl TryFrom<Vec<ItemId>> for PartialRanking {
    type Error = Error;

    fn try_from(items: Vec<ItemId>) -> Result<Self> {
        PartialRanking::new(items)
    }
}

impl From<PartialRanking> for Vec<ItemId> {
    fn from(r: PartialRanking) -> Self {
        r.0
    }
}

impl PartialRanking {
    pub fn new(items: Vec<ItemId>) -> Result<Self> {
        let mut seen = std::collections::HashSet::with_capacity(items.len());
        if let Some(dup) = items.iter().find(|i| !seen.insert(**i)) {
            return Err(Error::DataIntegrity(format!("item {dup} repeated in ranking")));
        }
        Ok(PartialRanking(items))
    }

    /// Convenience constructor from raw indices; panics on duplicates.
    pub fn from_indices<I: IntoIterator<Item = u32>>(items: I) -> Self {
        Self::new(items.into_iter().map(ItemId).collect()).expect("duplicate item in ranking")
    }

    pub fn items(&self) -> &[ItemId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn positions(&self) -> HashMap<ItemId, usize> {
        self.0.iter().enumerate().map(|(p, &i)| (i, p)).collect()
    }

    pub fn truncate(&mut self, k: usize) {
        self.0.truncate(k);
    }

    pub fn check_catalog(&self, catalog: &Catalog) -> Result<()> {
        match self.0.iter().find(|i| !catalog.contains_item(**i)) {
            Some(i) => Err(Error::DataIntegrity(format!("ranked item {i} not in catalog"))),
            None => Ok(()),
        }
    }
}

/// Per-user 0/1 pairwise comparison matrix, `M[x][y] = 1` meaning "x preferred to y".
///
/// Stored as an `n x n` bitset. Padding fills roughly half of all positions,
/// so a bitset is both smaller and faster than a set of pairs once padded.
#[derive(Clone, PartialEq, Eq)]
pub struct PairwiseComparisonMatrix {
    owner: UserId,
    n: usize,
    bits: Vec<u64>,
}

impl fmt::Debug for PairwiseComparisonMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PairwiseComparisonMatrix")
            .field("owner", &self.owner)
            .field("n", &self.n)
            .field("ones", &self.count_ones())
            .finish()
    }
}

impl PairwiseComparisonMatrix {
    pub fn new(owner: UserId, n: usize) -> Self {
        let words = (n * n).div_ceil(64);
        PairwiseComparisonMatrix {
            owner,
            n,
            bits: vec![0; words],
        }
    }

    /// Rebuilds a matrix from its raw bitset words (row-major, `x * n + y`).
    pub fn from_words(owner: UserId, n: usize, bits: Vec<u64>) -> Result<Self> {
        if bits.len() != (n * n).div_ceil(64) {
            return Err(Error::DataIntegrity(format!(
                "expected {} words for n={n}, got {}",
                (n * n).div_ceil(64),
                bits.len()
            )));
        }
        let m = PairwiseComparisonMatrix { owner, n, bits };
        if let Some((x, _)) = m.iter().find(|(x, y)| x == y) {
            return Err(Error::DataIntegrity(format!("diagonal entry at item {x}")));
        }
        let tail = n * n % 64;
        if tail != 0 && m.bits.last().is_some_and(|w| w >> tail != 0) {
            return Err(Error::DataIntegrity("bits set beyond matrix end".into()));
        }
        Ok(m)
    }

    pub fn words(&self) -> &[u64] {
        &self.bits
    }

    pub fn owner(&self) -> UserId {
        self.owner
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of off-diagonal positions, `n(n-1)`.
    pub fn n_positions(&self) -> usize {
        self.n * self.n.saturating_sub(1)
    }

    #[inline]
    fn slot(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.n && y < self.n);
        x * self.n + y
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        let s = self.slot(x, y);
        self.bits[s / 64] >> (s % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        assert!(x != y, "diagonal entries are not stored");
        let s = self.slot(x, y);
        let mask = 1u64 << (s % 64);
        if value {
            self.bits[s / 64] |= mask;
        } else {
            self.bits[s / 64] &= !mask;
        }
    }

    pub fn contains(&self, x: ItemId, y: ItemId) -> bool {
        self.get(x.index(), y.index())
    }

    pub fn count_ones(&self) -> u64 {
        self.bits.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    /// Present ordered pairs in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        self.bits.iter().enumerate().flat_map(move |(wi, &word)| {
            let mut w = word;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                let s = wi * 64 + b;
                Some((s / n, s % n))
            })
        })
    }

    /// True when no unordered pair has both `(x,y)` and `(y,x)` set.
    pub fn is_antisymmetric(&self) -> bool {
        let t = self.transpose();
        self.bits.iter().zip(&t.bits).all(|(a, b)| a & b == 0)
    }

    /// `len <= 64` bits starting at bit `start`, lowest bit first.
    #[inline]
    pub(crate) fn segment(&self, start: usize, len: usize) -> u64 {
        read_bits(&self.bits, start, len)
    }

    /// Same owner and size with every word replaced by `f(self, other)`.
    pub(crate) fn zip_words(&self, other: &Self, f: impl Fn(u64, u64) -> u64) -> Self {
        debug_assert_eq!(self.n, other.n);
        PairwiseComparisonMatrix {
            owner: self.owner,
            n: self.n,
            bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Matrix with `(x, y)` and `(y, x)` exchanged.
    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut out = PairwiseComparisonMatrix::new(self.owner, n);
        let mut block = [0u64; 64];
        for bx in (0..n).step_by(64) {
            let rows = (n - bx).min(64);
            for by in (0..n).step_by(64) {
                let cols = (n - by).min(64);
                block.fill(0);
                let mut any = 0;
                for (r, b) in block.iter_mut().enumerate().take(rows) {
                    *b = read_bits(&self.bits, (bx + r) * n + by, cols);
                    any |= *b;
                }
                if any == 0 {
                    continue;
                }
                transpose64(&mut block);
                for (c, &b) in block.iter().enumerate().take(cols) {
                    or_bits(&mut out.bits, (by + c) * n + bx, b);
                }
            }
        }
        out
    }

    /// Maps an ordered off-diagonal position `0..n(n-1)` to its `(x, y)` pair.
    #[inline]
    pub fn position_to_pair(&self, position: usize) -> (usize, usize) {
        let x = position / (self.n - 1);
        let r = position % (self.n - 1);
        (x, if r >= x { r + 1 } else { r })
    }

    /// Swaps the value at `(x, y)` with the same position of `other`.
    #[inline]
    pub fn swap_entry(&mut self, other: &mut Self, x: usize, y: usize) {
        let a = self.get(x, y);
        let b = other.get(x, y);
        if a != b {
            self.set(x, y, b);
            other.set(x, y, a);
        }
    }

    /// Recovers a ranking from an acyclic matrix by topological sort.
    ///
    /// Only items taking part in at least one comparison are returned; ties
    /// between unordered items go to the smaller id. `None` if cyclic.
    pub fn to_ranking(&self) -> Option<PartialRanking> {
        let n = self.n;
        let mut indegree = vec![0usize; n];
        let mut involved = vec![false; n];
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (x, y) in self.iter() {
            out[x].push(y);
            indegree[y] += 1;
            involved[x] = true;
            involved[y] = true;
        }
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| involved[i] && indegree[i] == 0).collect();
        let mut order = Vec::new();
        while let Some(x) = ready.pop_first() {
            order.push(ItemId::from(x));
            for &y in &out[x] {
                indegree[y] -= 1;
                if indegree[y] == 0 {
                    ready.insert(y);
                }
            }
        }
        (order.len() == involved.iter().filter(|&&b| b).count()).then(|| PartialRanking(order))
    }
}

#[inline]
fn read_bits(bits: &[u64], start: usize, len: usize) -> u64 {
    if len == 0 {
        return 0;
    }
    let (w, o) = (start / 64, start % 64);
    let mut v = bits[w] >> o;
    if o != 0 && o + len > 64 {
        v |= bits[w + 1] << (64 - o);
    }
    if len < 64 {
        v &= (1u64 << len) - 1;
    }
    v
}

/// ORs `value` into the bits starting at `start`; `value` must fit in the matrix.
#[inline]
fn or_bits(bits: &mut [u64], start: usize, value: u64) {
    if value == 0 {
        return;
    }
    let (w, o) = (start / 64, start % 64);
    bits[w] |= value << o;
    if o != 0 {
        let high = value >> (64 - o);
        if high != 0 {
            bits[w + 1] |= high;
        }
    }
}

/// In-place transpose of a 64x64 bit block, `a[r]` bit `c` being entry `(r, c)`.
fn transpose64(a: &mut [u64; 64]) {
    let mut j = 32;
    let mut m: u64 = 0x0000_0000_FFFF_FFFF;
    while j != 0 {
        let mut k = 0;
        while k < 64 {
            let t = ((a[k] >> j) ^ a[k + j]) & m;
            a[k] ^= t << j;
            a[k + j] ^= t;
            k = (k + j + 1) & !j;
        }
        j >>= 1;
        m ^= m << j;
    }
}

/// Builds a user's comparison matrix from their ratings.
///
/// `M[x][y] = 1` iff both items are rated and `r_x > r_y`; equal ratings and
/// unrated items leave both entries at zero.
pub fn pairwise_from_ratings(
    owner: UserId,
    ratings: &[RatingRecord],
    catalog: &Catalog,
) -> Result<PairwiseComparisonMatrix> {
    let n = catalog.n_items();
    let mut rated: Vec<(usize, u8)> = Vec::with_capacity(ratings.len());
    let mut seen = std::collections::HashSet::with_capacity(ratings.len());
    for r in ratings {
        if r.user != owner {
            return Err(Error::DataIntegrity(format!(
                "rating by user {} passed for user {owner}",
                r.user
            )));
        }
        if !catalog.contains_item(r.item) {
            return Err(Error::DataIntegrity(format!("item {} not in catalog", r.item)));
        }
        if r.rating < 1 || r.rating > catalog.rating_scale {
            return Err(Error::DataIntegrity(format!(
                "rating {} for item {} outside 1..={}",
                r.rating, r.item, catalog.rating_scale
            )));
        }
        if !seen.insert(r.item) {
            return Err(Error::DataIntegrity(format!(
                "duplicate rating by user {owner} for item {}",
                r.item
            )));
        }
        rated.push((r.item.index(), r.rating));
    }
    let mut m = PairwiseComparisonMatrix::new(owner, n);
    for (i, &(x, rx)) in rated.iter().enumerate() {
        for &(y, ry) in &rated[i + 1..] {
            if rx > ry {
                m.set(x, y, true);
            } else if ry > rx {
                m.set(y, x, true);
            }
        }
    }
    Ok(m)
}

/// Builds a comparison matrix where `x` beats `y` exactly when `x` precedes `y`.
pub fn pairwise_from_ranking(
    owner: UserId,
    ranking: &PartialRanking,
    catalog: &Catalog,
) -> Result<PairwiseComparisonMatrix> {
    ranking.check_catalog(catalog)?;
    let mut m = PairwiseComparisonMatrix::new(owner, catalog.n_items());
    let items = ranking.items();
    for (i, x) in items.iter().enumerate() {
        for y in &items[i + 1..] {
            m.set(x.index(), y.index(), true);
        }
    }
    Ok(m)
}
