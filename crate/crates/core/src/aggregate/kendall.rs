use crate::model::PartialRanking;

/// Number of unordered item pairs that `a` and `b` order oppositely.
/// Pairs not ranked by both contribute nothing.
pub fn kendall_tau(a: &PartialRanking, b: &PartialRanking) -> u64 {
    let pos_b = b.positions();
    let shared: Vec<usize> = a.items().iter().filter_map(|i| pos_b.get(i).copied()).collect();
    let mut discordant = 0u64;
    for (i, &p) in shared.iter().enumerate() {
        discordant += shared[i + 1..].iter().filter(|&&q| q < p).count() as u64;
    }
    discordant
}

/// Total Kendall tau distance from `candidate` to every profile.
pub fn kemeny_cost(candidate: &PartialRanking, profiles: &[PartialRanking]) -> u64 {
    profiles.iter().map(|p| kendall_tau(candidate, p)).sum()
}
