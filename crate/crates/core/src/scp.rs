//! Separable ceteris paribus (SCP) preferences over placements.
//!
//! A decision maker may attach to any VM a total order over the PMs. One
//! placement dominates another when, on every annotated VM where the two
//! placements differ, the first puts that VM on a PM its preference ranks
//! strictly higher. VMs without a preference never take part in the
//! comparison, and two placements that agree on every annotated VM are
//! incomparable.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::Placement;

/// Per-VM preference orders, most preferred PM first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScpStructure {
    m_pms: usize,
    // (vm, order, rank table indexed by pm) in ascending vm order
    entries: Vec<Preference>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Preference {
    vm: usize,
    order: Vec<usize>,
    rank: Vec<u32>,
}

/// 1-based preference rank of each annotated VM's PM, in ascending VM id order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScoreVector(pub Vec<u32>);

impl ScoreVector {
    pub fn ranks(&self) -> &[u32] {
        &self.0
    }

    pub fn weighted_flips(&self) -> u64 {
        self.0.iter().map(|&r| flip_weight(r)).sum()
    }

    /// `true` if `self` is no worse on every coordinate and better on one.
    pub fn dominates(&self, other: &ScoreVector) -> bool {
        let mut strict = false;
        for (&a, &b) in self.0.iter().zip(&other.0) {
            if a > b {
                return false;
            }
            strict |= a < b;
        }
        strict
    }

    /// Ranks joined by `;`, the form used in CSV output.
    pub fn to_joined(&self) -> String {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        parts.join(";")
    }
}

/// Rank 1 costs nothing; any other rank costs its own value.
fn flip_weight(rank: u32) -> u64 {
    if rank <= 1 {
        0
    } else {
        u64::from(rank)
    }
}

impl ScpStructure {
    /// Builds a structure over `m_pms` PMs. Every order must be a permutation of `0..m_pms`.
    pub fn new(m_pms: usize, entries: BTreeMap<usize, Vec<usize>>) -> Result<Self> {
        let entries = entries
            .into_iter()
            .map(|(vm, order)| {
                if order.len() != m_pms {
                    return Err(Error::argument(format!(
                        "preference for vm {vm} lists {} pms, expected {m_pms}",
                        order.len()
                    )));
                }
                let mut rank = vec![0u32; m_pms];
                for (pos, &pm) in order.iter().enumerate() {
                    if pm >= m_pms || rank[pm] != 0 {
                        return Err(Error::argument(format!(
                            "preference for vm {vm} is not a permutation of 0..{m_pms}"
                        )));
                    }
                    rank[pm] = pos as u32 + 1;
                }
                Ok(Preference { vm, order, rank })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ScpStructure { m_pms, entries })
    }

    pub fn empty(m_pms: usize) -> Self {
        ScpStructure {
            m_pms,
            entries: Vec::new(),
        }
    }

    /// Number of annotated VMs.
    pub fn k(&self) -> usize {
        self.entries.len()
    }

    pub fn m_pms(&self) -> usize {
        self.m_pms
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn annotated_vms(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e.vm)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, &[usize])> + '_ {
        self.entries.iter().map(|e| (e.vm, e.order.as_slice()))
    }

    pub fn order(&self, vm: usize) -> Option<&[usize]> {
        self.find(vm).map(|e| e.order.as_slice())
    }

    pub fn max_vm(&self) -> Option<usize> {
        self.entries.last().map(|e| e.vm)
    }

    fn find(&self, vm: usize) -> Option<&Preference> {
        self.entries
            .binary_search_by_key(&vm, |e| e.vm)
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn rank_of(&self, vm: usize, pm: usize) -> Result<u32> {
        let pref = self
            .find(vm)
            .ok_or_else(|| Error::argument(format!("vm {vm} carries no preference")))?;
        pref.rank
            .get(pm)
            .copied()
            .ok_or_else(|| Error::argument(format!("pm {pm} is out of range for {} pms", self.m_pms)))
    }

    pub fn score(&self, p: &Placement) -> ScoreVector {
        ScoreVector(self.entries.iter().map(|e| e.rank[p[e.vm]]).collect())
    }

    /// Annotated VMs on which `a` and `b` disagree, ascending.
    pub fn diff(&self, a: &Placement, b: &Placement) -> Vec<usize> {
        self.entries
            .iter()
            .filter(|e| a[e.vm] != b[e.vm])
            .map(|e| e.vm)
            .collect()
    }

    /// Single pass over the annotated VMs.
    pub fn dominates(&self, a: &Placement, b: &Placement) -> bool {
        let mut differs = false;
        for e in &self.entries {
            let (pa, pb) = (a[e.vm], b[e.vm]);
            if pa != pb {
                if e.rank[pa] > e.rank[pb] {
                    return false;
                }
                differs = true;
            }
        }
        differs
    }

    /// Indices of the members of `pop` that no other member dominates, ascending.
    pub fn cpr_pareto(&self, pop: &[Placement]) -> Result<Vec<usize>> {
        if pop.is_empty() {
            return Err(Error::argument("cpr_pareto needs a nonempty population"));
        }
        let scores: Vec<ScoreVector> = pop.iter().map(|p| self.score(p)).collect();
        Ok(maximal_scores(&scores))
    }

    pub fn weighted_flips(&self, p: &Placement) -> u64 {
        self.entries.iter().map(|e| flip_weight(e.rank[p[e.vm]])).sum()
    }
}

/// Indices of score vectors not dominated by any other, ascending.
///
/// With permutation preferences, dominance between placements is exactly
/// componentwise dominance between their score vectors.
///
/// Distinct vectors are visited by increasing rank sum, so every dominator of
/// a vector is visited before it, and it suffices to test against the maximal
/// vectors found so far.
pub(crate) fn maximal_scores(scores: &[ScoreVector]) -> Vec<usize> {
    let mut distinct: Vec<&ScoreVector> = scores.iter().collect();
    distinct.sort_by_cached_key(|s| (s.0.iter().map(|&r| u64::from(r)).sum::<u64>(), &s.0));
    distinct.dedup();
    let mut maximal: Vec<&ScoreVector> = Vec::new();
    for s in distinct {
        if !maximal.iter().any(|m| m.dominates(s)) {
            maximal.push(s);
        }
    }
    maximal.sort_by(|a, b| a.0.cmp(&b.0));
    (0..scores.len())
        .filter(|&i| maximal.binary_search_by(|m| m.0.cmp(&scores[i].0)).is_ok())
        .collect()
}

pub fn rank_of(scp: &ScpStructure, vm: usize, pm: usize) -> Result<u32> {
    scp.rank_of(vm, pm)
}

pub fn score(scp: &ScpStructure, p: &Placement) -> ScoreVector {
    scp.score(p)
}

pub fn diff(a: &Placement, b: &Placement, scp: &ScpStructure) -> Vec<usize> {
    scp.diff(a, b)
}

pub fn scp_dominates(a: &Placement, b: &Placement, scp: &ScpStructure) -> bool {
    scp.dominates(a, b)
}

pub fn cpr_pareto(pop: &[Placement], scp: &ScpStructure) -> Result<Vec<usize>> {
    scp.cpr_pareto(pop)
}

pub fn weighted_flips(scp: &ScpStructure, p: &Placement) -> u64 {
    scp.weighted_flips(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scp(m: usize, entries: &[(usize, &[usize])]) -> ScpStructure {
        ScpStructure::new(m, entries.iter().map(|(vm, o)| (*vm, o.to_vec())).collect()).unwrap()
    }

    fn pl(v: &[usize]) -> Placement {
        Placement::new(v.to_vec())
    }

    #[test]
    fn rank_lookup() {
        // Most-preferred-first {P3, P1, P2} in 1-based PM names.
        let s = scp(3, &[(0, &[2, 0, 1])]);
        assert_eq!(s.rank_of(0, 0).unwrap(), 2);
        assert_eq!(s.rank_of(0, 2).unwrap(), 1);
        assert_eq!(s.rank_of(0, 1).unwrap(), 3);

        let s = scp(3, &[(0, &[0, 1, 2])]);
        assert_eq!(s.rank_of(0, 0).unwrap(), 1);
        assert_eq!(s.rank_of(0, 2).unwrap(), 3);
        assert!(s.rank_of(1, 0).is_err());
        assert!(s.rank_of(0, 3).is_err());
    }

    #[test]
    fn rejects_non_permutations() {
        assert!(ScpStructure::new(3, [(0, vec![0, 0, 1])].into()).is_err());
        assert!(ScpStructure::new(3, [(0, vec![0, 1])].into()).is_err());
        assert!(ScpStructure::new(3, [(0, vec![0, 1, 3])].into()).is_err());
    }

    #[test]
    fn scores() {
        assert_eq!(ScpStructure::empty(3).score(&pl(&[0, 1])), ScoreVector(vec![]));

        let s = scp(6, &[(0, &[3, 0, 1, 2, 4, 5]), (2, &[5, 4, 3, 2, 1, 0]), (4, &[0, 1, 2, 3, 4, 5])]);
        assert_eq!(s.score(&pl(&[3, 1, 5, 1, 0])), ScoreVector(vec![1, 1, 1]));
        // 1st, 3rd and 5th choices.
        assert_eq!(s.score(&pl(&[3, 0, 3, 0, 4])), ScoreVector(vec![1, 3, 5]));
        assert_eq!(s.weighted_flips(&pl(&[3, 0, 3, 0, 4])), 8);
        assert_eq!(s.weighted_flips(&pl(&[3, 1, 5, 1, 0])), 0);
        assert_eq!(ScpStructure::empty(6).weighted_flips(&pl(&[1, 2])), 0);
    }

    #[test]
    fn flips_of_scores() {
        assert_eq!(ScoreVector(vec![1, 3, 5]).weighted_flips(), 8);
        assert_eq!(ScoreVector(vec![1, 1, 1, 1]).weighted_flips(), 0);
        assert_eq!(ScoreVector(vec![2]).weighted_flips(), 2);
        assert_eq!(ScoreVector(vec![]).weighted_flips(), 0);
    }

    #[test]
    fn diff_is_restricted_to_annotated_vms() {
        let ident: &[usize] = &[0, 1, 2];
        let s = scp(3, &[(0, ident), (2, ident), (5, ident)]);
        let a = pl(&[0, 0, 0, 0, 0, 0, 0, 0]);
        assert!(s.diff(&a, &a).is_empty());
        let b = pl(&[0, 2, 0, 0, 0, 0, 0, 0]);
        assert!(s.diff(&a, &b).is_empty());
        let c = pl(&[0, 0, 1, 0, 0, 2, 0, 1]);
        assert_eq!(s.diff(&a, &c), vec![2, 5]);
    }

    #[test]
    fn dominance_cases() {
        let ident: &[usize] = &[0, 1, 2];
        let s = scp(3, &[(0, ident), (1, ident)]);
        let a = pl(&[0, 0]);
        assert!(!s.dominates(&a, &a));

        // Scores {1,1} vs {2,1}.
        let b = pl(&[1, 0]);
        assert!(s.dominates(&a, &b));
        assert!(!s.dominates(&b, &a));

        // Scores {1,2} vs {2,1}: incomparable.
        let c = pl(&[0, 1]);
        let d = pl(&[1, 0]);
        assert!(!s.dominates(&c, &d));
        assert!(!s.dominates(&d, &c));
    }

    #[test]
    fn cpr_pareto_cases() {
        let ident: &[usize] = &[0, 1, 2];
        let s = scp(3, &[(0, ident), (1, ident)]);
        assert!(s.cpr_pareto(&[]).is_err());
        assert_eq!(s.cpr_pareto(&[pl(&[2, 2])]).unwrap(), vec![0]);

        let pop = [pl(&[1, 2]), pl(&[0, 0]), pl(&[2, 1]), pl(&[0, 0])];
        assert_eq!(s.cpr_pareto(&pop).unwrap(), vec![1, 3]);

        let incomparable = [pl(&[0, 2]), pl(&[1, 1]), pl(&[2, 0])];
        assert_eq!(s.cpr_pareto(&incomparable).unwrap(), vec![0, 1, 2]);
    }

    fn instance_strategy() -> impl Strategy<Value = (ScpStructure, usize)> {
        (1usize..=8, 1usize..=8).prop_flat_map(|(m, n)| {
            let orders = proptest::collection::vec(
                Just((0..m).collect::<Vec<_>>()).prop_shuffle(),
                n,
            );
            let mask = proptest::collection::vec(any::<bool>(), n);
            (orders, mask).prop_map(move |(orders, mask)| {
                let entries = orders
                    .into_iter()
                    .enumerate()
                    .filter(|(i, _)| mask[*i])
                    .collect();
                (ScpStructure::new(m, entries).unwrap(), n)
            })
        })
    }

    fn with_placements(count: usize) -> impl Strategy<Value = (ScpStructure, Vec<Placement>)> {
        instance_strategy().prop_flat_map(move |(s, n)| {
            let m = s.m_pms();
            let p = proptest::collection::vec(0..m, n).prop_map(Placement::new);
            (Just(s), proptest::collection::vec(p, count))
        })
    }

    proptest! {
        #[test]
        fn flips_zero_iff_all_ones((s, pops) in with_placements(1)) {
            let p = &pops[0];
            let all_ones = s.score(p).ranks().iter().all(|&r| r == 1);
            prop_assert_eq!(s.weighted_flips(p) == 0, all_ones);
        }

        #[test]
        fn dominance_never_increases_flips((s, pops) in with_placements(2)) {
            if s.dominates(&pops[0], &pops[1]) {
                prop_assert!(s.weighted_flips(&pops[0]) <= s.weighted_flips(&pops[1]));
            }
        }

        #[test]
        fn cpr_pareto_is_nonempty((s, pop) in with_placements(12)) {
            prop_assert!(!s.cpr_pareto(&pop).unwrap().is_empty());
        }
    }
}
