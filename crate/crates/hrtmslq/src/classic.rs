//! Strict-preference deferred acceptance and tie-breaking front ends.
//!
//! [`gale_shapley`] is the classic resident-proposing algorithm on strict,
//! possibly incomplete lists. [`break_ties`] turns a tied instance into a
//! strict one under a fixed policy, which together give the baseline solver.
//! [`naive_adaptive`] is deferred acceptance with greedy deficiency-first
//! tie-breaking; it looks sensible but is manipulable, and is kept as the
//! negative example for the strategy-proofness tests.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{Instance, Matching, ModelError, PreferenceOrder, Side};

/// How to break ties when deriving a strict instance.
///
/// A policy applied to the same instance always yields the same strict
/// instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TieBreakPolicy {
    /// Ascending index within each tie.
    Lexicographic,
    /// Descending index within each tie.
    ReverseIndex,
    /// Each tie shuffled by a deterministic seeded stream.
    SeededRandom(u64),
}

/// Strict preference lists with quotas; lists may be incomplete.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrictInstance {
    resident_lists: Vec<Vec<usize>>,
    hospital_lists: Vec<Vec<usize>>,
    lower: Vec<usize>,
    upper: Vec<usize>,
}

impl StrictInstance {
    pub fn new(
        resident_lists: Vec<Vec<usize>>,
        hospital_lists: Vec<Vec<usize>>,
        lower: Vec<usize>,
        upper: Vec<usize>,
    ) -> Result<Self, ModelError> {
        let n = resident_lists.len();
        let m = hospital_lists.len();
        if lower.len() != m || upper.len() != m {
            return Err(ModelError::IndexOutOfRange {
                index: lower.len().max(upper.len()),
                limit: m,
            });
        }
        for h in 0..m {
            if lower[h] > upper[h] || upper[h] > n {
                return Err(ModelError::QuotaOrder {
                    hospital: h,
                    lower: lower[h],
                    upper: upper[h],
                    n,
                });
            }
        }
        let check = |lists: &[Vec<usize>], ground: usize, side: Side| {
            for (agent, list) in lists.iter().enumerate() {
                let mut seen = vec![false; ground];
                for &x in list {
                    if x >= ground {
                        return Err(ModelError::IndexOutOfRange {
                            index: x,
                            limit: ground,
                        });
                    }
                    if seen[x] {
                        return Err(ModelError::IncompletePreference {
                            side,
                            agent,
                            counterpart: x,
                        });
                    }
                    seen[x] = true;
                }
            }
            Ok(())
        };
        check(&resident_lists, m, Side::Resident)?;
        check(&hospital_lists, n, Side::Hospital)?;
        Ok(StrictInstance {
            resident_lists,
            hospital_lists,
            lower,
            upper,
        })
    }

    pub fn residents(&self) -> usize {
        self.resident_lists.len()
    }

    pub fn hospitals(&self) -> usize {
        self.hospital_lists.len()
    }

    pub fn resident_list(&self, r: usize) -> &[usize] {
        &self.resident_lists[r]
    }

    pub fn hospital_list(&self, h: usize) -> &[usize] {
        &self.hospital_lists[h]
    }

    pub fn lower(&self, h: usize) -> usize {
        self.lower[h]
    }

    pub fn upper(&self, h: usize) -> usize {
        self.upper[h]
    }

    pub fn lowers(&self) -> &[usize] {
        &self.lower
    }

    pub fn uppers(&self) -> &[usize] {
        &self.upper
    }

    /// Reinterprets as a tied instance (singleton tiers). Requires complete
    /// lists and the usual instance invariants.
    pub fn to_instance(&self) -> Result<Instance, ModelError> {
        let resident_prefs = self
            .resident_lists
            .iter()
            .map(|l| PreferenceOrder::strict(l))
            .collect::<Result<Vec<_>, _>>()?;
        let hospital_prefs = self
            .hospital_lists
            .iter()
            .map(|l| PreferenceOrder::strict(l))
            .collect::<Result<Vec<_>, _>>()?;
        Instance::new(
            resident_prefs,
            hospital_prefs,
            self.lower.clone(),
            self.upper.clone(),
        )
    }
}

/// Breaks every tie of `inst` according to `policy`, preserving quotas.
pub fn break_ties(inst: &Instance, policy: TieBreakPolicy) -> StrictInstance {
    let mut rng = match policy {
        TieBreakPolicy::SeededRandom(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    let mut flatten = |pref: &PreferenceOrder| -> Vec<usize> {
        let mut out = Vec::with_capacity(pref.ground());
        for tier in pref.tiers() {
            let mut tier = tier.clone();
            match (&policy, &mut rng) {
                (TieBreakPolicy::Lexicographic, _) => {}
                (TieBreakPolicy::ReverseIndex, _) => tier.reverse(),
                (TieBreakPolicy::SeededRandom(_), Some(rng)) => tier.shuffle(rng),
                _ => unreachable!(),
            }
            out.extend(tier);
        }
        out
    };
    let resident_lists = (0..inst.residents())
        .map(|r| flatten(inst.resident_pref(r)))
        .collect();
    let hospital_lists = (0..inst.hospitals())
        .map(|h| flatten(inst.hospital_pref(h)))
        .collect();
    StrictInstance {
        resident_lists,
        hospital_lists,
        lower: inst.lowers().to_vec(),
        upper: inst.uppers().to_vec(),
    }
}

/// Resident-proposing deferred acceptance on strict lists.
///
/// Residents propose once to each hospital on their list, most preferred
/// first. A full hospital rejects the proposer unless it strictly prefers it
/// to its worst assignee, in which case the worst assignee is released.
/// Residents whose list runs out stay unmatched. The result is the
/// resident-optimal stable matching over mutually acceptable pairs.
pub fn gale_shapley(inst: &StrictInstance) -> Matching {
    let n = inst.residents();
    let m = inst.hospitals();
    // hospital_rank[h][r] = position of r in h's list, if acceptable
    let mut hospital_rank: Vec<Vec<Option<u32>>> = vec![vec![None; n]; m];
    for h in 0..m {
        for (pos, &r) in inst.hospital_lists[h].iter().enumerate() {
            hospital_rank[h][r] = Some(pos as u32);
        }
    }
    let mut next: Vec<usize> = vec![0; n];
    let mut assignment: Vec<Option<usize>> = vec![None; n];
    let mut members: Vec<BTreeSet<(u32, usize)>> = vec![BTreeSet::new(); m];
    let mut queue: BinaryHeap<Reverse<usize>> = (0..n).map(Reverse).collect();

    while let Some(Reverse(r)) = queue.pop() {
        if assignment[r].is_some() {
            continue;
        }
        let list = &inst.resident_lists[r];
        if next[r] >= list.len() {
            continue; // exhausted, stays unmatched
        }
        let h = list[next[r]];
        next[r] += 1;
        let Some(rank) = hospital_rank[h][r] else {
            queue.push(Reverse(r));
            continue; // not acceptable to h
        };
        if members[h].len() < inst.upper[h] {
            members[h].insert((rank, r));
            assignment[r] = Some(h);
        } else if let Some(&(wrank, worst)) = members[h].last() {
            if rank < wrank {
                members[h].remove(&(wrank, worst));
                assignment[worst] = None;
                queue.push(Reverse(worst));
                members[h].insert((rank, r));
                assignment[r] = Some(h);
            } else {
                queue.push(Reverse(r));
            }
        } else {
            queue.push(Reverse(r)); // upper quota 0
        }
    }
    Matching::from_assignment(assignment)
}

/// Blocking pairs of `mat` among mutually acceptable pairs of a strict
/// instance. Empty iff `mat` is stable for it.
pub fn strict_blocking_pairs(inst: &StrictInstance, mat: &Matching) -> Vec<(usize, usize)> {
    let n = inst.residents();
    let m = inst.hospitals();
    let mut hospital_rank: Vec<Vec<Option<u32>>> = vec![vec![None; n]; m];
    for h in 0..m {
        for (pos, &r) in inst.hospital_lists[h].iter().enumerate() {
            hospital_rank[h][r] = Some(pos as u32);
        }
    }
    let loads = mat.loads(m);
    let mut worst_rank: Vec<Option<u32>> = vec![None; m];
    for r in 0..n {
        if let Some(h) = mat.get(r) {
            let rank = hospital_rank[h][r].expect("assignee must be acceptable");
            worst_rank[h] = Some(worst_rank[h].map_or(rank, |w| w.max(rank)));
        }
    }
    let mut out = Vec::new();
    for r in 0..n {
        let list = &inst.resident_lists[r];
        let matched_pos = mat.get(r).map(|h| {
            list.iter()
                .position(|&x| x == h)
                .expect("assignment must be on the list")
        });
        let horizon = matched_pos.unwrap_or(list.len());
        for &h in &list[..horizon] {
            let Some(rank) = hospital_rank[h][r] else {
                continue;
            };
            let blocks =
                loads[h] < inst.upper[h] || worst_rank[h].is_some_and(|w| w > rank);
            if blocks {
                out.push((r, h));
            }
        }
    }
    out
}

/// Deferred acceptance with adaptive tie-breaking: inside its current top
/// tie, a resident proposes to currently deficient hospitals first (then by
/// smallest index). Hospital-side ties are broken by ascending index. The
/// output is stable, but the adaptivity makes the rule manipulable.
pub fn naive_adaptive(inst: &Instance) -> Matching {
    let n = inst.residents();
    let m = inst.hospitals();
    let hospital_rank: Vec<Vec<usize>> = (0..m)
        .map(|h| inst.hospital_pref(h).rank_table())
        .collect();
    let mut proposed = vec![false; n * m];
    let mut tier_ptr: Vec<usize> = vec![0; n];
    let mut assignment: Vec<Option<usize>> = vec![None; n];
    let mut members: Vec<BTreeSet<(usize, usize)>> = vec![BTreeSet::new(); m];
    let mut queue: BinaryHeap<Reverse<usize>> = (0..n).map(Reverse).collect();

    while let Some(Reverse(r)) = queue.pop() {
        if assignment[r].is_some() {
            continue;
        }
        let tiers = inst.resident_pref(r).tiers();
        let h = loop {
            let Some(tier) = tiers.get(tier_ptr[r]) else {
                unreachable!("complete lists cannot be exhausted");
            };
            let candidate = tier
                .iter()
                .copied()
                .filter(|&h| !proposed[r * m + h])
                .min_by_key(|&h| (members[h].len() >= inst.lower(h), h));
            match candidate {
                Some(h) => break h,
                None => tier_ptr[r] += 1,
            }
        };
        proposed[r * m + h] = true;
        let key = (hospital_rank[h][r], r);
        if members[h].len() < inst.upper(h) {
            members[h].insert(key);
            assignment[r] = Some(h);
        } else if let Some(&worst) = members[h].last() {
            if key < worst {
                members[h].remove(&worst);
                assignment[worst.1] = None;
                queue.push(Reverse(worst.1));
                members[h].insert(key);
                assignment[r] = Some(h);
            } else {
                queue.push(Reverse(r));
            }
        } else {
            queue.push(Reverse(r));
        }
    }
    Matching::from_assignment(assignment)
}
