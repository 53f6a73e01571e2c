//! Core domain types: instances, matchings, scoring and stability.
//!
//! An instance has `n` residents and `m` hospitals. Every agent ranks all
//! counterparts in a complete preference order that may contain ties, and
//! every hospital carries a quota interval `[lower, upper]`. The score of a
//! matching is the sum over hospitals of `min(1, assigned/lower)` (defined as
//! 1 when the lower quota is 0), computed exactly.
//!
//! Indices are 0-based everywhere in the API; the text formats in [`crate::io`]
//! are 1-based.

use thiserror::Error;

use crate::score::Score;

/// Which side of the market an agent belongs to, for error reporting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Resident,
    Hospital,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::Resident => write!(f, "resident"),
            Side::Hospital => write!(f, "hospital"),
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("hospital {hospital}: quotas [{lower}, {upper}] violate lower <= upper <= {n}")]
    QuotaOrder {
        hospital: usize,
        lower: usize,
        upper: usize,
        n: usize,
    },
    #[error("{side} {agent}: preference list does not cover each counterpart exactly once (offender {counterpart})")]
    IncompletePreference {
        side: Side,
        agent: usize,
        counterpart: usize,
    },
    #[error("{side} {agent}: preference list contains an empty tie")]
    EmptyTier { side: Side, agent: usize },
    #[error("trivial instance rejected: {n} residents with total upper quota {total_upper} (need n < sum of uppers)")]
    AssumptionViolated { n: usize, total_upper: usize },
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },
    #[error("infeasible matching: hospital {hospital} holds {load} residents, upper quota {upper}")]
    InfeasibleMatching {
        hospital: usize,
        load: usize,
        upper: usize,
    },
}

/// A complete preference order over `0..ground` with ties.
///
/// Tiers are listed from most to least preferred; members within a tier are
/// equally preferred. Members are kept sorted inside each tier, so two orders
/// are structurally equal iff they express the same relation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PreferenceOrder {
    tiers: Vec<Vec<usize>>,
    ground: usize,
}

impl PreferenceOrder {
    /// Validates that `tiers` is an ordered partition of `0..ground` with no
    /// empty tier. This is the constructor used by instance validation.
    pub fn new(tiers: Vec<Vec<usize>>, ground: usize) -> Result<Self, ModelError> {
        let mut seen = vec![false; ground];
        let mut tiers = tiers;
        for tier in &mut tiers {
            if tier.is_empty() {
                return Err(ModelError::EmptyTier {
                    side: Side::Resident,
                    agent: 0,
                });
            }
            for &x in tier.iter() {
                if x >= ground {
                    return Err(ModelError::IndexOutOfRange {
                        index: x,
                        limit: ground,
                    });
                }
                if seen[x] {
                    return Err(ModelError::IncompletePreference {
                        side: Side::Resident,
                        agent: 0,
                        counterpart: x,
                    });
                }
                seen[x] = true;
            }
            tier.sort_unstable();
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(ModelError::IncompletePreference {
                side: Side::Resident,
                agent: 0,
                counterpart: missing,
            });
        }
        Ok(PreferenceOrder { tiers, ground })
    }

    /// A strict order given by a permutation of `0..len`.
    pub fn strict(order: &[usize]) -> Result<Self, ModelError> {
        Self::new(order.iter().map(|&x| vec![x]).collect(), order.len())
    }

    /// One tie containing everything: total indifference.
    pub fn single_tie(ground: usize) -> Self {
        PreferenceOrder {
            tiers: vec![(0..ground).collect()],
            ground,
        }
    }

    pub fn tiers(&self) -> &[Vec<usize>] {
        &self.tiers
    }

    pub fn ground(&self) -> usize {
        self.ground
    }

    /// 0-based tier index of `x`; smaller is better. `rank(x) < rank(y)` iff
    /// `x` is strictly preferred to `y`; equal ranks mean indifference.
    pub fn rank(&self, x: usize) -> Result<usize, ModelError> {
        if x >= self.ground {
            return Err(ModelError::IndexOutOfRange {
                index: x,
                limit: self.ground,
            });
        }
        for (t, tier) in self.tiers.iter().enumerate() {
            if tier.binary_search(&x).is_ok() {
                return Ok(t);
            }
        }
        unreachable!("complete order misses {x}");
    }

    /// Dense rank lookup table: `table[x]` is the tier index of `x`.
    pub fn rank_table(&self) -> Vec<usize> {
        let mut table = vec![0usize; self.ground];
        for (t, tier) in self.tiers.iter().enumerate() {
            for &x in tier {
                table[x] = t;
            }
        }
        table
    }

    fn relabeled(&self, side: Side, agent: usize) -> impl Fn(ModelError) -> ModelError {
        move |e| match e {
            ModelError::IncompletePreference { counterpart, .. } => {
                ModelError::IncompletePreference {
                    side,
                    agent,
                    counterpart,
                }
            }
            ModelError::EmptyTier { .. } => ModelError::EmptyTier { side, agent },
            other => other,
        }
    }
}

/// A validated problem instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    resident_prefs: Vec<PreferenceOrder>,
    hospital_prefs: Vec<PreferenceOrder>,
    lower: Vec<usize>,
    upper: Vec<usize>,
}

impl Instance {
    /// Validates raw parts into an instance.
    ///
    /// Rejects quota violations (`lower <= upper <= n` per hospital), lists
    /// that are not complete tied orders over the counterpart set, and the
    /// trivial regime `n >= sum of uppers` in which every stable matching
    /// fills every hospital and the score cannot vary.
    pub fn new(
        resident_prefs: Vec<PreferenceOrder>,
        hospital_prefs: Vec<PreferenceOrder>,
        lower: Vec<usize>,
        upper: Vec<usize>,
    ) -> Result<Self, ModelError> {
        let n = resident_prefs.len();
        let m = hospital_prefs.len();
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
        let total_upper: usize = upper.iter().sum();
        if n >= total_upper {
            return Err(ModelError::AssumptionViolated { n, total_upper });
        }
        for (i, p) in resident_prefs.iter().enumerate() {
            if p.ground() != m {
                return Err(ModelError::IndexOutOfRange {
                    index: p.ground(),
                    limit: m,
                });
            }
            // Re-validate so errors carry the owner; construction via
            // PreferenceOrder::new already checked the partition shape.
            PreferenceOrder::new(p.tiers.clone(), m)
                .map_err(p.relabeled(Side::Resident, i))?;
        }
        for (j, p) in hospital_prefs.iter().enumerate() {
            if p.ground() != n {
                return Err(ModelError::IndexOutOfRange {
                    index: p.ground(),
                    limit: n,
                });
            }
            PreferenceOrder::new(p.tiers.clone(), n)
                .map_err(p.relabeled(Side::Hospital, j))?;
        }
        Ok(Instance {
            resident_prefs,
            hospital_prefs,
            lower,
            upper,
        })
    }

    pub fn residents(&self) -> usize {
        self.resident_prefs.len()
    }

    pub fn hospitals(&self) -> usize {
        self.hospital_prefs.len()
    }

    pub fn resident_pref(&self, r: usize) -> &PreferenceOrder {
        &self.resident_prefs[r]
    }

    pub fn hospital_pref(&self, h: usize) -> &PreferenceOrder {
        &self.hospital_prefs[h]
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

    /// The instance with resident `r`'s list replaced (used by manipulation
    /// probes). The replacement must be a complete order over the hospitals.
    pub fn with_resident_pref(
        &self,
        r: usize,
        pref: PreferenceOrder,
    ) -> Result<Instance, ModelError> {
        if r >= self.residents() {
            return Err(ModelError::IndexOutOfRange {
                index: r,
                limit: self.residents(),
            });
        }
        let mut resident_prefs = self.resident_prefs.clone();
        resident_prefs[r] = pref;
        Instance::new(
            resident_prefs,
            self.hospital_prefs.clone(),
            self.lower.clone(),
            self.upper.clone(),
        )
    }

    /// True iff `mat` respects resident bounds and all upper quotas.
    pub fn is_feasible(&self, mat: &Matching) -> bool {
        self.feasibility_error(mat).is_none()
    }

    fn feasibility_error(&self, mat: &Matching) -> Option<ModelError> {
        if mat.len() != self.residents() {
            return Some(ModelError::IndexOutOfRange {
                index: mat.len(),
                limit: self.residents(),
            });
        }
        let mut load = vec![0usize; self.hospitals()];
        for r in 0..mat.len() {
            if let Some(h) = mat.get(r) {
                if h >= self.hospitals() {
                    return Some(ModelError::IndexOutOfRange {
                        index: h,
                        limit: self.hospitals(),
                    });
                }
                load[h] += 1;
            }
        }
        for h in 0..self.hospitals() {
            if load[h] > self.upper[h] {
                return Some(ModelError::InfeasibleMatching {
                    hospital: h,
                    load: load[h],
                    upper: self.upper[h],
                });
            }
        }
        None
    }

    /// Like [`Instance::is_feasible`] but reports the violation.
    pub fn check_feasible(&self, mat: &Matching) -> Result<(), ModelError> {
        match self.feasibility_error(mat) {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    /// Satisfaction ratio of hospital `h`: `min(1, load/lower)`, and 1 when
    /// the lower quota is 0.
    pub fn satisfaction_ratio(&self, mat: &Matching, h: usize) -> Result<Score, ModelError> {
        self.check_feasible(mat)?;
        if h >= self.hospitals() {
            return Err(ModelError::IndexOutOfRange {
                index: h,
                limit: self.hospitals(),
            });
        }
        Ok(self.ratio_of_load(h, mat.load(h)))
    }

    fn ratio_of_load(&self, h: usize, load: usize) -> Score {
        if self.lower[h] == 0 {
            Score::one()
        } else {
            Score::one().min(Score::ratio(load as u64, self.lower[h] as u64))
        }
    }

    /// Total score: the sum of satisfaction ratios over all hospitals.
    pub fn total_score(&self, mat: &Matching) -> Result<Score, ModelError> {
        self.check_feasible(mat)?;
        let loads = mat.loads(self.hospitals());
        Ok((0..self.hospitals())
            .map(|h| self.ratio_of_load(h, loads[h]))
            .sum())
    }

    /// All pairs that block `mat`: the resident is unmatched or strictly
    /// prefers the hospital, and the hospital is undersubscribed or strictly
    /// prefers the resident to one it holds.
    pub fn blocking_pairs(&self, mat: &Matching) -> Result<Vec<BlockingPair>, ModelError> {
        self.check_feasible(mat)?;
        let loads = mat.loads(self.hospitals());
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); self.hospitals()];
        for r in 0..self.residents() {
            if let Some(h) = mat.get(r) {
                members[h].push(r);
            }
        }
        let mut out = Vec::new();
        for r in 0..self.residents() {
            let ranks = self.resident_prefs[r].rank_table();
            let current = mat.get(r).map(|h| ranks[h]);
            for h in 0..self.hospitals() {
                let wants = match current {
                    None => true,
                    Some(c) => ranks[h] < c,
                };
                if !wants {
                    continue;
                }
                let reason = if loads[h] < self.upper[h] {
                    Some(BlockReason::HospitalUndersubscribed)
                } else {
                    let hranks = self.hospital_prefs[h].rank_table();
                    if members[h].iter().any(|&q| hranks[q] > hranks[r]) {
                        Some(BlockReason::HospitalPrefers)
                    } else {
                        None
                    }
                };
                if let Some(reason) = reason {
                    out.push(BlockingPair {
                        resident: r,
                        hospital: h,
                        reason,
                    });
                }
            }
        }
        Ok(out)
    }

    /// True iff `mat` admits no blocking pair.
    pub fn is_stable(&self, mat: &Matching) -> Result<bool, ModelError> {
        Ok(self.blocking_pairs(mat)?.is_empty())
    }
}

/// Why a pair blocks: the hospital has a free seat, or strictly prefers the
/// resident to someone it currently holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockReason {
    HospitalUndersubscribed,
    HospitalPrefers,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockingPair {
    pub resident: usize,
    pub hospital: usize,
    pub reason: BlockReason,
}

/// A partial assignment of residents to hospitals.
///
/// Each resident is assigned at most one hospital by construction; quota
/// feasibility is checked against an instance.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Matching {
    assignment: Vec<Option<usize>>,
}

impl Matching {
    pub fn empty(n: usize) -> Self {
        Matching {
            assignment: vec![None; n],
        }
    }

    pub fn from_assignment(assignment: Vec<Option<usize>>) -> Self {
        Matching { assignment }
    }

    /// Builds from `(resident, hospital)` pairs; a duplicated resident is an
    /// error.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self, ModelError> {
        let mut mat = Matching::empty(n);
        for &(r, h) in pairs {
            if r >= n {
                return Err(ModelError::IndexOutOfRange { index: r, limit: n });
            }
            if mat.assignment[r].is_some() {
                return Err(ModelError::IncompletePreference {
                    side: Side::Resident,
                    agent: r,
                    counterpart: h,
                });
            }
            mat.assignment[r] = Some(h);
        }
        Ok(mat)
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn get(&self, r: usize) -> Option<usize> {
        self.assignment[r]
    }

    pub fn set(&mut self, r: usize, h: Option<usize>) {
        self.assignment[r] = h;
    }

    pub fn assignment(&self) -> &[Option<usize>] {
        &self.assignment
    }

    /// Matched pairs in resident order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(r, h)| h.map(|h| (r, h)))
            .collect()
    }

    pub fn matched_count(&self) -> usize {
        self.assignment.iter().filter(|h| h.is_some()).count()
    }

    pub fn load(&self, h: usize) -> usize {
        self.assignment.iter().filter(|&&a| a == Some(h)).count()
    }

    /// Per-hospital load vector.
    pub fn loads(&self, m: usize) -> Vec<usize> {
        let mut loads = vec![0usize; m];
        for &a in &self.assignment {
            if let Some(h) = a {
                loads[h] += 1;
            }
        }
        loads
    }
}
