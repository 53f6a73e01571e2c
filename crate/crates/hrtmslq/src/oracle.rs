//! Exhaustive ground truth on small instances.
//!
//! [`enumerate_stable`] finds every stable matching by depth-first
//! assignment of residents to hospitals. Complete lists plus the
//! undersupply assumption mean only full assignments can be stable, and two
//! facts prune the tree: a hospital that once holds a resident it likes less
//! than some outside admirer blocks forever, and a hospital strictly
//! preferred by an assigned resident must end up full. Every emitted
//! matching is still re-checked against the direct blocking-pair definition.
//!
//! [`theoretical_bound`] evaluates the worst-case gap and approximation
//! guarantees per model family, exactly.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::classic::{gale_shapley, StrictInstance};
use crate::model::{Instance, Matching, ModelError};
use crate::score::Score;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("search budget exceeded ({nodes} nodes, {stable} stable matchings)")]
    BudgetExceeded { nodes: u64, stable: usize },
    #[error("unsupported bound combination: {0}")]
    UnsupportedCombination(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Search limits for the enumeration oracles.
#[derive(Clone, Copy, Debug)]
pub struct Budget {
    pub max_nodes: u64,
    pub max_stable: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_nodes: 1_000_000,
            max_stable: 10_000,
        }
    }
}

impl Budget {
    pub fn new(max_nodes: u64, max_stable: usize) -> Self {
        Budget {
            max_nodes,
            max_stable,
        }
    }
}

struct Search<'a> {
    inst: &'a Instance,
    budget: Budget,
    /// resident tiers, used to walk strictly preferred hospitals
    res_tiers: Vec<Vec<Vec<usize>>>,
    res_rank: Vec<Vec<usize>>,
    hosp_rank: Vec<Vec<usize>>,
    assignment: Vec<Option<usize>>,
    /// per hospital: ranks of current members (stack in assignment order)
    member_ranks: Vec<Vec<usize>>,
    /// per hospital: ranks of outside residents that strictly prefer it
    admirers: Vec<Vec<usize>>,
    nodes: u64,
    found: Vec<Matching>,
}

impl<'a> Search<'a> {
    fn run(inst: &'a Instance, budget: Budget) -> Result<Vec<Matching>, OracleError> {
        let n = inst.residents();
        let m = inst.hospitals();
        let mut search = Search {
            inst,
            budget,
            res_tiers: (0..n).map(|r| inst.resident_pref(r).tiers().to_vec()).collect(),
            res_rank: (0..n).map(|r| inst.resident_pref(r).rank_table()).collect(),
            hosp_rank: (0..m).map(|h| inst.hospital_pref(h).rank_table()).collect(),
            assignment: vec![None; n],
            member_ranks: vec![Vec::new(); m],
            admirers: vec![Vec::new(); m],
            nodes: 0,
            found: Vec::new(),
        };
        search.assign(0)?;
        Ok(search.found)
    }

    fn budget_error(&self) -> OracleError {
        OracleError::BudgetExceeded {
            nodes: self.nodes,
            stable: self.found.len(),
        }
    }

    fn assign(&mut self, r: usize) -> Result<(), OracleError> {
        let n = self.inst.residents();
        let m = self.inst.hospitals();
        if r == n {
            // Member-based blocks were pruned on the way down; a stable leaf
            // only needs every admired hospital full.
            let full = (0..m).all(|h| {
                self.admirers[h].is_empty() || self.member_ranks[h].len() == self.inst.upper(h)
            });
            if full {
                let mat = Matching::from_assignment(self.assignment.clone());
                assert!(
                    self.inst.is_stable(&mat).unwrap_or(false),
                    "enumeration pruning produced an unstable candidate"
                );
                self.found.push(mat);
                if self.found.len() > self.budget.max_stable {
                    return Err(self.budget_error());
                }
            }
            return Ok(());
        }
        for h in 0..m {
            self.nodes += 1;
            if self.nodes > self.budget.max_nodes {
                return Err(self.budget_error());
            }
            if self.member_ranks[h].len() == self.inst.upper(h) {
                continue;
            }
            // (r, h') would block forever if some strictly preferred h'
            // already holds someone worse than r.
            let my_tier = self.res_rank[r][h];
            let mut blocked = false;
            'outer: for tier in &self.res_tiers[r][..my_tier] {
                for &pref in tier {
                    let my_rank = self.hosp_rank[pref][r];
                    if self.member_ranks[pref].iter().any(|&mr| mr > my_rank) {
                        blocked = true;
                        break 'outer;
                    }
                }
            }
            if blocked {
                continue;
            }
            // (r', h) would block forever if an outside admirer of h ranks
            // strictly better than r.
            let rank = self.hosp_rank[h][r];
            if self.admirers[h].iter().any(|&ar| ar < rank) {
                continue;
            }

            self.assignment[r] = Some(h);
            self.member_ranks[h].push(rank);
            for t in 0..my_tier {
                for i in 0..self.res_tiers[r][t].len() {
                    let pref = self.res_tiers[r][t][i];
                    let admirer_rank = self.hosp_rank[pref][r];
                    self.admirers[pref].push(admirer_rank);
                }
            }
            // Every admired hospital must end full; each remaining resident
            // can fill at most one seat.
            let need: usize = (0..m)
                .filter(|&hh| !self.admirers[hh].is_empty())
                .map(|hh| self.inst.upper(hh) - self.member_ranks[hh].len())
                .sum();
            let viable = need <= n - r - 1;
            let result = if viable { self.assign(r + 1) } else { Ok(()) };

            for t in 0..my_tier {
                for i in 0..self.res_tiers[r][t].len() {
                    let pref = self.res_tiers[r][t][i];
                    self.admirers[pref].pop();
                }
            }
            self.member_ranks[h].pop();
            self.assignment[r] = None;
            result?;
        }
        Ok(())
    }
}

/// Every stable matching of `inst`, in lexicographic assignment order.
pub fn enumerate_stable(inst: &Instance, budget: Budget) -> Result<Vec<Matching>, OracleError> {
    Search::run(inst, budget)
}

/// Extremes of the score over all stable matchings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GapReport {
    pub opt: Score,
    pub wst: Score,
    pub optimal_matching: Matching,
    pub worst_matching: Matching,
    pub count_stable: usize,
}

/// Enumerates and reports OPT, WST and their witnesses. Ties are resolved
/// toward the lexicographically smallest assignment.
pub fn gap_report(inst: &Instance, budget: Budget) -> Result<GapReport, OracleError> {
    let all = enumerate_stable(inst, budget)?;
    assert!(
        !all.is_empty(),
        "a valid instance always has a stable matching"
    );
    let mut best: Option<(Score, &Matching)> = None;
    let mut worst: Option<(Score, &Matching)> = None;
    for mat in &all {
        let s = inst.total_score(mat)?;
        if best.as_ref().is_none_or(|(b, _)| s > *b) {
            best = Some((s.clone(), mat));
        }
        if worst.as_ref().is_none_or(|(w, _)| s < *w) {
            worst = Some((s, mat));
        }
    }
    let (opt, optimal_matching) = best.map(|(s, m)| (s, m.clone())).unwrap();
    let (wst, worst_matching) = worst.map(|(s, m)| (s, m.clone())).unwrap();
    Ok(GapReport {
        opt,
        wst,
        optimal_matching,
        worst_matching,
        count_stable: all.len(),
    })
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, x);
            out.push(tail);
        }
    }
    out
}

/// Runs deferred acceptance under every tie-breaking of every tie (both
/// sides) and collects the distinct outputs. Each result is a stable
/// matching of `inst`; the set is a subset of [`enumerate_stable`].
pub fn tiebreak_sweep(inst: &Instance, budget: Budget) -> Result<BTreeSet<Matching>, OracleError> {
    // (side, agent, tier): all ties of size >= 2, with their permutations.
    let mut tie_perms: Vec<(bool, usize, usize, Vec<Vec<usize>>)> = Vec::new();
    let mut combos: u128 = 1;
    let mut record = |resident_side: bool, agent: usize, tiers: &[Vec<usize>]| {
        for (t, tier) in tiers.iter().enumerate() {
            if tier.len() >= 2 {
                let perms = permutations(tier);
                combos = combos.saturating_mul(perms.len() as u128);
                tie_perms.push((resident_side, agent, t, perms));
            }
        }
    };
    for r in 0..inst.residents() {
        record(true, r, inst.resident_pref(r).tiers());
    }
    for h in 0..inst.hospitals() {
        record(false, h, inst.hospital_pref(h).tiers());
    }
    if combos > budget.max_nodes as u128 {
        return Err(OracleError::BudgetExceeded {
            nodes: budget.max_nodes,
            stable: 0,
        });
    }

    let flatten = |tiers: &[Vec<usize>], overrides: &[(usize, &Vec<usize>)]| -> Vec<usize> {
        let mut out = Vec::new();
        for (t, tier) in tiers.iter().enumerate() {
            match overrides.iter().find(|(ot, _)| *ot == t) {
                Some((_, perm)) => out.extend(perm.iter().copied()),
                None => out.extend(tier.iter().copied()),
            }
        }
        out
    };

    let mut odometer = vec![0usize; tie_perms.len()];
    let mut results = BTreeSet::new();
    loop {
        let mut resident_lists: Vec<Vec<usize>> = Vec::with_capacity(inst.residents());
        let mut hospital_lists: Vec<Vec<usize>> = Vec::with_capacity(inst.hospitals());
        for r in 0..inst.residents() {
            let overrides: Vec<(usize, &Vec<usize>)> = tie_perms
                .iter()
                .zip(&odometer)
                .filter(|((res, agent, _, _), _)| *res && *agent == r)
                .map(|((_, _, t, perms), &k)| (*t, &perms[k]))
                .collect();
            resident_lists.push(flatten(inst.resident_pref(r).tiers(), &overrides));
        }
        for h in 0..inst.hospitals() {
            let overrides: Vec<(usize, &Vec<usize>)> = tie_perms
                .iter()
                .zip(&odometer)
                .filter(|((res, agent, _, _), _)| !*res && *agent == h)
                .map(|((_, _, t, perms), &k)| (*t, &perms[k]))
                .collect();
            hospital_lists.push(flatten(inst.hospital_pref(h).tiers(), &overrides));
        }
        let strict = StrictInstance::new(
            resident_lists,
            hospital_lists,
            inst.lowers().to_vec(),
            inst.uppers().to_vec(),
        )
        .expect("tie-breaking preserves validity");
        results.insert(gale_shapley(&strict));

        // advance the odometer
        let mut pos = 0;
        loop {
            if pos == odometer.len() {
                return Ok(results);
            }
            odometer[pos] += 1;
            if odometer[pos] < tie_perms[pos].3.len() {
                break;
            }
            odometer[pos] = 0;
            pos += 1;
        }
    }
}

/// True iff all stable matchings of a complete strict instance give every
/// hospital the same number of residents.
pub fn rural_check(strict: &StrictInstance, budget: Budget) -> Result<bool, OracleError> {
    let inst = strict.to_instance()?;
    let all = enumerate_stable(&inst, budget)?;
    let reference = all[0].loads(inst.hospitals());
    Ok(all.iter().all(|mat| mat.loads(inst.hospitals()) == reference))
}

/// Worst-case guarantee family: which model and its size parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundSpec {
    /// Arbitrary instances with `n` residents.
    General { n: u64 },
    /// All hospitals share quotas `[lower, upper]`, `lower >= 1`.
    Uniform { lower: u64, upper: u64 },
    /// All upper quotas 1.
    Marriage,
    /// All residents share one list; `n` residents.
    RSideMasterList { n: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundKind {
    /// Worst OPT/WST over the family: the guarantee of tie-breaking
    /// deferred acceptance.
    Gap,
    /// Worst OPT/ALG of the double-proposal solver over the family.
    Approx,
}

/// `phi(1) = 1`, `phi(2) = 3/2`, `phi(n) = n(1 + floor(n/2)) / (n + floor(n/2))`.
pub fn phi(n: u64) -> Score {
    match n {
        0 => panic!("phi needs at least one resident"),
        1 => Score::one(),
        2 => Score::ratio(3, 2),
        n => {
            let half = n / 2;
            Score::ratio(n * (1 + half), n + half)
        }
    }
}

/// Exact bound value for a model row.
pub fn theoretical_bound(spec: BoundSpec, kind: BoundKind) -> Result<Score, OracleError> {
    match (spec, kind) {
        (BoundSpec::General { n: 0 }, _) | (BoundSpec::RSideMasterList { n: 0 }, _) => Err(
            OracleError::UnsupportedCombination("need at least one resident".into()),
        ),
        (BoundSpec::General { n }, BoundKind::Gap) => Ok(Score::from_integer(n + 1)),
        (BoundSpec::General { n }, BoundKind::Approx) => Ok(phi(n)),
        (BoundSpec::Uniform { lower, upper }, kind) => {
            if lower == 0 || upper < lower {
                return Err(OracleError::UnsupportedCombination(format!(
                    "uniform bounds need 1 <= lower <= upper, got [{lower}, {upper}]"
                )));
            }
            match kind {
                BoundKind::Gap => Ok(Score::ratio(upper, lower)),
                // (theta^2 + theta - 1) / (2 theta - 1) with theta = upper/lower
                BoundKind::Approx => Ok(Score::ratio(
                    upper * upper + upper * lower - lower * lower,
                    lower * (2 * upper - lower),
                )),
            }
        }
        (BoundSpec::Marriage, BoundKind::Gap) => Ok(Score::from_integer(2)),
        (BoundSpec::Marriage, BoundKind::Approx) => Ok(Score::ratio(3, 2)),
        (BoundSpec::RSideMasterList { n }, BoundKind::Gap) => Ok(Score::from_integer(n + 1)),
        (BoundSpec::RSideMasterList { .. }, BoundKind::Approx) => Ok(Score::one()),
    }
}
