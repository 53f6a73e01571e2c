//! Strategy-proofness machinery: the auxiliary instance, the run embedding,
//! and manipulation probes.
//!
//! A double-proposal run on an instance is exactly a plain deferred
//! acceptance run on a derived strict instance without ties or lower
//! quotas: every hospital splits into a "priority" copy capped at its lower
//! quota and a "regular" copy capped at its upper quota, each tie unfolds
//! into priority copies (ordered by lower quota, then index) followed by
//! regular copies, and dummy residents pad the copies so that their joint
//! capacity is consumed consistently. [`verify_aux_equivalence`] checks that
//! correspondence computationally; it is the mechanism behind the solver's
//! strategy-proofness, which [`probe`] and [`random_probe_campaign`] attack
//! empirically.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::classic::{gale_shapley, naive_adaptive, StrictInstance, TieBreakPolicy};
use crate::double_proposal::{solve, Trace};
use crate::instances::{gen_random, random_order, GenError, GenParams, ModelTag};
use crate::model::{Instance, Matching, ModelError, PreferenceOrder};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum StrategyError {
    #[error("trace inconsistent with matching: {0}")]
    TraceMismatch(String),
    #[error("probe campaign needs at least one trial")]
    NoTrials,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Gen(#[from] GenError),
}

/// The tie-free, quota-free image of an instance, with the index maps back
/// to the source.
///
/// Aux residents `0..n` are the originals; resident `dummy(j, p)` is the
/// `p`-th pad of hospital `j`. Aux hospital `regular(j)` keeps upper quota
/// `upper(j)`; `priority(j)` gets upper quota `lower(j)`.
#[derive(Clone, Debug)]
pub struct AuxInstance {
    strict: StrictInstance,
    source_residents: usize,
    source_hospitals: usize,
    dummy_start: Vec<usize>,
}

impl AuxInstance {
    pub fn strict(&self) -> &StrictInstance {
        &self.strict
    }

    pub fn regular(&self, j: usize) -> usize {
        j
    }

    pub fn priority(&self, j: usize) -> usize {
        self.source_hospitals + j
    }

    pub fn dummy(&self, j: usize, p: usize) -> usize {
        self.source_residents + self.dummy_start[j] + p
    }

    pub fn dummy_count(&self, j: usize) -> usize {
        self.dummy_start
            .get(j + 1)
            .copied()
            .unwrap_or(self.strict.residents() - self.source_residents)
            - self.dummy_start[j]
    }
}

/// Builds the auxiliary instance.
pub fn build_auxiliary(inst: &Instance) -> AuxInstance {
    let n = inst.residents();
    let m = inst.hospitals();
    let total_upper: usize = inst.uppers().iter().sum();
    let aux_n = n + total_upper;
    let mut dummy_start = Vec::with_capacity(m + 1);
    let mut acc = 0usize;
    for j in 0..m {
        dummy_start.push(acc);
        acc += inst.upper(j);
    }
    dummy_start.push(acc);

    let regular = |j: usize| j;
    let priority = |j: usize| m + j;
    let dummy = |j: usize, p: usize| n + dummy_start[j] + p;

    // Real residents: each tie becomes its priority copies then its regular
    // copies, the tie sorted by (lower quota, index).
    let mut resident_lists: Vec<Vec<usize>> = Vec::with_capacity(aux_n);
    for i in 0..n {
        let mut list = Vec::with_capacity(2 * m);
        for tier in inst.resident_pref(i).tiers() {
            let mut sorted = tier.clone();
            sorted.sort_unstable_by_key(|&j| (inst.lower(j), j));
            list.extend(sorted.iter().map(|&j| priority(j)));
            list.extend(sorted.iter().map(|&j| regular(j)));
        }
        resident_lists.push(list);
    }
    // Dummy residents want the regular copy, then the priority copy.
    for j in 0..m {
        for _ in 0..inst.upper(j) {
            resident_lists.push(vec![regular(j), priority(j)]);
        }
    }

    // Regular copy: the source list with ties broken by ascending index,
    // then its own dummies. Priority copy: its dummies, then everyone.
    let mut hospital_lists: Vec<Vec<usize>> = vec![Vec::new(); 2 * m];
    let mut lower = vec![0usize; 2 * m];
    let mut upper = vec![0usize; 2 * m];
    for j in 0..m {
        let mut regular_list: Vec<usize> =
            inst.hospital_pref(j).tiers().iter().flatten().copied().collect();
        regular_list.extend((0..inst.upper(j)).map(|p| dummy(j, p)));
        hospital_lists[regular(j)] = regular_list;
        upper[regular(j)] = inst.upper(j);

        let mut priority_list: Vec<usize> = (0..inst.upper(j)).map(|p| dummy(j, p)).collect();
        priority_list.extend(0..n);
        hospital_lists[priority(j)] = priority_list;
        upper[priority(j)] = inst.lower(j);
    }
    lower.fill(0);

    let strict = StrictInstance::new(resident_lists, hospital_lists, lower, upper)
        .expect("auxiliary construction is well-formed");
    AuxInstance {
        strict,
        source_residents: n,
        source_hospitals: m,
        dummy_start,
    }
}

/// Translates a solver run into the auxiliary instance.
///
/// A resident never rejected by its final hospital sits at the priority
/// copy; one accepted on its second proposal sits at the regular copy.
/// Dummies fill the remaining regular seats and as much priority capacity
/// as the source loads dictate.
pub fn embed_matching(
    inst: &Instance,
    mat: &Matching,
    trace: &Trace,
) -> Result<Matching, StrategyError> {
    let n = inst.residents();
    let m = inst.hospitals();
    if trace.residents() != n || trace.hospitals() != m || mat.len() != n {
        return Err(StrategyError::TraceMismatch(
            "dimensions differ from the instance".into(),
        ));
    }
    inst.check_feasible(mat).map_err(StrategyError::Model)?;
    let aux = build_auxiliary(inst);

    let mut aux_assignment: Vec<Option<usize>> = vec![None; aux.strict().residents()];
    let mut never_rejected_load = vec![0usize; m];
    let mut second_load = vec![0usize; m];
    for r in 0..n {
        let Some(h) = mat.get(r) else {
            return Err(StrategyError::TraceMismatch(format!(
                "resident {r} unmatched in a solver output"
            )));
        };
        match trace.rejection_count(r, h) {
            0 => {
                never_rejected_load[h] += 1;
                aux_assignment[r] = Some(aux.priority(h));
            }
            1 => {
                second_load[h] += 1;
                aux_assignment[r] = Some(aux.regular(h));
            }
            _ => {
                return Err(StrategyError::TraceMismatch(format!(
                    "resident {r} matched to a hospital that rejected it twice"
                )));
            }
        }
    }
    for h in 0..m {
        if never_rejected_load[h] > inst.lower(h) {
            return Err(StrategyError::TraceMismatch(format!(
                "hospital {h} holds more never-rejected residents than its lower quota"
            )));
        }
        let u = inst.upper(h);
        let load = never_rejected_load[h] + second_load[h];
        let regular_dummies = u - second_load[h];
        let priority_end = (u - load + inst.lower(h)).min(u);
        for p in 0..u {
            if p < regular_dummies {
                aux_assignment[aux.dummy(h, p)] = Some(aux.regular(h));
            } else if p < priority_end {
                aux_assignment[aux.dummy(h, p)] = Some(aux.priority(h));
            }
        }
    }
    Ok(Matching::from_assignment(aux_assignment))
}

/// Checks that plain deferred acceptance on the auxiliary instance
/// reproduces the embedded solver run exactly.
pub fn verify_aux_equivalence(inst: &Instance) -> Result<bool, StrategyError> {
    let (mat, trace) = solve(inst);
    let embedded = embed_matching(inst, &mat, &trace)?;
    let aux = build_auxiliary(inst);
    Ok(gale_shapley(aux.strict()) == embedded)
}

/// The solvers a probe can attack.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    DoubleProposal,
    GaleShapley(TieBreakPolicy),
    NaiveAdaptive,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::DoubleProposal => "double",
            SolverKind::GaleShapley(_) => "gs",
            SolverKind::NaiveAdaptive => "naive",
        }
    }
}

/// Runs the named solver.
pub fn run_solver(kind: SolverKind, inst: &Instance) -> Matching {
    match kind {
        SolverKind::DoubleProposal => solve(inst).0,
        SolverKind::GaleShapley(policy) => {
            gale_shapley(&crate::classic::break_ties(inst, policy))
        }
        SolverKind::NaiveAdaptive => naive_adaptive(inst),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeOutcome {
    NoGain,
    StrictGain,
}

/// Result of one manipulation attempt, judged under the true list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManipulationReport {
    pub resident: usize,
    pub true_assignment: Option<usize>,
    pub manipulated_assignment: Option<usize>,
    pub outcome: ProbeOutcome,
    pub fake: PreferenceOrder,
}

/// Runs `solver` on `inst` and on the instance where `resident` reports
/// `fake` instead, and compares the resident's two assignments under its
/// true preferences.
pub fn probe(
    inst: &Instance,
    solver: SolverKind,
    resident: usize,
    fake: &PreferenceOrder,
) -> Result<ManipulationReport, StrategyError> {
    probe_with(inst, |i| run_solver(solver, i), resident, fake)
}

/// [`probe`] against an arbitrary deterministic solver.
pub fn probe_with<F>(
    inst: &Instance,
    solver: F,
    resident: usize,
    fake: &PreferenceOrder,
) -> Result<ManipulationReport, StrategyError>
where
    F: Fn(&Instance) -> Matching,
{
    let manipulated = inst.with_resident_pref(resident, fake.clone())?;
    let truthful = solver(inst);
    let lied = solver(&manipulated);
    let true_assignment = truthful.get(resident);
    let manipulated_assignment = lied.get(resident);
    let true_pref = inst.resident_pref(resident);
    let rank_of = |h: Option<usize>| -> Result<usize, ModelError> {
        h.map_or(Ok(usize::MAX), |h| true_pref.rank(h))
    };
    let outcome = if rank_of(manipulated_assignment)? < rank_of(true_assignment)? {
        ProbeOutcome::StrictGain
    } else {
        ProbeOutcome::NoGain
    };
    Ok(ManipulationReport {
        resident,
        true_assignment,
        manipulated_assignment,
        outcome,
        fake: fake.clone(),
    })
}

/// A fixed (instance, resident, fake list) attack, used to seed campaigns
/// with known counterexamples.
#[derive(Clone, Debug)]
pub struct ProbeTriple {
    pub instance: Instance,
    pub resident: usize,
    pub fake: PreferenceOrder,
}

/// Instance distribution and size of a probe campaign.
#[derive(Clone, Debug)]
pub struct CampaignParams {
    pub models: Vec<ModelTag>,
    pub max_n: usize,
    pub max_m: usize,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct CampaignSummary {
    pub trials: usize,
    pub strict_gains: usize,
    /// Trial index and report of the first successful manipulation.
    pub first_gain: Option<(usize, ManipulationReport)>,
}

fn split_seed(seed: u64, t: u64) -> u64 {
    // splitmix64 step over seed + t
    let mut z = seed
        .wrapping_add(t.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Probes `solver` with `params.trials` attacks: the `seeded` triples first,
/// then random (instance, resident, fake list) samples from the requested
/// models. Deterministic given the seed.
pub fn random_probe_campaign(
    params: &CampaignParams,
    solver: SolverKind,
    seeded: &[ProbeTriple],
) -> Result<CampaignSummary, StrategyError> {
    if params.trials == 0 {
        return Err(StrategyError::NoTrials);
    }
    assert!(
        !params.models.is_empty() && params.max_n >= 1 && params.max_m >= 2,
        "campaign needs a model pool and room for at least 1 resident and 2 hospitals"
    );
    let mut strict_gains = 0usize;
    let mut first_gain = None;
    for t in 0..params.trials {
        let report = if let Some(triple) = seeded.get(t) {
            probe(&triple.instance, solver, triple.resident, &triple.fake)?
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(split_seed(params.seed, t as u64));
            let model = params.models[rng.gen_range(0..params.models.len())];
            let n = rng.gen_range(1..=params.max_n);
            let m = match model {
                // the marriage model needs more hospitals than residents
                ModelTag::Marriage => rng.gen_range(n + 1..=params.max_m.max(n + 1)),
                _ => rng.gen_range(2..=params.max_m),
            };
            let mut gen = GenParams::new(model, n, m, rng.gen());
            gen.upper_range = (1, n);
            gen.resident_tie_density = rng.gen_range(0.0..0.8);
            gen.hospital_tie_density = rng.gen_range(0.0..0.8);
            let instance = gen_random(&gen)?;
            let resident = rng.gen_range(0..n);
            let fake = random_order(&mut rng, m, 0.3);
            probe(&instance, solver, resident, &fake)?
        };
        if report.outcome == ProbeOutcome::StrictGain {
            strict_gains += 1;
            if first_gain.is_none() {
                first_gain = Some((t, report));
            }
        }
    }
    Ok(CampaignSummary {
        trials: params.trials,
        strict_gains,
        first_gain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples;

    #[test]
    fn auxiliary_structure() {
        // A tie (h2 h4 h5) with lower quotas making h4, h5 cheaper than h2,
        // then h3, then (h1 h6) with h6 cheaper: the aux list interleaves
        // priority and regular copies per tie in quota order.
        let inst = Instance::new(
            vec![
                PreferenceOrder::new(vec![vec![1, 3, 4], vec![2], vec![0, 5]], 6).unwrap(),
                PreferenceOrder::single_tie(6),
            ],
            vec![PreferenceOrder::single_tie(2); 6],
            vec![2, 2, 1, 1, 1, 0],
            vec![2, 2, 1, 1, 1, 1],
        )
        .unwrap();
        let aux = build_auxiliary(&inst);
        let p = |j: usize| aux.priority(j);
        let r = |j: usize| aux.regular(j);
        assert_eq!(
            aux.strict().resident_list(0),
            &[
                p(3), p(4), p(1), r(3), r(4), r(1),
                p(2), r(2),
                p(5), p(0), r(5), r(0),
            ]
        );
    }

    #[test]
    fn auxiliary_of_strict_list_alternates() {
        let inst = samples::marriage_manipulation_instance();
        let aux = build_auxiliary(&inst);
        // strict source list h1 h2 h3: priority then regular per position
        assert_eq!(
            aux.strict().resident_list(0),
            &[
                aux.priority(0), aux.regular(0),
                aux.priority(1), aux.regular(1),
                aux.priority(2), aux.regular(2),
            ]
        );
        // 2 + (1 + 1 + 1) residents, 6 hospitals; the priority copy of the
        // zero-lower-quota hospital has capacity 0.
        assert_eq!(aux.strict().residents(), 5);
        assert_eq!(aux.strict().hospitals(), 6);
        assert_eq!(aux.strict().upper(aux.regular(2)), 1);
        assert_eq!(aux.strict().upper(aux.priority(2)), 0);
        // dummies want regular first
        assert_eq!(
            aux.strict().resident_list(aux.dummy(0, 0)),
            &[aux.regular(0), aux.priority(0)]
        );
        // aux real lists double the source length
        for i in 0..2 {
            assert_eq!(aux.strict().resident_list(i).len(), 2 * 3);
        }
    }

    #[test]
    fn embeds_run_of_marriage_manipulation_instance() {
        let inst = samples::marriage_manipulation_instance();
        let (mat, trace) = solve(&inst);
        // r1 was bounced once by h1 before settling there; r2 never by h2.
        assert_eq!(trace.rejection_count(0, 0), 1);
        assert_eq!(trace.rejection_count(1, 1), 0);
        let aux = build_auxiliary(&inst);
        let embedded = embed_matching(&inst, &mat, &trace).unwrap();
        assert_eq!(embedded.get(0), Some(aux.regular(0)));
        assert_eq!(embedded.get(1), Some(aux.priority(1)));
        // h1's single dummy pads the priority copy, h2's and h3's pad the
        // regular copies.
        assert_eq!(embedded.get(aux.dummy(0, 0)), Some(aux.priority(0)));
        assert_eq!(embedded.get(aux.dummy(1, 0)), Some(aux.regular(1)));
        assert_eq!(embedded.get(aux.dummy(2, 0)), Some(aux.regular(2)));
    }

    #[test]
    fn embed_respects_aux_quotas() {
        for seed in 0..50 {
            let params = GenParams::new(ModelTag::General, 1 + (seed as usize % 6), 4, seed);
            let inst = gen_random(&params).unwrap();
            let (mat, trace) = solve(&inst);
            let aux = build_auxiliary(&inst);
            let embedded = embed_matching(&inst, &mat, &trace).unwrap();
            let loads = embedded.loads(aux.strict().hospitals());
            for j in 0..inst.hospitals() {
                assert!(loads[aux.regular(j)] <= aux.strict().upper(aux.regular(j)));
                assert!(loads[aux.priority(j)] <= aux.strict().upper(aux.priority(j)));
                // the two copies jointly hold the source load plus pads
                assert_eq!(
                    loads[aux.regular(j)],
                    aux.strict().upper(aux.regular(j)),
                    "the regular copy is always full"
                );
            }
        }
    }

    #[test]
    fn aux_equivalence_on_samples() {
        for inst in [
            samples::marriage_manipulation_instance(),
            samples::uniform_manipulation_instance(),
            samples::adaptive_tiebreak_counterexample(),
        ] {
            assert!(verify_aux_equivalence(&inst).unwrap());
        }
    }

    #[test]
    fn trace_mismatch_detected() {
        let inst = samples::marriage_manipulation_instance();
        let (_, trace) = solve(&inst);
        let foreign = Matching::from_pairs(2, &[(0, 1), (1, 0)]).unwrap();
        assert!(matches!(
            embed_matching(&inst, &foreign, &trace),
            Err(StrategyError::TraceMismatch(_))
        ));
    }

    #[test]
    fn probing_double_proposal_never_gains() {
        let inst = samples::marriage_manipulation_instance();
        let fake = PreferenceOrder::strict(&[0, 2, 1]).unwrap();
        let report = probe(&inst, SolverKind::DoubleProposal, 1, &fake).unwrap();
        assert_eq!(report.outcome, ProbeOutcome::NoGain);
    }

    #[test]
    fn probing_naive_adaptive_finds_the_documented_gain() {
        let inst = samples::adaptive_tiebreak_counterexample();
        let report = probe(
            &inst,
            SolverKind::NaiveAdaptive,
            0,
            &samples::adaptive_tiebreak_fake_r1(),
        )
        .unwrap();
        assert_eq!(report.outcome, ProbeOutcome::StrictGain);
        assert_eq!(report.true_assignment, Some(2));
        assert_eq!(report.manipulated_assignment, Some(1));
    }

    #[test]
    fn optimal_solvers_are_manipulable() {
        use crate::oracle::{gap_report, Budget};
        let optimal = |inst: &Instance| {
            gap_report(inst, Budget::default()).unwrap().optimal_matching
        };
        let inst = samples::uniform_manipulation_instance();
        let answer = optimal(&inst);
        let (m1, m2) = samples::uniform_manipulation_stable_matchings();
        assert!(answer == m1 || answer == m2);
        let (resident, fake) = if answer == m1 {
            (1, samples::uniform_manipulation_fake_r2())
        } else {
            (5, samples::uniform_manipulation_fake_r6())
        };
        let report = probe_with(&inst, optimal, resident, &fake).unwrap();
        assert_eq!(report.outcome, ProbeOutcome::StrictGain);
    }

    #[test]
    fn campaign_is_deterministic_and_rejects_zero_trials() {
        let params = CampaignParams {
            models: vec![ModelTag::General, ModelTag::Marriage],
            max_n: 5,
            max_m: 6,
            trials: 40,
            seed: 11,
        };
        let a = random_probe_campaign(&params, SolverKind::DoubleProposal, &[]).unwrap();
        let b = random_probe_campaign(&params, SolverKind::DoubleProposal, &[]).unwrap();
        assert_eq!(a.strict_gains, b.strict_gains);
        assert_eq!(a.trials, 40);
        assert_eq!(a.strict_gains, 0);

        let none = CampaignParams { trials: 0, ..params };
        assert!(matches!(
            random_probe_campaign(&none, SolverKind::DoubleProposal, &[]),
            Err(StrategyError::NoTrials)
        ));
    }
}
