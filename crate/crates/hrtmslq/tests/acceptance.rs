//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (run with `--nocapture` to see them).

mod common;

use std::time::{Duration, Instant};

use hrtmslq::classic::{break_ties, naive_adaptive, TieBreakPolicy};
use hrtmslq::double_proposal::{solve, verify_lemma_properties};
use hrtmslq::instances::{
    brute_force_2is, gap_family_general, gap_family_marriage, gap_family_uniform, gen_random,
    reduce_2is_to_mslq, GenParams, ModelTag,
};
use hrtmslq::model::{Instance, Matching, PreferenceOrder};
use hrtmslq::oracle::{
    enumerate_stable, gap_report, rural_check, theoretical_bound, BoundKind, BoundSpec, Budget,
};
use hrtmslq::samples;
use hrtmslq::score::Score;
use hrtmslq::strategyproof::{
    probe, random_probe_campaign, verify_aux_equivalence, CampaignParams, ProbeOutcome,
    ProbeTriple, SolverKind,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn criterion(id: u32, name: &str, limit: Duration, body: impl FnOnce() -> Result<(), String>) {
    let start = Instant::now();
    let outcome = body();
    let elapsed = start.elapsed();
    match outcome {
        Ok(()) => {
            println!("criterion {id:2} ({name}): PASS in {elapsed:.2?} (limit {limit:?})");
            assert!(
                elapsed < limit,
                "criterion {id} exceeded its time budget: {elapsed:?} >= {limit:?}"
            );
        }
        Err(msg) => {
            println!("criterion {id:2} ({name}): FAIL — {msg}");
            panic!("criterion {id} failed: {msg}");
        }
    }
}

fn check(cond: bool, msg: impl Fn() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Random instance of a model with sizes and densities drawn from `rng`.
fn sample_instance(
    rng: &mut ChaCha8Rng,
    model: ModelTag,
    max_n: usize,
    max_m: usize,
) -> Instance {
    let (n, m) = match model {
        ModelTag::Marriage => {
            let m = rng.gen_range(2..=max_m);
            (rng.gen_range(1..m), m)
        }
        _ => (rng.gen_range(1..=max_n), rng.gen_range(1..=max_m).max(2)),
    };
    let mut params = GenParams::new(model, n, m, rng.gen());
    params.upper_range = (1, n);
    params.lower_range = (0, n);
    params.resident_tie_density = rng.gen_range(0.0..=1.0);
    params.hospital_tie_density = rng.gen_range(0.0..=1.0);
    gen_random(&params).expect("sampled parameters are satisfiable")
}

const MODELS: [ModelTag; 4] = [
    ModelTag::General,
    ModelTag::Uniform,
    ModelTag::Marriage,
    ModelTag::RSideMasterList,
];

#[test]
fn criterion_01_appendix_reproduction() {
    criterion(1, "appendix reproduction", Duration::from_secs(1), || {
        let budget = Budget::default();

        let inst = samples::marriage_manipulation_instance();
        let all = enumerate_stable(&inst, budget).map_err(|e| e.to_string())?;
        check(all.len() == 2, || format!("expected 2 stable matchings, got {}", all.len()))?;
        for mat in &all {
            let s = inst.total_score(mat).unwrap();
            check(s == Score::from_integer(3), || format!("expected score 3/1, got {s}"))?;
        }

        let manipulated = samples::marriage_manipulation_instance_manipulated();
        let all = enumerate_stable(&manipulated, budget).map_err(|e| e.to_string())?;
        check(all.len() == 2, || format!("expected 2 stable matchings, got {}", all.len()))?;
        let mut scores: Vec<Score> = all
            .iter()
            .map(|m| manipulated.total_score(m).unwrap())
            .collect();
        scores.sort();
        check(
            scores == vec![Score::from_integer(2), Score::from_integer(3)],
            || format!("expected scores {{2/1, 3/1}}, got {scores:?}"),
        )?;

        let inst = samples::uniform_manipulation_instance();
        let all = enumerate_stable(&inst, budget).map_err(|e| e.to_string())?;
        check(all.len() == 2, || format!("expected 2 stable matchings, got {}", all.len()))?;
        for mat in &all {
            let s = inst.total_score(mat).unwrap();
            check(s == Score::from_integer(4), || format!("expected score 4/1, got {s}"))?;
        }
        let (m1, m2) = samples::uniform_manipulation_stable_matchings();
        check(all == vec![m1, m2], || "stable set differs from the documented pair".into())
    });
}

#[test]
fn criterion_02_naive_counterexample() {
    criterion(2, "adaptive tie-breaking counterexample", Duration::from_secs(1), || {
        let inst = samples::adaptive_tiebreak_counterexample();
        let mat = naive_adaptive(&inst);
        check(
            mat.assignment() == [Some(2), Some(1), Some(0), Some(1), Some(0)],
            || "adaptive run differs from the documented matching".into(),
        )?;
        let manipulated = inst
            .with_resident_pref(0, samples::adaptive_tiebreak_fake_r1())
            .unwrap();
        let mat2 = naive_adaptive(&manipulated);
        check(
            mat2.assignment() == [Some(1), Some(0), Some(0), Some(1), Some(2)],
            || "manipulated adaptive run differs from the documented matching".into(),
        )?;

        let fake = samples::adaptive_tiebreak_fake_r1();
        let naive = probe(&inst, SolverKind::NaiveAdaptive, 0, &fake).map_err(|e| e.to_string())?;
        check(naive.outcome == ProbeOutcome::StrictGain, || {
            "the adaptive rule should be manipulable by resident 1".into()
        })?;
        let double = probe(&inst, SolverKind::DoubleProposal, 0, &fake).map_err(|e| e.to_string())?;
        check(double.outcome == ProbeOutcome::NoGain, || {
            "the double-proposal solver must not be manipulable here".into()
        })
    });
}

#[test]
fn criterion_03_stability_and_totality() {
    criterion(3, "stability + totality on 10k instances", Duration::from_secs(120), || {
        let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
        for trial in 0..10_000 {
            let model = MODELS[trial % MODELS.len()];
            let inst = sample_instance(&mut rng, model, 8, 5);
            let (mat, trace) = solve(&inst);
            check(mat.matched_count() == inst.residents(), || {
                format!("trial {trial}: unmatched resident")
            })?;
            let blocks = inst.blocking_pairs(&mat).unwrap();
            check(blocks.is_empty(), || {
                format!("trial {trial}: blocking pairs {blocks:?}")
            })?;
            let violations = verify_lemma_properties(&inst, &mat).unwrap();
            check(violations.is_empty(), || {
                format!("trial {trial}: local-optimality violations {violations:?}")
            })?;
            check(
                trace.proposal_count() <= 2 * inst.residents() * inst.hospitals(),
                || format!("trial {trial}: proposal bound exceeded"),
            )?;
        }
        Ok(())
    });
}

#[test]
fn criterion_04_approximation_bounds() {
    criterion(4, "approximation factors", Duration::from_secs(600), || {
        let budget = Budget::default();

        // Exhaustive sweep of tiny instances (every tie pattern both sides).
        let mut swept = 0usize;
        for n in 1usize..=3 {
            let resident_patterns_by_m: Vec<Vec<Vec<Vec<usize>>>> =
                (0..=2).map(common::ordered_partitions).collect();
            for m in 1usize..=2 {
                let quota_pairs: Vec<(usize, usize)> = (1..=2.min(n))
                    .flat_map(|u| (0..=u).map(move |l| (l, u)))
                    .collect();
                let mut quota_combos: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
                for _ in 0..m {
                    quota_combos = quota_combos
                        .into_iter()
                        .flat_map(|c| {
                            quota_pairs.iter().map(move |&q| {
                                let mut c = c.clone();
                                c.push(q);
                                c
                            })
                        })
                        .collect();
                }
                quota_combos.retain(|c| c.iter().map(|&(_, u)| u).sum::<usize>() > n);

                let res_patterns = &resident_patterns_by_m[m];
                let hosp_patterns = common::ordered_partitions(n);
                let mut res_combos: Vec<Vec<usize>> = vec![Vec::new()];
                for _ in 0..n {
                    res_combos = res_combos
                        .into_iter()
                        .flat_map(|c| {
                            (0..res_patterns.len()).map(move |i| {
                                let mut c = c.clone();
                                c.push(i);
                                c
                            })
                        })
                        .collect();
                }
                let mut hosp_combos: Vec<Vec<usize>> = vec![Vec::new()];
                for _ in 0..m {
                    hosp_combos = hosp_combos
                        .into_iter()
                        .flat_map(|c| {
                            (0..hosp_patterns.len()).map(move |i| {
                                let mut c = c.clone();
                                c.push(i);
                                c
                            })
                        })
                        .collect();
                }

                for quotas in &quota_combos {
                    let (lower, upper): (Vec<_>, Vec<_>) = quotas.iter().copied().unzip();
                    for rc in &res_combos {
                        let resident_prefs: Vec<PreferenceOrder> = rc
                            .iter()
                            .map(|&i| PreferenceOrder::new(res_patterns[i].clone(), m).unwrap())
                            .collect();
                        for hc in &hosp_combos {
                            let hospital_prefs: Vec<PreferenceOrder> = hc
                                .iter()
                                .map(|&i| {
                                    PreferenceOrder::new(hosp_patterns[i].clone(), n).unwrap()
                                })
                                .collect();
                            let inst = Instance::new(
                                resident_prefs.clone(),
                                hospital_prefs,
                                lower.clone(),
                                upper.clone(),
                            )
                            .expect("sweep instances are valid");
                            swept += 1;
                            check_ratio_within(&inst, budget, BoundSpec::General { n: n as u64 })?;
                        }
                    }
                }
            }
        }
        check(swept > 40_000, || {
            format!("tiny sweep looks too small: {swept} instances")
        })?;

        // 2000 random instances per model, each against its model's bound.
        let mut rng = ChaCha8Rng::seed_from_u64(0xC4);
        for model in MODELS {
            for _ in 0..2000 {
                let inst = sample_instance(&mut rng, model, 6, 4);
                let spec = match model {
                    ModelTag::General => BoundSpec::General {
                        n: inst.residents() as u64,
                    },
                    ModelTag::Uniform => {
                        if inst.lower(0) == 0 {
                            // every stable matching scores m; the ratio is 1
                            BoundSpec::RSideMasterList {
                                n: inst.residents() as u64,
                            }
                        } else {
                            BoundSpec::Uniform {
                                lower: inst.lower(0) as u64,
                                upper: inst.upper(0) as u64,
                            }
                        }
                    }
                    ModelTag::Marriage => BoundSpec::Marriage,
                    ModelTag::RSideMasterList => BoundSpec::RSideMasterList {
                        n: inst.residents() as u64,
                    },
                };
                check_ratio_within(&inst, budget, spec)?;
            }
        }
        Ok(())
    });
}

/// OPT/ALG <= the bound for the spec (equality required for the master-list
/// model, where the bound is 1).
fn check_ratio_within(inst: &Instance, budget: Budget, spec: BoundSpec) -> Result<(), String> {
    let report = gap_report(inst, budget).map_err(|e| e.to_string())?;
    let (mat, _) = solve(inst);
    let alg = inst.total_score(&mat).unwrap();
    check(!alg.is_zero(), || "solver score is zero".into())?;
    let ratio = report.opt.clone() / alg.clone();
    let bound = theoretical_bound(spec, BoundKind::Approx).map_err(|e| e.to_string())?;
    check(ratio <= bound, || {
        format!(
            "OPT/ALG = {}/{} = {ratio} exceeds bound {bound} ({spec:?}) on:\n{}",
            report.opt,
            alg,
            hrtmslq::io::write_instance(inst)
        )
    })
}

#[test]
fn criterion_05_gap_families() {
    criterion(5, "gap families attain their ratios", Duration::from_secs(60), || {
        let budget = Budget::default();
        for n in 1..=4usize {
            let report = gap_report(&gap_family_general(n), budget).map_err(|e| e.to_string())?;
            let ratio = report.opt.clone() / report.wst.clone();
            check(ratio == Score::from_integer(n as u64 + 1), || {
                format!("general family n={n}: OPT/WST = {ratio}, want {}", n + 1)
            })?;
        }
        for (l, u) in [(1usize, 2usize), (2, 3), (1, 3)] {
            let report =
                gap_report(&gap_family_uniform(l, u), budget).map_err(|e| e.to_string())?;
            let ratio = report.opt.clone() / report.wst.clone();
            check(ratio == Score::ratio(u as u64, l as u64), || {
                format!("uniform family ({l},{u}): OPT/WST = {ratio}, want {u}/{l}")
            })?;
        }
        for k in 1..=3usize {
            let report =
                gap_report(&gap_family_marriage(k), budget).map_err(|e| e.to_string())?;
            let ratio = report.opt.clone() / report.wst.clone();
            check(ratio == Score::from_integer(2), || {
                format!("marriage family k={k}: OPT/WST = {ratio}, want 2")
            })?;
        }
        Ok(())
    });
}

#[test]
fn criterion_06_aux_equivalence() {
    criterion(6, "auxiliary-instance equivalence on 1k instances", Duration::from_secs(60), || {
        let mut rng = ChaCha8Rng::seed_from_u64(0xC6);
        for trial in 0..1000 {
            let model = MODELS[trial % MODELS.len()];
            let inst = sample_instance(&mut rng, model, 8, 5);
            let ok = verify_aux_equivalence(&inst).map_err(|e| e.to_string())?;
            check(ok, || {
                format!(
                    "trial {trial}: deferred acceptance on the auxiliary instance diverged on:\n{}",
                    hrtmslq::io::write_instance(&inst)
                )
            })?;
        }
        Ok(())
    });
}

#[test]
fn criterion_07_strategyproofness_campaigns() {
    criterion(7, "manipulation campaigns", Duration::from_secs(300), || {
        let params = CampaignParams {
            models: MODELS.to_vec(),
            max_n: 6,
            max_m: 6,
            trials: 10_000,
            seed: 1,
        };
        let seeded = [ProbeTriple {
            instance: samples::adaptive_tiebreak_counterexample(),
            resident: 0,
            fake: samples::adaptive_tiebreak_fake_r1(),
        }];
        let double = random_probe_campaign(&params, SolverKind::DoubleProposal, &seeded)
            .map_err(|e| e.to_string())?;
        check(double.strict_gains == 0, || {
            format!(
                "double proposal manipulated {} times; first: {:?}",
                double.strict_gains, double.first_gain
            )
        })?;
        let naive = random_probe_campaign(&params, SolverKind::NaiveAdaptive, &seeded)
            .map_err(|e| e.to_string())?;
        check(naive.strict_gains >= 1, || {
            "the adaptive rule escaped all 10k probes".into()
        })
    });
}

#[test]
fn criterion_08_rural_hospitals() {
    criterion(8, "rural hospitals on 500 strict instances", Duration::from_secs(60), || {
        let mut rng = ChaCha8Rng::seed_from_u64(0xC8);
        let policies = [
            TieBreakPolicy::Lexicographic,
            TieBreakPolicy::ReverseIndex,
            TieBreakPolicy::SeededRandom(17),
        ];
        for trial in 0..500 {
            let model = MODELS[trial % MODELS.len()];
            let inst = sample_instance(&mut rng, model, 6, 4);
            let strict = break_ties(&inst, policies[trial % policies.len()]);
            let ok = rural_check(&strict, Budget::default()).map_err(|e| e.to_string())?;
            check(ok, || {
                format!(
                    "trial {trial}: stable matchings disagree on hospital loads for:\n{}",
                    hrtmslq::io::write_instance(&inst)
                )
            })?;
        }
        Ok(())
    });
}

#[test]
fn criterion_09_reduction_identity() {
    criterion(9, "reduction score identity", Duration::from_secs(300), || {
        let budget = Budget::new(200_000_000, 1_000_000);
        let graphs = common::connected_graphs(5, 6);
        check(!graphs.is_empty(), || "graph enumeration came up empty".into())?;
        for g in &graphs {
            let is2 = brute_force_2is(g).map_err(|e| e.to_string())?;
            for p in [1usize, 2] {
                let inst = reduce_2is_to_mslq(g, p).map_err(|e| e.to_string())?;
                let report = gap_report(&inst, budget).map_err(|e| {
                    format!("oracle budget exceeded on {} vertices: {e}", g.vertices())
                })?;
                let expected = Score::from_integer((g.edges().len() + p * is2) as u64);
                check(report.opt == expected, || {
                    format!(
                        "graph v={} e={:?} p={p}: OPT = {}, want {expected}",
                        g.vertices(),
                        g.edges(),
                        report.opt
                    )
                })?;
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_10_performance_contract() {
    criterion(10, "linear-time solve at n = m = 1000", Duration::from_secs(30), || {
        let mut params = GenParams::new(ModelTag::General, 1000, 1000, 42);
        params.resident_tie_density = 0.3;
        params.hospital_tie_density = 0.3;
        params.lower_range = (0, 3);
        params.upper_range = (1, 3);
        let inst = gen_random(&params).expect("parameters are satisfiable");

        let start = Instant::now();
        let (mat, trace) = solve(&inst);
        let elapsed = start.elapsed();

        check(mat.matched_count() == 1000, || "unmatched resident".into())?;
        check(
            trace.proposal_count() <= 2 * 1000 * 1000,
            || format!("proposal bound exceeded: {}", trace.proposal_count()),
        )?;
        check(elapsed < Duration::from_secs(1), || {
            format!("solve took {elapsed:?}, budget 1s")
        })
    });
}
