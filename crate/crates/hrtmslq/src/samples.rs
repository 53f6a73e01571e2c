//! Small canonical instances used across the test suites and the docs.
//!
//! Each is a minimal witness of a strategic phenomenon: score-optimal
//! mechanisms are manipulable, and adaptive tie-breaking inside deferred
//! acceptance is manipulable too.

use crate::model::{Instance, Matching, PreferenceOrder};

fn order(tiers: &[&[usize]], ground: usize) -> PreferenceOrder {
    PreferenceOrder::new(tiers.iter().map(|t| t.to_vec()).collect(), ground).unwrap()
}

/// Marriage-model instance with 2 residents and 3 hospitals ([1,1], [1,1],
/// [0,1]) where hospitals are fully indifferent. It has two stable matchings
/// of score 3 and defeats every optimal strategy-proof mechanism.
pub fn marriage_manipulation_instance() -> Instance {
    let strict = PreferenceOrder::strict(&[0, 1, 2]).unwrap();
    Instance::new(
        vec![strict.clone(), strict],
        vec![
            PreferenceOrder::single_tie(2),
            PreferenceOrder::single_tie(2),
            PreferenceOrder::single_tie(2),
        ],
        vec![1, 1, 0],
        vec![1, 1, 1],
    )
    .unwrap()
}

/// The same instance after resident 2 misreports `h1 h3 h2`.
pub fn marriage_manipulation_instance_manipulated() -> Instance {
    marriage_manipulation_instance()
        .with_resident_pref(1, PreferenceOrder::strict(&[0, 2, 1]).unwrap())
        .unwrap()
}

/// Uniform-model instance with 6 residents and 5 hospitals, all quotas
/// [1,2]. It has exactly two stable matchings, both of score 4, and either
/// choice of them exposes an optimal mechanism to a list swap by resident 2
/// or resident 6.
pub fn uniform_manipulation_instance() -> Instance {
    let resident_prefs = vec![
        order(&[&[0], &[1], &[2], &[3], &[4]], 5),
        order(&[&[2], &[1], &[0], &[3], &[4]], 5),
        order(&[&[2], &[0], &[1], &[3], &[4]], 5),
        order(&[&[2, 3], &[0], &[1], &[4]], 5),
        order(&[&[3], &[0], &[1], &[2], &[4]], 5),
        order(&[&[3], &[4], &[0], &[1], &[2]], 5),
    ];
    let hospital_prefs = vec![
        PreferenceOrder::strict(&[0, 1, 5, 2, 3, 4]).unwrap(),
        PreferenceOrder::strict(&[1, 0, 2, 3, 4, 5]).unwrap(),
        PreferenceOrder::strict(&[2, 3, 1, 0, 4, 5]).unwrap(),
        PreferenceOrder::strict(&[4, 3, 5, 0, 1, 2]).unwrap(),
        PreferenceOrder::strict(&[5, 0, 1, 2, 3, 4]).unwrap(),
    ];
    Instance::new(resident_prefs, hospital_prefs, vec![1; 5], vec![2; 5]).unwrap()
}

/// The two stable matchings of [`uniform_manipulation_instance`].
pub fn uniform_manipulation_stable_matchings() -> (Matching, Matching) {
    let m1 = Matching::from_assignment(vec![Some(0), Some(1), Some(2), Some(2), Some(3), Some(3)]);
    let m2 = Matching::from_assignment(vec![Some(0), Some(2), Some(2), Some(3), Some(3), Some(4)]);
    (m1, m2)
}

/// The misreport of resident 2 (`h3 h1 h2 ...`) that pays off when a
/// score-optimal mechanism answers [`uniform_manipulation_instance`] with the
/// first of its stable matchings.
pub fn uniform_manipulation_fake_r2() -> PreferenceOrder {
    PreferenceOrder::strict(&[2, 0, 1, 3, 4]).unwrap()
}

/// The misreport of resident 6 (`h4 h1 h5 ...`) for the other answer.
pub fn uniform_manipulation_fake_r6() -> PreferenceOrder {
    PreferenceOrder::strict(&[3, 0, 4, 1, 2]).unwrap()
}

/// Uniform [1,2] instance with 5 residents and 3 hospitals on which greedy
/// deficiency-first tie-breaking inside deferred acceptance is manipulable:
/// resident 1 gains by swapping its top two hospitals.
pub fn adaptive_tiebreak_counterexample() -> Instance {
    let resident_prefs = vec![
        PreferenceOrder::strict(&[0, 1, 2]).unwrap(),
        order(&[&[0, 1], &[2]], 3),
        PreferenceOrder::strict(&[0, 1, 2]).unwrap(),
        PreferenceOrder::strict(&[1, 0, 2]).unwrap(),
        PreferenceOrder::strict(&[0, 2, 1]).unwrap(),
    ];
    let hospital_prefs = vec![
        PreferenceOrder::strict(&[1, 2, 4, 0, 3]).unwrap(),
        PreferenceOrder::strict(&[1, 3, 0, 2, 4]).unwrap(),
        PreferenceOrder::strict(&[0, 1, 2, 3, 4]).unwrap(),
    ];
    Instance::new(resident_prefs, hospital_prefs, vec![1; 3], vec![2; 3]).unwrap()
}

/// Resident 1's profitable misreport for
/// [`adaptive_tiebreak_counterexample`]: swap the top two hospitals.
pub fn adaptive_tiebreak_fake_r1() -> PreferenceOrder {
    PreferenceOrder::strict(&[1, 0, 2]).unwrap()
}
