//! The detector against a straight-line transcription of the window
//! algorithm, on the reference walkthrough and on random streams.

mod common;

use common::{check_sequence, random_sequence, small_config, OracleUser};
use kdewatch::detector::trace::{golden_events, reference_config, replay_golden_trace, USER};
use kdewatch::detector::Engine;
use proptest::prelude::*;

fn codes(list: &[kdewatch::calendar::Period]) -> Vec<u32> {
    list.iter().map(|p| p.code()).collect()
}

#[test]
fn walkthrough_final_lists_come_from_the_oracle() {
    let config = reference_config();
    let mut oracle = OracleUser::default();
    let mut engine = Engine::new(config.clone()).unwrap();
    let mut refits = Vec::new();
    for (i, e) in golden_events().into_iter().enumerate() {
        let step = oracle.step(&e.id, e.creation, &config);
        if step.refit {
            refits.push(i + 1);
        }
        engine.process(e).unwrap();
        oracle.compare(&engine.entity(USER).unwrap()).unwrap();
        if i + 1 == 13 {
            assert_eq!(codes(&oracle.used), [202225, 202227, 202228]);
            assert_eq!(codes(&oracle.acc), [202229]);
        }
    }
    assert_eq!(refits, [12]);
    assert_eq!(codes(&oracle.used), [202226, 202227, 202228, 202229]);
    assert!(oracle.acc.is_empty());
    let counts: Vec<usize> = oracle.used.iter().map(|p| oracle.events[p].len()).collect();
    assert_eq!(counts, [1, 3, 4, 2]);
    assert_eq!(oracle.profile.as_ref().unwrap().0.len(), 10);
    assert_eq!(oracle.alerts, ["evt-13"]);
}

#[test]
fn replay_matches_frozen_checkpoints_and_logs_divergences() {
    let report = replay_golden_trace().unwrap();
    assert!(report.recorder.all_passed());
    assert_eq!(report.recorder.divergences.len(), 2);
    assert!(report.recorder.divergences[0].contains("9 events"));
}

#[test]
fn first_profile_excludes_the_triggering_event() {
    let config = reference_config();
    let mut engine = Engine::new(config).unwrap();
    let events = golden_events();
    for e in events[..12].iter().cloned() {
        engine.process(e).unwrap();
    }
    let state = engine.entity(USER).unwrap();
    let profile = state.user_kde.unwrap();
    // 09:35 on 2022-07-18 is in AccumulatedPeriods, not in the fitted sample
    assert_eq!(profile.sample_count(), 10);
    assert_eq!(codes(&state.accumulated_periods), [202229]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_streams_follow_the_oracle(seed: u64, users in 1usize..=5, len in 1usize..300) {
        let events = random_sequence(seed, users, len);
        let config = small_config(seed);
        if let Err(e) = check_sequence(&events, &config) {
            return Err(TestCaseError::fail(format!("{e} (n={}, k={})", config.n, config.k)));
        }
    }

    #[test]
    fn reference_parameters_on_longer_streams(seed: u64) {
        let events = random_sequence(seed, 3, 600);
        check_sequence(&events, &reference_config()).map_err(TestCaseError::fail)?;
    }
}

#[test]
fn random_streams_exercise_profiles_and_alerts() {
    let (mut profiles, mut alerts) = (0, 0);
    for seed in 0..20 {
        let report = check_sequence(&random_sequence(seed, 3, 300), &small_config(seed)).unwrap();
        profiles += report.profiles;
        alerts += report.alerts;
    }
    assert!(profiles > 20, "profiles {profiles}");
    assert!(alerts > 5, "alerts {alerts}");
}
