use langsynth_core::dataset;
use langsynth_core::domains::strings::Strings;
use langsynth_core::harness::{self, metrics_from_tsv, metrics_to_tsv, Checkpoint, DomainKind, Mode, RunConfig};
use langsynth_core::Error;

fn small_config(mode: Mode) -> RunConfig {
    RunConfig {
        iterations: 2,
        batch_size: 8,
        budget: 5_000,
        recognition_steps: 60,
        dreams: 10,
        eval_interval: 1,
        mode,
        seed: 3,
        ..RunConfig::new(DomainKind::Strings)
    }
}

#[test]
fn resuming_from_a_serialized_checkpoint_matches_a_straight_run() {
    let domain = Strings::new(6);
    let data = dataset::generate(&domain, 12, 6, 1);
    let config = small_config(Mode::LapsMeCompression);

    let straight = harness::with_workers(|| harness::run(&domain, &data, &config, |_, _| Ok(()))).unwrap().unwrap();

    let mut saved = None;
    harness::with_workers(|| {
        harness::run(&domain, &data, &config, |state, _| {
            if state.iteration == 1 && saved.is_none() {
                saved = Some(state.to_json()?);
            }
            Ok(())
        })
    })
    .unwrap()
    .unwrap();
    let restored = Checkpoint::from_json(&saved.expect("iteration 1 observed")).unwrap();
    assert_eq!(restored.iteration, 1);
    let resumed =
        harness::with_workers(|| harness::resume(&domain, &data, &config, restored, |_, _| Ok(()))).unwrap().unwrap();

    assert_eq!(metrics_to_tsv(&straight.history), metrics_to_tsv(&resumed.history));
    assert_eq!(straight.to_json().unwrap(), resumed.to_json().unwrap());
}

#[test]
fn metrics_survive_a_tsv_round_trip() {
    let domain = Strings::new(6);
    let data = dataset::generate(&domain, 8, 4, 2);
    let config = RunConfig { iterations: 1, ..small_config(Mode::Baseline) };
    let done = harness::with_workers(|| harness::run(&domain, &data, &config, |_, _| Ok(()))).unwrap().unwrap();
    assert_eq!(done.history.len(), 2);
    let tsv = metrics_to_tsv(&done.history);
    assert_eq!(metrics_from_tsv(&tsv).unwrap(), done.history);
}

#[test]
fn invalid_configs_are_rejected() {
    let base = small_config(Mode::Baseline);
    let cases = [
        RunConfig { batch_size: 0, ..base.clone() },
        RunConfig { beam_width: 0, ..base.clone() },
        RunConfig { eval_interval: 0, ..base.clone() },
        RunConfig { budget: 0, ..base.clone() },
    ];
    for config in cases {
        assert!(matches!(config.validate(), Err(Error::Config(_))), "{config:?}");
    }
    assert!(base.validate().is_ok());
}

#[test]
fn a_checkpoint_for_another_training_set_is_refused() {
    let domain = Strings::new(6);
    let small = dataset::generate(&domain, 4, 2, 0);
    let large = dataset::generate(&domain, 9, 2, 0);
    let config = small_config(Mode::Baseline);
    let state = Checkpoint::initial(&domain, &small, &config);
    let result = harness::with_workers(|| harness::resume(&domain, &large, &config, state, |_, _| Ok(()))).unwrap();
    assert!(matches!(result, Err(Error::Data(_))));
}

#[test]
fn modes_parse_from_their_names() {
    for mode in [Mode::Baseline, Mode::Multimodal, Mode::Laps, Mode::LapsMe, Mode::LapsMeCompression] {
        assert_eq!(mode.name().parse::<Mode>().unwrap(), mode);
    }
    assert!("laps-everything".parse::<Mode>().is_err());
}

#[test]
fn resuming_a_finished_run_changes_nothing() {
    let domain = Strings::new(6);
    let data = dataset::generate(&domain, 6, 3, 5);
    let config = RunConfig { iterations: 1, ..small_config(Mode::Baseline) };
    let done = harness::with_workers(|| harness::run(&domain, &data, &config, |_, _| Ok(()))).unwrap().unwrap();
    let before = done.to_json().unwrap();
    let mut calls = 0;
    let again =
        harness::with_workers(|| harness::resume(&domain, &data, &config, done, |_, _| {
            calls += 1;
            Ok(())
        }))
        .unwrap()
        .unwrap();
    assert_eq!(calls, 0);
    assert_eq!(again.to_json().unwrap(), before);
}
