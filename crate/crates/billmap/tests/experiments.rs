use billmap::experiments::{replay, run_random_split_experiment, ExperimentConfig, GridSpec};
use billmap::ingest::Era;
use billmap::Error;
use billmap_oracles::{generate_corpus, SyntheticSpec};

fn quick() -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.fit.k = 15;
    c.fit.embedding.n_epochs = 60;
    c
}

#[test]
fn random_split_is_stratified_and_time_free() {
    let corpus = generate_corpus(&SyntheticSpec { n_pre: 150, n_covid: 60, seed: 1, ..SyntheticSpec::default() });
    let out = run_random_split_experiment(&corpus, 0.66, &quick()).unwrap();
    assert!(!out.manifest.include_time);
    assert!(out.model.encoder.columns.iter().all(|c| !c.time_dependent));
    let covid_train = out.split.train.iter().filter(|&&i| corpus.eras()[i] == Era::Covid).count();
    assert!((covid_train as f64 - 0.66 * 60.0).abs() <= 1.0);
    assert_eq!(out.split.train.len() + out.split.test.len(), corpus.len());
}

#[test]
fn replay_refuses_a_different_corpus() {
    let corpus = generate_corpus(&SyntheticSpec { n_pre: 100, n_covid: 40, seed: 2, ..SyntheticSpec::default() });
    let other = generate_corpus(&SyntheticSpec { n_pre: 100, n_covid: 40, seed: 3, ..SyntheticSpec::default() });
    let out = run_random_split_experiment(&corpus, 0.66, &quick()).unwrap();
    match replay(&out.manifest, &other) {
        Err(e @ Error::Incompatible { .. }) => assert_eq!(e.exit_code(), 2),
        other => panic!("expected incompatibility, got {other:?}"),
    }
    let again = replay(&out.manifest, &corpus).unwrap();
    assert_eq!(again.projection, out.projection);
}

#[test]
fn oversized_grids_are_rejected() {
    let spec = GridSpec { k_values: (1..=9).collect(), epoch_values: (1..=8).map(|e| e * 10).collect(), ..GridSpec::default() };
    assert_eq!(spec.validate().unwrap_err().exit_code(), 2);
}
