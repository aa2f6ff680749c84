use billmap::features::{encode, fit_encoder, EncoderSpec};
use billmap::ingest::{Corpus, Era, Party};
use billmap::model::{fit, EmbeddingModel, FitParams, TransformParams};
use billmap::Error;
use billmap_oracles::{generate_corpus, SyntheticSpec};

fn small_params() -> FitParams {
    let mut p = FitParams { k: 15, ..FitParams::default() };
    p.embedding.n_epochs = 100;
    p
}

fn eras(corpus: &Corpus) -> (Corpus, Corpus) {
    let pick = |era: Era| -> Vec<usize> { (0..corpus.len()).filter(|&i| corpus.eras()[i] == era).collect() };
    (corpus.subset(&pick(Era::PreCovid), "train"), corpus.subset(&pick(Era::Covid), "test"))
}

#[test]
fn excluding_time_drops_exactly_the_time_columns() {
    let corpus = generate_corpus(&SyntheticSpec { n_pre: 120, n_covid: 0, seed: 1, ..SyntheticSpec::default() });
    let with = fit_encoder(&corpus, true).unwrap();
    let without = fit_encoder(&corpus, false).unwrap();
    let time: Vec<&str> = with.columns.iter().filter(|c| c.time_dependent).map(|c| c.name.as_str()).collect();
    assert_eq!(time.len(), 3, "{time:?}");
    assert_eq!(with.width(), without.width() + 3);
    assert!(without.columns.iter().all(|c| !c.time_dependent));
}

#[test]
fn encoder_round_trips_and_standardizes() {
    let corpus = generate_corpus(&SyntheticSpec { n_pre: 150, n_covid: 0, seed: 2, ..SyntheticSpec::default() });
    let spec = fit_encoder(&corpus, true).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("encoder.json");
    spec.save(&path).unwrap();
    assert_eq!(EncoderSpec::load(&path).unwrap(), spec);
    let (m, warnings) = encode(&corpus, &spec).unwrap();
    assert!(warnings.is_empty());
    for (c, col) in m.columns.iter().enumerate().take(spec.numeric.len()) {
        let v: Vec<f64> = (0..m.values.rows()).map(|i| m.values.get(i, c)).collect();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean.abs() < 1e-9, "{} mean {mean}", col.name);
    }
}

#[test]
fn model_file_round_trip_and_determinism() {
    let corpus = generate_corpus(&SyntheticSpec { n_pre: 150, n_covid: 50, seed: 3, ..SyntheticSpec::default() });
    let (train, test) = eras(&corpus);
    let a = fit(&train, false, &small_params()).unwrap();
    let b = fit(&train, false, &small_params()).unwrap();
    assert_eq!(a, b);
    let dir = tempfile::tempdir().unwrap();
    let (pa, pb) = (dir.path().join("a.json"), dir.path().join("b.json"));
    a.save(&pa).unwrap();
    b.save(&pb).unwrap();
    assert_eq!(std::fs::read(&pa).unwrap(), std::fs::read(&pb).unwrap());
    let loaded = EmbeddingModel::load(&pa).unwrap();
    assert_eq!(loaded, a);
    let r = loaded.transform(&test, &TransformParams::default()).unwrap();
    assert_eq!(r.coords.rows(), test.len());
    assert_eq!(r.row_ids.len(), test.len());
    assert!(r.nearest_train_dist.iter().all(|d| d.is_finite() && *d >= 0.0));
}

#[test]
fn version_mismatch_is_incompatible() {
    let corpus = generate_corpus(&SyntheticSpec { n_pre: 60, n_covid: 0, seed: 4, ..SyntheticSpec::default() });
    let mut params = small_params();
    params.k = 10;
    let model = fit(&corpus, true, &params).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    model.save(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap().replacen("\"format_version\": 1", "\"format_version\": 99", 1);
    std::fs::write(&path, text).unwrap();
    match EmbeddingModel::load(&path) {
        Err(e @ Error::Incompatible { .. }) => assert_eq!(e.exit_code(), 2),
        other => panic!("expected incompatibility, got {other:?}"),
    }
}

#[test]
fn width_mismatch_names_both_widths() {
    let corpus = generate_corpus(&SyntheticSpec { n_pre: 60, n_covid: 0, seed: 5, ..SyntheticSpec::default() });
    let mut params = small_params();
    params.k = 10;
    let model = fit(&corpus, true, &params).unwrap();
    let w = model.training.values.cols();
    let wrong = billmap_core::DenseMatrix::zeros(3, w + 2);
    let err = model.transform_matrix(&wrong, &TransformParams::default()).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains(&w.to_string()) && msg.contains(&(w + 2).to_string()), "{msg}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn k_not_below_training_size_is_an_argument_error() {
    let corpus = generate_corpus(&SyntheticSpec { n_pre: 20, n_covid: 0, seed: 6, ..SyntheticSpec::default() });
    let err = fit(&corpus, true, &FitParams::default()).unwrap_err();
    assert_eq!(err.exit_code(), 2, "{err}");
}

#[test]
fn unseen_categories_are_counted() {
    let corpus = generate_corpus(&SyntheticSpec { n_pre: 120, n_covid: 0, state_vocab: 10, seed: 7, ..SyntheticSpec::default() });
    let others = generate_corpus(&SyntheticSpec { n_pre: 30, n_covid: 0, state_vocab: 50, seed: 8, ..SyntheticSpec::default() });
    let spec = fit_encoder(&corpus, true).unwrap();
    let (_, warnings) = encode(&others, &spec).unwrap();
    assert!(warnings.unseen.get("sponsor_state").copied().unwrap_or(0) > 0, "{warnings:?}");
    assert!(others.records().iter().any(|r| r.sponsor_party != Party::Other));
}
