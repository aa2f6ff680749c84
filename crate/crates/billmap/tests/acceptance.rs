//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each,
//! and exits nonzero if any fails.

use std::path::Path;
use std::time::{Duration, Instant};

use billmap::experiments::{
    run_era_experiment, run_grid_matrix, run_random_split_experiment, ExperimentConfig, GridSpec,
};
use billmap::ingest::{split_indices, Era, SplitMode};
use billmap::model::{fit_matrix, FitParams, TransformParams};
use billmap::{fit, EmbeddingModel};
use billmap_core::evaluate::{neighborhood_purity, trustworthiness};
use billmap_core::fuzzy_graph::{build_fuzzy_graph, calibrate_sigma, membership_sum, CalibrationOptions};
use billmap_core::optimizer::{cross_entropy, optimize, pair_gradient, NegativeTerm};
use billmap_core::{fit_kernel, initialize, knn_exact, DenseMatrix, EmbeddingConfig, Metric};
use billmap_oracles::{
    dense_cross_entropy, dense_knn, fuzzy_to_dense, gaussian_blobs, generate_corpus, numerical_gradient,
    SyntheticSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CALIBRATION_TOL: f64 = 1e-5;
const CLOSED_FORM_TOL: f64 = 1e-4;
const GRADIENT_REL_TOL: f64 = 1e-4;
const MIN_DESCENT_SEEDS: usize = 19;
const MIN_PURITY: f64 = 0.95;
const MIN_TRUST: f64 = 0.90;
const MIN_TREND_SEEDS: usize = 8;
const AREA_CONTRAST: f64 = 0.5;
const MAX_OVERLAP: f64 = 2.0;
const OVERLAP_BAND: f64 = 1.5;
const MIN_SPLIT_SEEDS: usize = 8;
const LOSS_AGREEMENT: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let took = start.elapsed();
    o.detail = format!("{}; {:.1}s", o.detail, took.as_secs_f64());
    if let Some(limit) = limit {
        if took > limit {
            o.pass = false;
            o.detail = format!("{} exceeds {:.0}s", o.detail, limit.as_secs_f64());
        }
    }
    o
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DenseMatrix {
    DenseMatrix::new(n, d, (0..n * d).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap()
}

fn calibration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut bad = 0;
    for _ in 0..1000 {
        let k = rng.random_range(4..=64);
        let mut d: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..20.0)).collect();
        d.sort_by(f64::total_cmp);
        let target = (k as f64).log2();
        let c = calibrate_sigma(&d, target, CALIBRATION_TOL, 64).unwrap();
        let residual = (membership_sum(&d, c.rho, c.sigma) - target).abs();
        if residual > CALIBRATION_TOL && !c.clamped {
            bad += 1;
        }
    }
    let c = calibrate_sigma(&[1.0, 2.0, 2.0, 2.0], 2.0, CALIBRATION_TOL, 64).unwrap();
    let expected = 1.0 / 3f64.ln();
    let closed = (c.sigma - expected).abs() <= CLOSED_FORM_TOL;
    outcome(bad == 0 && closed, format!("{bad}/1000 unresolved; sigma([1,2,2,2]) = {:.6} vs {expected:.6}", c.sigma))
}

fn gradient_check() -> Outcome {
    let kernel = fit_kernel(0.1, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = 5;
        let mut v = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let w = if rng.random_bool(0.6) { rng.random_range(0.05..1.0) } else { 0.0 };
                v[i][j] = w;
                v[j][i] = w;
            }
        }
        let y: Vec<f64> = (0..n * 2).map(|_| rng.random_range(-2.0..2.0)).collect();
        let loss = |p: &[f64]| dense_cross_entropy(&v, &DenseMatrix::new(n, 2, p.to_vec()).unwrap(), kernel.a, kernel.b).unwrap();
        let numeric = numerical_gradient(loss, &y, 1e-6);
        let mut g = [0.0; 2];
        for i in 0..n {
            let mut analytic = [0.0; 2];
            for j in (0..n).filter(|&j| j != i) {
                pair_gradient(&y[2 * i..2 * i + 2], &y[2 * j..2 * j + 2], v[i][j], &kernel, &mut g);
                analytic[0] += 2.0 * g[0];
                analytic[1] += 2.0 * g[1];
            }
            for a in 0..2 {
                let b = numeric[2 * i + a];
                worst = worst.max((analytic[a] - b).abs() / analytic[a].abs().max(b.abs()).max(1e-3));
            }
        }
    }
    outcome(worst < GRADIENT_REL_TOL, format!("max relative error {worst:.2e}"))
}

fn loss_descent() -> Outcome {
    let kernel = fit_kernel(0.1, 1.0).unwrap();
    let mut descended = 0;
    for seed in 0..20u64 {
        let blobs = gaussian_blobs(150, 3, 5, 6.0, 100 + seed);
        let g = knn_exact(&blobs.x, 15, Metric::Euclidean).unwrap();
        let fuzzy = build_fuzzy_graph(&g, &CalibrationOptions::default()).unwrap();
        let cfg = EmbeddingConfig { n_epochs: 200, seed, ..EmbeddingConfig::default() };
        let init = initialize(&fuzzy, 2, cfg.init, seed).unwrap();
        let v = fuzzy_to_dense(&fuzzy);
        let before = dense_cross_entropy(&v, &init.coords, kernel.a, kernel.b).unwrap();
        let emb = optimize(&fuzzy, init.coords, &kernel, &cfg).unwrap();
        let after = dense_cross_entropy(&v, &emb.coords, kernel.a, kernel.b).unwrap();
        if after < before {
            descended += 1;
        }
    }
    outcome(descended >= MIN_DESCENT_SEEDS, format!("loss fell in {descended}/20 seeds"))
}

fn embedding_quality() -> Outcome {
    let blobs = gaussian_blobs(300, 3, 10, 10.0, 4);
    let params = FitParams::default();
    let fitted = fit_matrix(&blobs.x, &params).unwrap();
    let coords = &fitted.embedding.coords;
    let purity = neighborhood_purity(coords, &blobs.labels, 10).unwrap();
    let trust = trustworthiness(&blobs.x, coords, 10, Metric::Euclidean).unwrap();
    outcome(
        purity >= MIN_PURITY && trust >= MIN_TRUST,
        format!("purity {purity:.4}, trustworthiness {trust:.4} at k={}, epochs={}", params.k, params.embedding.n_epochs),
    )
}

fn grid_trend() -> Outcome {
    let mut holds = 0;
    let mut pairs = Vec::new();
    for seed in 0..10u64 {
        let blobs = gaussian_blobs(300, 3, 10, 4.0, 200 + seed);
        let mut base = FitParams::default();
        base.embedding.seed = seed;
        let small = GridSpec { k_values: vec![5], epoch_values: vec![50], base: base.clone(), metric_k: 10 };
        let large = GridSpec { k_values: vec![45], epoch_values: vec![450], base, metric_k: 10 };
        let purity = |spec: &GridSpec| {
            let cells = run_grid_matrix(&blobs.x, Some(&blobs.labels), spec).unwrap();
            cells[0].outcome.as_ref().map(|(_, m)| m.purity.unwrap()).unwrap_or(f64::NAN)
        };
        let (lo, hi) = (purity(&small), purity(&large));
        if hi >= lo {
            holds += 1;
        }
        pairs.push(format!("{lo:.3}->{hi:.3}"));
    }
    outcome(holds >= MIN_TREND_SEEDS, format!("held in {holds}/10 seeds ({})", pairs.join(" ")))
}

fn synthetic(seed: u64) -> SyntheticSpec {
    SyntheticSpec { n_pre: 300, n_covid: 150, time_signal: 1.0, seed, ..SyntheticSpec::default() }
}

fn reproducibility() -> Outcome {
    let corpus = generate_corpus(&synthetic(6));
    let idx: Vec<usize> = (0..corpus.len()).filter(|&i| corpus.eras()[i] == Era::PreCovid).collect();
    let rest: Vec<usize> = (0..corpus.len()).filter(|&i| corpus.eras()[i] == Era::Covid).collect();
    let (train, test) = (corpus.subset(&idx, "train"), corpus.subset(&rest, "test"));
    let mut params = FitParams::default();
    params.embedding.n_epochs = 200;
    let model = fit(&train, false, &params).unwrap();
    let before = model.transform(&test, &TransformParams::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    model.save(&path).unwrap();
    let loaded = EmbeddingModel::load(&path).unwrap();
    let after = loaded.transform(&test, &TransformParams::default()).unwrap();
    let same = before.coords.as_slice().iter().zip(after.coords.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits());
    outcome(same && loaded == model, format!("{} projected rows, bit-identical: {same}", before.coords.rows()))
}

fn era_contrast() -> Outcome {
    let corpus = generate_corpus(&synthetic(7));
    let config = ExperimentConfig::default();
    let with_time = run_era_experiment(&corpus, true, &config).unwrap();
    let without = run_era_experiment(&corpus, false, &config).unwrap();
    let (a_t, a_n) = (with_time.projection.alignment.area_ratio.unwrap(), without.projection.alignment.area_ratio.unwrap());
    let overlap = without.projection.alignment.overlap_ratio.unwrap();
    outcome(
        a_t <= AREA_CONTRAST * a_n && overlap <= MAX_OVERLAP,
        format!("area ratio {a_t:.3} with time vs {a_n:.3} without; overlap without time {overlap:.3}"),
    )
}

fn random_split() -> Outcome {
    let mut holds = 0;
    let mut pairs = Vec::new();
    for seed in 0..10u64 {
        let corpus = generate_corpus(&synthetic(300 + seed));
        let mut config = ExperimentConfig { split_seed: seed, ..ExperimentConfig::default() };
        config.fit.embedding.seed = seed;
        let era = run_era_experiment(&corpus, false, &config).unwrap().projection.alignment.overlap_ratio.unwrap();
        let rnd = run_random_split_experiment(&corpus, 0.66, &config).unwrap().projection.alignment.overlap_ratio.unwrap();
        let r = rnd / era;
        if (1.0 / OVERLAP_BAND..=OVERLAP_BAND).contains(&r) {
            holds += 1;
        }
        pairs.push(format!("{rnd:.2}/{era:.2}"));
    }
    outcome(holds >= MIN_SPLIT_SEEDS, format!("within {OVERLAP_BAND}x in {holds}/10 seeds ({})", pairs.join(" ")))
}

fn split_contract() -> Outcome {
    let mut ok = true;
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let corpus = generate_corpus(&SyntheticSpec { n_pre: 301 + seed as usize, n_covid: 97, seed, ..SyntheticSpec::default() });
        let s = split_indices(&corpus, SplitMode::Random, 0.66, seed).unwrap();
        let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
        all.sort_unstable();
        ok &= all == (0..corpus.len()).collect::<Vec<_>>();
        for era in [Era::PreCovid, Era::Covid] {
            let total = corpus.era_count(era) as f64;
            let got = s.train.iter().filter(|&&i| corpus.eras()[i] == era).count() as f64;
            let off = (got - 0.66 * total).abs();
            worst = worst.max(off);
            ok &= off <= 1.0;
        }
    }
    outcome(ok, format!("worst per-era deviation {worst:.2} records; partitions exact"))
}

fn plot_determinism() -> Outcome {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let golden = std::fs::read(fixtures.join("plot_golden.svg")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (embedding, projection) = (fixtures.join("plot_embedding.csv"), fixtures.join("plot_projection.csv"));
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("run{run}.svg"));
        let args = [
            "billmap".as_ref(),
            "plot".as_ref(),
            "--embedding".as_ref(),
            embedding.as_os_str(),
            "--projection".as_ref(),
            projection.as_os_str(),
            "--out".as_ref(),
            out.as_os_str(),
        ];
        let code = billmap::cli::main_with(args, &mut Vec::new(), &mut Vec::new());
        if code != 0 {
            return outcome(false, format!("plot exited with {code}"));
        }
        outputs.push(std::fs::read(&out).unwrap());
    }
    let svg = String::from_utf8_lossy(&outputs[0]);
    let reference = billmap::table::read_table(&embedding).unwrap().len();
    let projected = billmap::table::read_table(&projection).unwrap().len();
    let circles = svg.matches(r#"<circle class="ref""#).count();
    let crosses = svg.matches(r#"<path class="proj""#).count();
    let identical = outputs[0] == golden && outputs[1] == golden;
    outcome(
        identical && circles == reference && crosses == projected,
        format!("golden match {identical}; circles {circles}/{reference}, X marks {crosses}/{projected}"),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut knn_ok = 0;
    for trial in 0..20 {
        let n = rng.random_range(3..=200);
        let k = rng.random_range(1..n.min(30));
        let metric = [Metric::Euclidean, Metric::Manhattan, Metric::Cosine][trial % 3];
        let d = rng.random_range(1..=8);
        let x = random_matrix(&mut rng, n, d);
        let fast = knn_exact(&x, k, metric).unwrap();
        let slow = dense_knn(&x, k, metric).unwrap();
        let same = (0..n).all(|i| {
            fast.ids(i) == slow.ids(i)
                && fast.dists(i).iter().zip(slow.dists(i)).all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + b))
        });
        knn_ok += usize::from(same);
    }
    let blobs = gaussian_blobs(200, 3, 6, 6.0, 12);
    let fuzzy = build_fuzzy_graph(&knn_exact(&blobs.x, 15, Metric::Euclidean).unwrap(), &CalibrationOptions::default()).unwrap();
    let kernel = fit_kernel(0.1, 1.0).unwrap();
    let coords = random_matrix(&mut rng, 200, 2);
    let fast = cross_entropy(&fuzzy, &coords, &kernel, NegativeTerm::Exact).unwrap();
    let slow = dense_cross_entropy(&fuzzy_to_dense(&fuzzy), &coords, kernel.a, kernel.b).unwrap();
    let rel = (fast - slow).abs() / slow.abs().max(1.0);
    outcome(knn_ok == 20 && rel <= LOSS_AGREEMENT, format!("kNN identical on {knn_ok}/20; loss relative gap {rel:.1e}"))
}

fn main() {
    let secs = |s: u64| Some(Duration::from_secs(s));
    let criteria: Vec<(&str, Option<Duration>, fn() -> Outcome)> = vec![
        ("calibration", secs(5), calibration),
        ("gradient check", secs(10), gradient_check),
        ("loss descent", secs(60), loss_descent),
        ("embedding quality", secs(60), embedding_quality),
        ("grid-search trend", secs(180), grid_trend),
        ("projection reproducibility", None, reproducibility),
        ("era contrast", secs(120), era_contrast),
        ("random-split agreement", secs(180), random_split),
        ("split contract", None, split_contract),
        ("plot determinism", None, plot_determinism),
        ("oracle equivalence", None, oracle_equivalence),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let o = timed(limit, run);
        println!("criterion {:>2} {:<28} {}  ({})", i + 1, name, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
