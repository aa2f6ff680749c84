//! The `billmap` command line.
//!
//! Exit status: 0 on success, 1 for unreadable or invalid data, 2 for bad
//! arguments or incompatible inputs, 3 for numerical failures.

use std::path::{Path, PathBuf};

use billmap_core::evaluate::{alignment, neighborhood_purity, trustworthiness};
use billmap_core::{DenseMatrix, EmbeddingConfig, ExecutionMode, InitMethod, Metric};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::experiments::{
    self, corpus_ref, grid_figure, run_era_experiment, run_grid, run_random_split_experiment, ExperimentConfig,
    GridSpec,
};
use crate::ingest::{fetch_bills, load_corpus, write_corpus, CatalogQuery, CatalogSource, Schema};
use crate::model::{fit, EmbeddingModel, FitParams, NeighborSearch, TransformParams};
use crate::persist;
use crate::plot::{self, ColorBy, Panel, PlotOptions};
use crate::table::{read_table, write_table, TableInput};

#[derive(Debug, Parser)]
#[command(name = "billmap", version, about = "Embed bill metadata and project new bills onto a learned layout")]
pub struct Cli {
    /// TOML or JSON file with default flag values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a bill file or catalog listing and write it normalized.
    Ingest(IngestArgs),
    /// Fit an embedding model.
    Fit(FitArgs),
    /// Project new bills onto a fitted model.
    Transform(TransformArgs),
    /// Draw an embedding (and optionally a projection) as SVG.
    Plot(PlotArgs),
    /// Fit a grid of neighborhood sizes and epoch counts.
    Grid(GridArgs),
    /// Score an embedding.
    Eval(EvalArgs),
    /// Run an era or random-split projection experiment.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long, conflicts_with = "fixtures")]
    pub input: Option<PathBuf>,
    /// Directory of catalog pages (`page_NNN.json`).
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
    #[arg(long)]
    pub min_congress: Option<u32>,
    #[arg(long)]
    pub max_congress: Option<u32>,
    #[arg(long)]
    pub keyword: Option<String>,
    #[arg(long)]
    pub delimiter: Option<char>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Euclidean,
    Manhattan,
    Cosine,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Euclidean => Metric::Euclidean,
            MetricArg::Manhattan => Metric::Manhattan,
            MetricArg::Cosine => Metric::Cosine,
        }
    }
}

#[derive(Debug, Clone, Args, Default)]
pub struct ModelFlags {
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub min_dist: Option<f64>,
    #[arg(long)]
    pub spread: Option<f64>,
    #[arg(long)]
    pub dims: Option<usize>,
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,
    #[arg(long)]
    pub neg_samples: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Use random instead of spectral initialization.
    #[arg(long)]
    pub random_init: bool,
    /// Exact neighbor search regardless of size.
    #[arg(long)]
    pub exact_knn: bool,
    /// Asynchronous multi-threaded optimization; not reproducible.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub model: ModelFlags,
    #[arg(long)]
    pub exclude_time_features: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub transform_epochs: Option<usize>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub embedding: PathBuf,
    #[arg(long)]
    pub projection: Option<PathBuf>,
    /// party, era or label.
    #[arg(long)]
    pub color_by: Option<String>,
    /// Only `split` is supported: circles for reference, X for projected.
    #[arg(long)]
    pub marker_by: Option<String>,
    #[arg(long)]
    pub show_axes: bool,
    #[arg(long)]
    pub title: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub k_values: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub epoch_values: Option<Vec<usize>>,
    #[command(flatten)]
    pub model: ModelFlags,
    #[arg(long)]
    pub exclude_time_features: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Score a fitted model's own layout.
    #[arg(long, conflicts_with_all = ["features", "embedding"])]
    pub model: Option<PathBuf>,
    /// CSV of feature rows: `bill_id` plus numeric columns.
    #[arg(long, requires = "embedding")]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub embedding: Option<PathBuf>,
    /// Projection table to compare against the embedding.
    #[arg(long)]
    pub projection: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentMode {
    Era,
    Random,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long, value_enum)]
    pub mode: Option<ExperimentMode>,
    #[arg(long)]
    pub input: PathBuf,
    /// Rerun the experiment recorded in this manifest.
    #[arg(long, conflicts_with = "mode")]
    pub replay: Option<PathBuf>,
    #[arg(long)]
    pub include_time: bool,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long)]
    pub split_seed: Option<u64>,
    #[arg(long)]
    pub transform_epochs: Option<usize>,
    #[command(flatten)]
    pub model: ModelFlags,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn positive(flag: &str, v: usize) -> Result<usize> {
    if v == 0 {
        return Err(Error::argument(format!("--{flag} must be at least 1")));
    }
    Ok(v)
}

fn fit_params(cfg: &RunConfig, section: &str, f: &ModelFlags) -> Result<FitParams> {
    let d = FitParams::default();
    let e = &d.embedding;
    let k = positive("k", cfg.pick(section, "k", f.k, d.k)?)?;
    let n_epochs = positive("epochs", cfg.pick(section, "epochs", f.epochs, e.n_epochs)?)?;
    let dims = cfg.pick(section, "dims", f.dims, e.dims)?;
    if !(1..=10).contains(&dims) {
        return Err(Error::argument(format!("--dims must be between 1 and 10, got {dims}")));
    }
    let min_dist = cfg.pick(section, "min_dist", f.min_dist, e.min_dist)?;
    let spread = cfg.pick(section, "spread", f.spread, e.spread)?;
    if !(min_dist > 0.0 && min_dist <= spread) {
        return Err(Error::argument(format!("--min-dist must lie in (0, spread = {spread}], got {min_dist}")));
    }
    let metric = match f.metric {
        Some(m) => m.into(),
        None => cfg.get::<Metric>(section, "metric")?.unwrap_or(d.metric),
    };
    let random = cfg.switch(section, "random_init", f.random_init)?;
    let parallel = cfg.switch(section, "parallel", f.parallel)?;
    let exact = cfg.switch(section, "exact_knn", f.exact_knn)?;
    let params = FitParams {
        k,
        metric,
        search: if exact { NeighborSearch::Exact } else { NeighborSearch::Auto },
        calibration: d.calibration,
        embedding: EmbeddingConfig {
            dims,
            n_epochs,
            min_dist,
            spread,
            initial_lr: cfg.pick(section, "learning_rate", f.learning_rate, e.initial_lr)?,
            neg_samples: positive("neg-samples", cfg.pick(section, "neg_samples", f.neg_samples, e.neg_samples)?)?,
            seed: cfg.pick(section, "seed", f.seed, e.seed)?,
            init: if random { InitMethod::RandomUniform } else { InitMethod::Spectral },
            mode: if parallel { ExecutionMode::Parallel } else { ExecutionMode::Deterministic },
            trace_every: 0,
        },
    };
    params.validate()?;
    Ok(params)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

#[derive(Serialize)]
struct FitManifest<'a> {
    input: &'a Path,
    include_time: bool,
    params: &'a FitParams,
    rows: usize,
    outputs: [&'a str; 2],
}

fn cmd_ingest(cfg: &RunConfig, a: &IngestArgs, out: &mut dyn std::io::Write) -> Result<()> {
    let mut schema = Schema::default();
    schema.min_congress = cfg.pick("ingest", "min_congress", a.min_congress, schema.min_congress)?;
    schema.max_congress = cfg.pick("ingest", "max_congress", a.max_congress, schema.max_congress)?;
    schema.delimiter = cfg.pick("ingest", "delimiter", a.delimiter, schema.delimiter)?;
    if let Some(columns) = cfg.get("ingest", "columns")? {
        schema.columns = columns;
    }
    let corpus = match (&a.input, &a.fixtures) {
        (Some(path), None) => load_corpus(path, &schema)?,
        (None, Some(dir)) => {
            let query = CatalogQuery {
                min_congress: schema.min_congress,
                max_congress: schema.max_congress,
                keyword: a.keyword.clone().or(cfg.get("ingest", "keyword")?),
            };
            fetch_bills(&CatalogSource::Fixtures(dir.clone()), &query)?
        }
        _ => return Err(Error::argument("give exactly one of --input or --fixtures")),
    };
    let mut buf = Vec::new();
    write_corpus(&corpus, &mut buf, &Schema { delimiter: ',', ..schema })?;
    persist::write_atomic(&a.out, &buf)?;
    let manifest = corpus.manifest();
    let mut side = a.out.clone().into_os_string();
    side.push(".manifest.json");
    persist::write_json(Path::new(&side), &manifest)?;
    let _ = writeln!(out, "{} records ({} pre-COVID, {} COVID)", manifest.rows, manifest.pre_covid, manifest.covid);
    Ok(())
}

fn cmd_fit(cfg: &RunConfig, a: &FitArgs, out: &mut dyn std::io::Write) -> Result<()> {
    let params = fit_params(cfg, "fit", &a.model)?;
    let include_time = !cfg.switch("fit", "exclude_time_features", a.exclude_time_features)?;
    let corpus = load_corpus(&a.input, &Schema::default())?;
    let model = fit(&corpus, include_time, &params)?;
    create_dir(&a.out_dir)?;
    model.save(&a.out_dir.join("model.json"))?;
    let ids: Vec<String> = corpus.records().iter().map(|r| r.bill_id.clone()).collect();
    write_table(
        &a.out_dir.join("embedding.csv"),
        &TableInput {
            ids: &ids,
            coords: model.coords(),
            parties: &model.training.parties,
            eras: corpus.eras(),
            split: "train",
            nearest: None,
        },
    )?;
    persist::write_json(
        &a.out_dir.join("manifest.json"),
        &FitManifest {
            input: &a.input,
            include_time,
            params: &params,
            rows: corpus.len(),
            outputs: ["model.json", "embedding.csv"],
        },
    )?;
    let _ = writeln!(
        out,
        "fitted {} records, {} features, k = {}, epochs = {}, final loss {:.4}",
        corpus.len(),
        model.training.values.cols(),
        params.k,
        params.embedding.n_epochs,
        model.embedding.final_loss
    );
    if model.init_fell_back {
        let _ = writeln!(out, "warning: spectral initialization failed; used random coordinates");
    }
    Ok(())
}

fn cmd_transform(cfg: &RunConfig, a: &TransformArgs, out: &mut dyn std::io::Write) -> Result<()> {
    let model = EmbeddingModel::load(&a.model)?;
    let corpus = load_corpus(&a.input, &Schema::default())?;
    let params = TransformParams {
        transform_epochs: cfg.pick("transform", "transform_epochs", a.transform_epochs, 30)?,
        learning_rate: cfg.get("transform", "learning_rate")?,
    };
    let result = model.transform(&corpus, &params)?;
    create_dir(&a.out_dir)?;
    write_table(
        &a.out_dir.join("projection.csv"),
        &TableInput {
            ids: &result.row_ids,
            coords: &result.coords,
            parties: &result.parties,
            eras: &result.eras,
            split: "test",
            nearest: Some(&result.nearest_train_dist),
        },
    )?;
    persist::write_json(&a.out_dir.join("report.json"), &result.alignment)?;
    let _ = writeln!(out, "projected {} records", result.row_ids.len());
    if !result.warnings.is_empty() {
        let detail: Vec<String> = result.warnings.unseen.iter().map(|(k, v)| format!("{k}: {v}")).collect();
        let _ = writeln!(
            out,
            "warning: {} unseen categorical value(s) encoded as zeros ({})",
            result.warnings.total(),
            detail.join(", ")
        );
    }
    write_report(out, &result.alignment);
    Ok(())
}

fn write_report(out: &mut dyn std::io::Write, r: &billmap_core::evaluate::AlignmentReport) {
    let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.4}"));
    let _ = writeln!(out, "{:<22}{:>12}", "projected", r.projected);
    let _ = writeln!(out, "{:<22}{:>12.4}", "mean nearest", r.mean_nearest);
    let _ = writeln!(out, "{:<22}{:>12.4}", "median nearest", r.median_nearest);
    let _ = writeln!(out, "{:<22}{:>12.4}", "baseline spacing", r.baseline);
    let _ = writeln!(out, "{:<22}{:>12}", "overlap ratio", opt(r.overlap_ratio));
    let _ = writeln!(out, "{:<22}{:>12}", "area ratio", opt(r.area_ratio));
    for (group, g) in &r.groups {
        let _ = writeln!(
            out,
            "  {:<20}{:>6}  overlap {:>8}  area {:>8}",
            group,
            g.count,
            opt(g.overlap_ratio),
            opt(g.area_ratio)
        );
    }
}

fn cmd_plot(cfg: &RunConfig, a: &PlotArgs) -> Result<()> {
    let color_by: ColorBy = match &a.color_by {
        Some(s) => s.parse()?,
        None => cfg.get::<String>("plot", "color_by")?.map_or(Ok(ColorBy::Party), |s| s.parse())?,
    };
    if let Some(m) = &a.marker_by {
        if m != "split" {
            return Err(Error::argument(format!("unknown marker-by field `{m}` (split)")));
        }
    }
    let mut glyphs = plot::glyphs(&read_table(&a.embedding)?, color_by, false)?;
    if let Some(p) = &a.projection {
        glyphs.extend(plot::glyphs(&read_table(p)?, color_by, true)?);
    }
    let opts = PlotOptions {
        color_by,
        show_axes: cfg.switch("plot", "show_axes", a.show_axes)?,
        title: a.title.clone().or(cfg.get("plot", "title")?),
        ..PlotOptions::default()
    };
    let svg = plot::render(&[Panel { title: None, glyphs }], &opts);
    persist::write_atomic(&a.out, svg.as_bytes())
}

#[derive(Serialize)]
struct GridRow {
    k: usize,
    epochs: usize,
    status: String,
    trustworthiness: Option<f64>,
    purity: Option<f64>,
    final_loss: Option<f64>,
}

fn cmd_grid(cfg: &RunConfig, a: &GridArgs, out: &mut dyn std::io::Write) -> Result<()> {
    let d = GridSpec::default();
    let spec = GridSpec {
        k_values: cfg.pick("grid", "k_values", a.k_values.clone(), d.k_values)?,
        epoch_values: cfg.pick("grid", "epoch_values", a.epoch_values.clone(), d.epoch_values)?,
        base: fit_params(cfg, "grid", &a.model)?,
        metric_k: d.metric_k,
    };
    spec.validate()?;
    let include_time = !cfg.switch("grid", "exclude_time_features", a.exclude_time_features)?;
    let corpus = load_corpus(&a.input, &Schema::default())?;
    let (cells, labels) = run_grid(&corpus, include_time, &spec)?;
    create_dir(&a.out_dir)?;
    persist::write_atomic(&a.out_dir.join("grid.svg"), grid_figure(&cells, &labels, &spec).as_bytes())?;

    let rows: Vec<GridRow> = cells
        .iter()
        .map(|c| match &c.outcome {
            Ok((_, m)) => GridRow {
                k: c.k,
                epochs: c.epochs,
                status: "ok".into(),
                trustworthiness: Some(m.trustworthiness),
                purity: m.purity,
                final_loss: Some(m.final_loss),
            },
            Err(e) => GridRow {
                k: c.k,
                epochs: c.epochs,
                status: e.clone(),
                trustworthiness: None,
                purity: None,
                final_loss: None,
            },
        })
        .collect();
    persist::write_json(&a.out_dir.join("grid.json"), &rows)?;
    let _ = writeln!(out, "{:>5} {:>7} {:>8} {:>8}  status", "k", "epochs", "trust", "purity");
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
    for r in &rows {
        let _ = writeln!(out, "{:>5} {:>7} {:>8} {:>8}  {}", r.k, r.epochs, fmt(r.trustworthiness), fmt(r.purity), r.status);
    }
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    if failed > 0 {
        return Err(Error::GridCells { failed, total: rows.len() });
    }
    Ok(())
}

fn read_feature_csv(path: &Path) -> Result<(Vec<String>, DenseMatrix)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Decode {
        what: path.display().to_string(),
        offset: None,
        message: e.to_string(),
    })?;
    let decode = |message: String| Error::Decode { what: path.display().to_string(), offset: None, message };
    let headers = r.headers().map_err(|e| decode(e.to_string()))?.clone();
    let id = headers.iter().position(|h| h == "bill_id").ok_or_else(|| Error::MissingColumn("bill_id".into()))?;
    let mut ids = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| decode(e.to_string()))?;
        ids.push(rec.get(id).unwrap_or("").to_string());
        let row = rec
            .iter()
            .enumerate()
            .filter(|&(c, _)| c != id)
            .map(|(_, v)| v.trim().parse::<f64>().map_err(|_| decode(format!("line {}: `{v}` is not a number", i + 2))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((ids, DenseMatrix::from_rows(&rows)?))
}

#[derive(Serialize)]
struct EvalReport {
    n: usize,
    k: usize,
    trustworthiness: f64,
    party_purity: Option<f64>,
    alignment: Option<billmap_core::evaluate::AlignmentReport>,
}

fn cmd_eval(cfg: &RunConfig, a: &EvalArgs, out: &mut dyn std::io::Write) -> Result<()> {
    let k = positive("k", cfg.pick("eval", "k", a.k, 10)?)?;
    let (x, y, parties, metric) = if let Some(path) = &a.model {
        let m = EmbeddingModel::load(path)?;
        let parties: Vec<String> = m.training.parties.iter().map(|p| p.to_string()).collect();
        (m.training.values.clone(), m.embedding.coords.clone(), parties, m.params.metric)
    } else {
        let (Some(fpath), Some(epath)) = (&a.features, &a.embedding) else {
            return Err(Error::argument("give --model, or --features with --embedding"));
        };
        let (ids, x) = read_feature_csv(fpath)?;
        let rows = read_table(epath)?;
        if rows.len() != ids.len() || rows.iter().zip(&ids).any(|(r, id)| &r.bill_id != id) {
            return Err(Error::argument("feature and embedding rows must list the same bill ids in the same order"));
        }
        let coords: Vec<Vec<f64>> = rows.iter().map(|r| r.coords.clone()).collect();
        let parties = rows.iter().map(|r| r.party.clone()).collect();
        (x, DenseMatrix::from_rows(&coords)?, parties, Metric::Euclidean)
    };
    if k >= x.rows() {
        return Err(Error::argument(format!("--k must be below the number of rows ({})", x.rows())));
    }
    let trust = trustworthiness(&x, &y, k, metric)?;
    let purity = if parties.iter().any(|p| !p.is_empty()) { Some(neighborhood_purity(&y, &parties, k)?) } else { None };
    let align = match &a.projection {
        Some(p) => {
            let rows = read_table(p)?;
            let coords: Vec<Vec<f64>> = rows.iter().map(|r| r.coords.clone()).collect();
            let labels: Vec<&str> = rows.iter().map(|r| r.party.as_str()).collect();
            Some(alignment(&y, &DenseMatrix::from_rows(&coords)?, Some(&labels))?)
        }
        None => None,
    };
    let _ = writeln!(out, "trustworthiness(k={k}) = {trust:.6}");
    if let Some(p) = purity {
        let _ = writeln!(out, "party purity(k={k}) = {p:.6}");
    }
    if let Some(r) = &align {
        write_report(out, r);
    }
    if let Some(path) = &a.out {
        persist::write_json(
            path,
            &EvalReport { n: x.rows(), k, trustworthiness: trust, party_purity: purity, alignment: align },
        )?;
    }
    Ok(())
}

fn cmd_experiment(cfg: &RunConfig, a: &ExperimentArgs, out: &mut dyn std::io::Write) -> Result<()> {
    let corpus = load_corpus(&a.input, &Schema::default())?;
    let mut outcome = if let Some(manifest) = &a.replay {
        experiments::replay(&experiments::load_manifest(manifest)?, &corpus)?
    } else {
        let config = ExperimentConfig {
            fit: fit_params(cfg, "experiment", &a.model)?,
            transform: TransformParams {
                transform_epochs: cfg.pick("experiment", "transform_epochs", a.transform_epochs, 30)?,
                learning_rate: None,
            },
            split_seed: cfg.pick("experiment", "split_seed", a.split_seed, 0)?,
        };
        let mode = match a.mode {
            Some(m) => m,
            None => match cfg.get::<String>("experiment", "mode")?.as_deref() {
                Some("random") => ExperimentMode::Random,
                Some("era") | None => ExperimentMode::Era,
                Some(other) => return Err(Error::argument(format!("unknown experiment mode `{other}`"))),
            },
        };
        match mode {
            ExperimentMode::Era => {
                run_era_experiment(&corpus, cfg.switch("experiment", "include_time", a.include_time)?, &config)?
            }
            ExperimentMode::Random => {
                let fraction = cfg.pick("experiment", "train_fraction", a.train_fraction, 0.66)?;
                run_random_split_experiment(&corpus, fraction, &config)?
            }
        }
    };
    outcome.manifest.corpus = corpus_ref(&corpus, Some(&a.input));
    experiments::write_outputs(&mut outcome, &corpus, &a.out_dir)?;
    let _ = writeln!(out, "experiment {}: {} train, {} projected", outcome.manifest.id, outcome.split.train.len(), outcome.split.test.len());
    write_report(out, &outcome.projection.alignment);
    Ok(())
}

/// Runs a parsed command line, writing progress to `out`.
pub fn run(cli: &Cli, out: &mut dyn std::io::Write) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    match &cli.command {
        Command::Ingest(a) => cmd_ingest(&cfg, a, out),
        Command::Fit(a) => cmd_fit(&cfg, a, out),
        Command::Transform(a) => cmd_transform(&cfg, a, out),
        Command::Plot(a) => cmd_plot(&cfg, a),
        Command::Grid(a) => cmd_grid(&cfg, a, out),
        Command::Eval(a) => cmd_eval(&cfg, a, out),
        Command::Experiment(a) => cmd_experiment(&cfg, a, out),
    }
}

/// Parses `args` (program name first), runs, and returns the exit status.
/// Messages go to `out` and errors to `err`.
pub fn main_with<I, T>(args: I, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let sink: &mut dyn std::io::Write = if code == 0 { out } else { err };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match run(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                let _ = writeln!(err, "  caused by: {s}");
                source = s.source();
            }
            if let Error::Rows(rows) = &e {
                for r in rows.iter().skip(1).take(20) {
                    let _ = writeln!(err, "  {r}");
                }
            }
            e.exit_code()
        }
    }
}
