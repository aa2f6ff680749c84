//! End-to-end experiments: hyperparameter grids, era projection and the
//! random-split control, with manifests that replay them exactly.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use billmap_core::evaluate::{neighborhood_purity, trustworthiness};
use billmap_core::{DenseMatrix, Metric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::{encode, fit_encoder};
use crate::ingest::{split_indices, Corpus, Era, Split, SplitMode};
use crate::model::{fit, fit_matrix, EmbeddingModel, FitParams, ProjectionResult, TransformParams};
use crate::persist;
use crate::plot::{self, ColorBy, Glyph, Panel, PlotOptions};
use crate::table::{write_table, TableInput};

pub const MAX_GRID_CELLS: usize = 64;
const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub k_values: Vec<usize>,
    pub epoch_values: Vec<usize>,
    /// Everything except `k` and the epoch count.
    pub base: FitParams,
    /// Neighborhood size for the per-cell quality metrics.
    pub metric_k: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            k_values: vec![5, 15, 30, 45],
            epoch_values: vec![50, 150, 300, 450],
            base: FitParams::default(),
            metric_k: 10,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k_values.is_empty() || self.epoch_values.is_empty() {
            return Err(Error::argument("grid needs at least one k and one epoch value"));
        }
        if self.k_values.contains(&0) || self.epoch_values.contains(&0) {
            return Err(Error::argument("grid values must be positive"));
        }
        let cells = self.k_values.len() * self.epoch_values.len();
        if cells > MAX_GRID_CELLS {
            return Err(Error::argument(format!("grid of {cells} cells exceeds the limit of {MAX_GRID_CELLS}")));
        }
        Ok(())
    }

    pub fn cell_params(&self, k: usize, epochs: usize) -> FitParams {
        let mut p = self.base.clone();
        p.k = k;
        p.embedding.n_epochs = epochs;
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub trustworthiness: f64,
    /// Only when labels are supplied.
    pub purity: Option<f64>,
    pub final_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub k: usize,
    pub epochs: usize,
    pub outcome: std::result::Result<(DenseMatrix, CellMetrics), String>,
}

/// Fits every `(k, epochs)` cell on `values` in parallel. Cell failures
/// are recorded, not propagated. Cells come back row-major by `k`.
pub fn run_grid_matrix<L: PartialEq + Sync>(
    values: &DenseMatrix,
    labels: Option<&[L]>,
    spec: &GridSpec,
) -> Result<Vec<GridCell>> {
    spec.validate()?;
    let cells: Vec<(usize, usize)> = spec
        .k_values
        .iter()
        .flat_map(|&k| spec.epoch_values.iter().map(move |&e| (k, e)))
        .collect();
    Ok(cells
        .into_par_iter()
        .map(|(k, epochs)| {
            let run = || -> Result<(DenseMatrix, CellMetrics)> {
                let fitted = fit_matrix(values, &spec.cell_params(k, epochs))?;
                let coords = fitted.embedding.coords;
                let mk = spec.metric_k.min(values.rows().saturating_sub(1)).max(1);
                let metrics = CellMetrics {
                    trustworthiness: trustworthiness(values, &coords, mk, spec.base.metric)?,
                    purity: labels.map(|l| neighborhood_purity(&coords, l, mk)).transpose()?,
                    final_loss: fitted.embedding.final_loss,
                };
                Ok((coords, metrics))
            };
            GridCell { k, epochs, outcome: run().map_err(|e| e.to_string()) }
        })
        .collect())
}

/// Encodes `corpus` once and runs the grid, with party as purity label.
pub fn run_grid(corpus: &Corpus, include_time: bool, spec: &GridSpec) -> Result<(Vec<GridCell>, Vec<String>)> {
    let encoder = fit_encoder(corpus, include_time)?;
    let (features, _) = encode(corpus, &encoder)?;
    let labels: Vec<String> = features.parties.iter().map(|p| p.as_str().to_string()).collect();
    Ok((run_grid_matrix(&features.values, Some(&labels), spec)?, labels))
}

/// One panel per successful cell, `k` down the rows and epochs across.
pub fn grid_figure(cells: &[GridCell], categories: &[String], spec: &GridSpec) -> String {
    let panels: Vec<Panel> = cells
        .iter()
        .map(|c| Panel {
            title: Some(format!("k = {}, epochs = {}", c.k, c.epochs)),
            glyphs: match &c.outcome {
                Ok((coords, _)) => coords
                    .iter_rows()
                    .zip(categories)
                    .map(|(r, cat)| Glyph { x: r[0], y: r.get(1).copied().unwrap_or(0.0), category: cat.clone(), projected: false })
                    .collect(),
                Err(_) => Vec::new(),
            },
        })
        .collect();
    let opts = PlotOptions { columns: spec.epoch_values.len(), panel_size: 280.0, ..PlotOptions::default() };
    plot::render(&panels, &opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[derive(Default)]
pub struct ExperimentConfig {
    pub fit: FitParams,
    pub transform: TransformParams,
    pub split_seed: u64,
}


#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Era,
    RandomSplit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub format_version: u32,
    pub id: String,
    pub kind: ExperimentKind,
    pub corpus: CorpusRef,
    pub split_mode: SplitMode,
    pub train_fraction: f64,
    pub include_time: bool,
    pub config: ExperimentConfig,
    pub split_hash: String,
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRef {
    pub path: Option<PathBuf>,
    pub rows: usize,
    /// SHA-256 over the bill ids in corpus order.
    pub id_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub manifest: ExperimentManifest,
    pub split: Split,
    pub model: EmbeddingModel,
    pub projection: ProjectionResult,
}

fn hash_ids<'a>(parts: impl IntoIterator<Item = (&'a str, &'a [usize])>, corpus: &Corpus) -> String {
    let mut h = Sha256::new();
    for (tag, idx) in parts {
        h.update(tag.as_bytes());
        for &i in idx {
            h.update(corpus.records()[i].bill_id.as_bytes());
            h.update([0u8]);
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn corpus_ref(corpus: &Corpus, path: Option<&Path>) -> CorpusRef {
    let all: Vec<usize> = (0..corpus.len()).collect();
    CorpusRef { path: path.map(Path::to_path_buf), rows: corpus.len(), id_hash: hash_ids([("corpus", &all[..])], corpus) }
}

pub fn split_hash(corpus: &Corpus, split: &Split) -> String {
    hash_ids([("train", &split.train[..]), ("test", &split.test[..])], corpus)
}

fn run(
    corpus: &Corpus,
    kind: ExperimentKind,
    mode: SplitMode,
    train_fraction: f64,
    include_time: bool,
    config: &ExperimentConfig,
) -> Result<ExperimentOutcome> {
    let split = split_indices(corpus, mode, train_fraction, config.split_seed)?;
    if split.train.is_empty() || split.test.is_empty() {
        return Err(Error::argument("the split leaves an empty training or test set"));
    }
    let train = corpus.subset(&split.train, "train");
    let test = corpus.subset(&split.test, "test");
    let model = fit(&train, include_time, &config.fit)?;
    let projection = model.transform(&test, &config.transform)?;
    let split_hash = split_hash(corpus, &split);
    let id = format!(
        "{}-{}-k{}-e{}-s{}",
        match kind {
            ExperimentKind::Era => "era",
            ExperimentKind::RandomSplit => "random",
        },
        if include_time { "time" } else { "notime" },
        config.fit.k,
        config.fit.embedding.n_epochs,
        config.fit.embedding.seed
    );
    Ok(ExperimentOutcome {
        manifest: ExperimentManifest {
            format_version: MANIFEST_VERSION,
            id,
            kind,
            corpus: corpus_ref(corpus, None),
            split_mode: mode,
            train_fraction,
            include_time,
            config: config.clone(),
            split_hash,
            outputs: BTreeMap::new(),
        },
        split,
        model,
        projection,
    })
}

/// Fits on the pre-COVID records and projects the COVID records.
pub fn run_era_experiment(corpus: &Corpus, include_time: bool, config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    if corpus.era_count(Era::PreCovid) == 0 || corpus.era_count(Era::Covid) == 0 {
        return Err(Error::argument("the era experiment needs records from both eras"));
    }
    run(corpus, ExperimentKind::Era, SplitMode::ByEra, 0.5, include_time, config)
}

/// Stratified random split without time features.
pub fn run_random_split_experiment(
    corpus: &Corpus,
    train_fraction: f64,
    config: &ExperimentConfig,
) -> Result<ExperimentOutcome> {
    run(corpus, ExperimentKind::RandomSplit, SplitMode::Random, train_fraction, false, config)
}

/// Reruns the experiment a manifest describes. The corpus must be the one
/// it was recorded against.
pub fn replay(manifest: &ExperimentManifest, corpus: &Corpus) -> Result<ExperimentOutcome> {
    let found = corpus_ref(corpus, None);
    if found.id_hash != manifest.corpus.id_hash {
        return Err(Error::Incompatible {
            what: "corpus",
            expected: manifest.corpus.id_hash.clone(),
            found: found.id_hash,
        });
    }
    let mut out = match manifest.kind {
        ExperimentKind::Era => run_era_experiment(corpus, manifest.include_time, &manifest.config)?,
        ExperimentKind::RandomSplit => {
            run_random_split_experiment(corpus, manifest.train_fraction, &manifest.config)?
        }
    };
    out.manifest.corpus.path = manifest.corpus.path.clone();
    Ok(out)
}

/// Writes the model, both tables, the report, a figure and the manifest
/// into `dir`.
pub fn write_outputs(outcome: &mut ExperimentOutcome, corpus: &Corpus, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let train = corpus.subset(&outcome.split.train, "train");
    let files = [
        ("model", "model.json"),
        ("embedding", "embedding.csv"),
        ("projection", "projection.csv"),
        ("report", "report.json"),
        ("figure", "figure.svg"),
    ];
    let path = |name: &str| dir.join(name);

    outcome.model.save(&path("model.json"))?;
    let ids: Vec<String> = train.records().iter().map(|r| r.bill_id.clone()).collect();
    write_table(
        &path("embedding.csv"),
        &TableInput {
            ids: &ids,
            coords: outcome.model.coords(),
            parties: &outcome.model.training.parties,
            eras: train.eras(),
            split: "train",
            nearest: None,
        },
    )?;
    let p = &outcome.projection;
    write_table(
        &path("projection.csv"),
        &TableInput {
            ids: &p.row_ids,
            coords: &p.coords,
            parties: &p.parties,
            eras: &p.eras,
            split: "test",
            nearest: Some(&p.nearest_train_dist),
        },
    )?;
    persist::write_json(&path("report.json"), &p.alignment)?;

    let mut glyphs: Vec<Glyph> = outcome
        .model
        .coords()
        .iter_rows()
        .zip(&outcome.model.training.parties)
        .map(|(r, party)| Glyph { x: r[0], y: r.get(1).copied().unwrap_or(0.0), category: party.to_string(), projected: false })
        .collect();
    glyphs.extend(p.coords.iter_rows().zip(&p.parties).map(|(r, party)| Glyph {
        x: r[0],
        y: r.get(1).copied().unwrap_or(0.0),
        category: party.to_string(),
        projected: true,
    }));
    let svg = plot::render(
        &[Panel { title: None, glyphs }],
        &PlotOptions { color_by: ColorBy::Party, title: Some(outcome.manifest.id.clone()), ..PlotOptions::default() },
    );
    persist::write_atomic(&path("figure.svg"), svg.as_bytes())?;

    for (key, file) in files {
        outcome.manifest.outputs.insert(key.into(), file.into());
    }
    persist::write_json(&path("manifest.json"), &outcome.manifest)
}

pub fn load_manifest(path: &Path) -> Result<ExperimentManifest> {
    let m: ExperimentManifest = persist::read_json(path, "manifest")?;
    if m.format_version != MANIFEST_VERSION {
        return Err(Error::Incompatible {
            what: "manifest format version",
            expected: MANIFEST_VERSION.to_string(),
            found: m.format_version.to_string(),
        });
    }
    Ok(m)
}

/// Euclidean distance from each row to the same row of another matrix.
pub fn displacement(a: &DenseMatrix, b: &DenseMatrix) -> Vec<f64> {
    a.iter_rows().zip(b.iter_rows()).map(|(x, y)| Metric::Euclidean.distance(x, y)).collect()
}
