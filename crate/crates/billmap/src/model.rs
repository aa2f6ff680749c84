//! Fitted embedding models: fitting, persistence and projection of new
//! records onto the frozen layout.

use std::path::Path;

use billmap_core::evaluate::{alignment, nearest_distances, AlignmentReport};
use billmap_core::{
    build_fuzzy_graph, fit_kernel, initialize, knn, knn_exact, optimize, project, CalibrationOptions,
    DenseMatrix, Embedding, EmbeddingConfig, FuzzyGraph, LowDimKernel, Metric, NeighborGraph,
    ProjectionParams,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{encode, fit_encoder, ColumnMeta, EncodeWarnings, EncoderSpec, FeatureMatrix};
use crate::ingest::{Corpus, Era, Party};
use crate::persist;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Neighbor search strategy for the fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborSearch {
    /// Exact below a few thousand points, neighbor descent above.
    #[default]
    Auto,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParams {
    pub k: usize,
    pub metric: Metric,
    #[serde(default)]
    pub search: NeighborSearch,
    #[serde(default)]
    pub calibration: CalibrationOptions,
    pub embedding: EmbeddingConfig,
}

impl Default for FitParams {
    fn default() -> Self {
        Self {
            k: 45,
            metric: Metric::Euclidean,
            search: NeighborSearch::Auto,
            calibration: CalibrationOptions::default(),
            embedding: EmbeddingConfig { n_epochs: 450, ..EmbeddingConfig::default() },
        }
    }
}

impl FitParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::argument("k must be at least 1"));
        }
        if self.embedding.n_epochs == 0 {
            return Err(Error::argument("epochs must be at least 1"));
        }
        self.embedding.validate()?;
        Ok(())
    }
}

/// Encoded training rows as persisted with a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingFeatures {
    pub values: DenseMatrix,
    pub columns: Vec<ColumnMeta>,
    pub row_ids: Vec<String>,
    pub parties: Vec<Party>,
}

impl From<FeatureMatrix> for TrainingFeatures {
    fn from(m: FeatureMatrix) -> Self {
        Self { values: m.values, columns: m.columns, row_ids: m.row_ids, parties: m.parties }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingModel {
    pub format_version: u32,
    pub params: FitParams,
    pub encoder: EncoderSpec,
    pub training: TrainingFeatures,
    pub neighbors: NeighborGraph,
    pub fuzzy: FuzzyGraph,
    pub kernel: LowDimKernel,
    pub embedding: Embedding,
    /// Spectral initialization could not be used and random coordinates
    /// were substituted.
    #[serde(default)]
    pub init_fell_back: bool,
}

/// Intermediate and final products of a fit on an encoded matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Fitted {
    pub neighbors: NeighborGraph,
    pub fuzzy: FuzzyGraph,
    pub kernel: LowDimKernel,
    pub embedding: Embedding,
    pub init_fell_back: bool,
}

/// Runs the whole fit on an already encoded matrix.
pub fn fit_matrix(values: &DenseMatrix, params: &FitParams) -> Result<Fitted> {
    params.validate()?;
    let n = values.rows();
    if params.k >= n {
        return Err(Error::argument(format!("k = {} needs more than {n} training records", params.k)));
    }
    let e = &params.embedding;
    let neighbors = match params.search {
        NeighborSearch::Auto => knn(values, params.k, params.metric, e.seed)?,
        NeighborSearch::Exact => knn_exact(values, params.k, params.metric)?,
    };
    let fuzzy = build_fuzzy_graph(&neighbors, &params.calibration)?;
    let kernel = fit_kernel(e.min_dist, e.spread)?;
    let init = initialize(&fuzzy, e.dims, e.init, e.seed)?;
    let embedding = optimize(&fuzzy, init.coords, &kernel, e)?;
    Ok(Fitted { neighbors, fuzzy, kernel, embedding, init_fell_back: init.fell_back })
}

/// Fits an encoder on `training` and embeds it.
pub fn fit(training: &Corpus, include_time: bool, params: &FitParams) -> Result<EmbeddingModel> {
    params.validate()?;
    let encoder = fit_encoder(training, include_time)?;
    let (features, _) = encode(training, &encoder)?;
    let fitted = fit_matrix(&features.values, params)?;
    Ok(EmbeddingModel {
        format_version: MODEL_FORMAT_VERSION,
        params: params.clone(),
        encoder,
        training: features.into(),
        neighbors: fitted.neighbors,
        fuzzy: fitted.fuzzy,
        kernel: fitted.kernel,
        embedding: fitted.embedding,
        init_fell_back: fitted.init_fell_back,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformParams {
    pub transform_epochs: usize,
    /// Defaults to a quarter of the fit learning rate.
    pub learning_rate: Option<f64>,
}

impl Default for TransformParams {
    fn default() -> Self {
        Self { transform_epochs: 30, learning_rate: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    pub row_ids: Vec<String>,
    pub parties: Vec<Party>,
    pub eras: Vec<Era>,
    pub coords: DenseMatrix,
    pub initial_coords: DenseMatrix,
    /// Layout distance to the nearest training point.
    pub nearest_train_dist: Vec<f64>,
    pub warnings: EncodeWarnings,
    /// Projected points whose bandwidth calibration hit a bound.
    pub clamped: usize,
    pub alignment: AlignmentReport,
}

impl EmbeddingModel {
    pub fn n(&self) -> usize {
        self.training.values.rows()
    }

    pub fn coords(&self) -> &DenseMatrix {
        &self.embedding.coords
    }

    /// Checks that every component agrees on the number of points.
    pub fn check(&self) -> Result<()> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Incompatible {
                what: "model format version",
                expected: MODEL_FORMAT_VERSION.to_string(),
                found: self.format_version.to_string(),
            });
        }
        let n = self.n();
        let sizes = [
            self.training.row_ids.len(),
            self.training.parties.len(),
            self.neighbors.n(),
            self.fuzzy.n,
            self.embedding.coords.rows(),
        ];
        if sizes.iter().any(|&s| s != n) || self.training.values.cols() != self.encoder.width() {
            return Err(Error::Decode {
                what: "model".into(),
                offset: None,
                message: format!("component sizes disagree: {n} training rows vs {sizes:?}"),
            });
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        persist::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        #[derive(Deserialize)]
        struct Version {
            format_version: u32,
        }
        let what = format!("model {}", path.display());
        let v: Version = persist::decode_json(&bytes, &what)?;
        if v.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Incompatible {
                what: "model format version",
                expected: MODEL_FORMAT_VERSION.to_string(),
                found: v.format_version.to_string(),
            });
        }
        let model: Self = persist::decode_json(&bytes, &what)?;
        model.check()?;
        Ok(model)
    }

    /// Projects an already encoded matrix onto the layout.
    pub fn transform_matrix(&self, values: &DenseMatrix, params: &TransformParams) -> Result<billmap_core::Projection> {
        if values.cols() != self.training.values.cols() {
            return Err(Error::Incompatible {
                what: "feature width",
                expected: self.training.values.cols().to_string(),
                found: values.cols().to_string(),
            });
        }
        if values.rows() == 0 {
            return Err(Error::argument("nothing to transform"));
        }
        let e = &self.embedding.config;
        let projection = ProjectionParams {
            k: self.params.k,
            metric: self.params.metric,
            transform_epochs: params.transform_epochs,
            learning_rate: params.learning_rate.unwrap_or(e.initial_lr / 4.0),
            neg_samples: e.neg_samples,
            seed: e.seed,
            calibration: self.params.calibration,
        };
        Ok(project(&self.training.values, &self.embedding.coords, &self.kernel, values, &projection)?)
    }

    /// Encodes `records` with the training encoder and projects them.
    pub fn transform(&self, records: &Corpus, params: &TransformParams) -> Result<ProjectionResult> {
        if records.is_empty() {
            return Err(Error::argument("nothing to transform: the corpus is empty"));
        }
        let (features, warnings) = encode(records, &self.encoder)?;
        let p = self.transform_matrix(&features.values, params)?;
        let labels: Vec<&str> = features.parties.iter().map(|p| p.as_str()).collect();
        let report = alignment(&self.embedding.coords, &p.coords, Some(&labels))?;
        Ok(ProjectionResult {
            nearest_train_dist: nearest_distances(&self.embedding.coords, &p.coords),
            row_ids: features.row_ids,
            parties: features.parties,
            eras: records.eras().to_vec(),
            coords: p.coords,
            initial_coords: p.initial_coords,
            warnings,
            clamped: p.clamped,
            alignment: report,
        })
    }
}
