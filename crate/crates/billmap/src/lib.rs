//! Congressional bill metadata in, two-dimensional maps out.
//!
//! [`ingest`] reads and validates bill records, [`features`] turns them
//! into a numeric matrix, [`model`] fits and applies an embedding built on
//! [`billmap_core`], and [`experiments`] wires those into reproducible
//! runs with tables and SVG figures.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod features;
pub mod ingest;
pub mod model;
pub mod persist;
pub mod plot;
pub mod table;

pub use error::{Error, Result};
pub use features::{encode, fit_encoder, EncoderSpec, FeatureMatrix};
pub use ingest::{load_corpus, read_corpus, BillRecord, Corpus, Era, Party, Schema};
pub use model::{fit, EmbeddingModel, FitParams, TransformParams};
