//! Encoding of bill records into a standardized numeric design matrix.
//!
//! Numeric fields are standardized with statistics from the training
//! corpus. Categorical fields become one-hot blocks over the training
//! vocabulary and committees a multi-hot block. Party is never encoded; it
//! travels alongside the matrix for plotting only.

use std::collections::BTreeMap;
use std::path::Path;

use billmap_core::DenseMatrix;
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{BillRecord, Corpus, Party};
use crate::persist;

pub const ENCODER_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    OneHot,
    MultiHot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: String,
    pub kind: ColumnKind,
    pub time_dependent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NumericField {
    Congress,
    IntroDate,
    LastActionDate,
    CosponsorCount,
    CommitteeCount,
}

impl NumericField {
    pub const ALL: [NumericField; 5] = [
        NumericField::Congress,
        NumericField::IntroDate,
        NumericField::LastActionDate,
        NumericField::CosponsorCount,
        NumericField::CommitteeCount,
    ];

    /// Fields that track calendar time.
    pub fn time_dependent(self) -> bool {
        matches!(self, NumericField::Congress | NumericField::IntroDate | NumericField::LastActionDate)
    }

    pub fn name(self) -> &'static str {
        match self {
            NumericField::Congress => "congress",
            NumericField::IntroDate => "intro_date",
            NumericField::LastActionDate => "last_action_date",
            NumericField::CosponsorCount => "cosponsor_count",
            NumericField::CommitteeCount => "committee_count",
        }
    }

    fn raw(self, r: &BillRecord) -> f64 {
        match self {
            NumericField::Congress => f64::from(r.congress),
            NumericField::IntroDate => days_since_epoch(r.intro_date),
            NumericField::LastActionDate => days_since_epoch(r.last_action_date),
            NumericField::CosponsorCount => f64::from(r.cosponsor_count),
            NumericField::CommitteeCount => r.committees.len() as f64,
        }
    }
}

pub fn days_since_epoch(d: NaiveDate) -> f64 {
    let epoch = NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid date");
    (d - epoch).num_days() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericStat {
    pub field: NumericField,
    pub mean: f64,
    /// Sample standard deviation; 1 for a constant column.
    pub std: f64,
}

/// Everything needed to encode new records exactly as the training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderSpec {
    pub format_version: u32,
    pub include_time: bool,
    pub numeric: Vec<NumericStat>,
    pub bill_types: Vec<String>,
    pub chambers: Vec<String>,
    pub states: Vec<String>,
    pub committees: Vec<String>,
    pub columns: Vec<ColumnMeta>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: DenseMatrix,
    pub columns: Vec<ColumnMeta>,
    pub row_ids: Vec<String>,
    pub parties: Vec<Party>,
}

/// Categories absent from the encoder vocabulary, counted per block. Each
/// unseen value leaves its indicator unset.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodeWarnings {
    pub unseen: BTreeMap<String, usize>,
}

impl EncodeWarnings {
    pub fn total(&self) -> usize {
        self.unseen.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.unseen.is_empty()
    }

    pub fn merge(&mut self, other: &EncodeWarnings) {
        for (k, v) in &other.unseen {
            *self.unseen.entry(k.clone()).or_default() += v;
        }
    }
}

fn vocabulary<'a>(values: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut v: Vec<String> = values.map(str::to_string).collect();
    v.sort();
    v.dedup();
    v
}

fn standardization(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.iter().all(|&v| v == values[0]) {
        return (values[0], 1.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Learns vocabularies and standardization statistics from `training`.
pub fn fit_encoder(training: &Corpus, include_time: bool) -> Result<EncoderSpec> {
    if training.is_empty() {
        return Err(Error::argument("cannot fit an encoder on an empty corpus"));
    }
    let records = training.records();
    let numeric: Vec<NumericStat> = NumericField::ALL
        .into_iter()
        .filter(|f| include_time || !f.time_dependent())
        .map(|field| {
            let raw: Vec<f64> = records.iter().map(|r| field.raw(r)).collect();
            let (mean, std) = standardization(&raw);
            NumericStat { field, mean, std }
        })
        .collect();
    let bill_types = vocabulary(records.iter().map(|r| r.bill_type.as_str()));
    let chambers = vocabulary(records.iter().map(|r| r.chamber.as_str()));
    let states = vocabulary(records.iter().map(|r| r.sponsor_state.as_str()));
    let committees = vocabulary(records.iter().flat_map(|r| r.committees.iter().map(String::as_str)));

    let mut columns: Vec<ColumnMeta> = numeric
        .iter()
        .map(|s| ColumnMeta {
            name: s.field.name().to_string(),
            kind: ColumnKind::Numeric,
            time_dependent: s.field.time_dependent(),
        })
        .collect();
    for (block, vocab, kind) in [
        ("bill_type", &bill_types, ColumnKind::OneHot),
        ("chamber", &chambers, ColumnKind::OneHot),
        ("sponsor_state", &states, ColumnKind::OneHot),
        ("committee", &committees, ColumnKind::MultiHot),
    ] {
        columns.extend(vocab.iter().map(|v| ColumnMeta {
            name: format!("{block}={v}"),
            kind,
            time_dependent: false,
        }));
    }

    Ok(EncoderSpec {
        format_version: ENCODER_FORMAT_VERSION,
        include_time,
        numeric,
        bill_types,
        chambers,
        states,
        committees,
        columns,
    })
}

impl EncoderSpec {
    pub fn width(&self) -> usize {
        self.columns.len()
    }

    fn check(&self) -> Result<()> {
        if self.format_version != ENCODER_FORMAT_VERSION {
            return Err(Error::Incompatible {
                what: "encoder format version",
                expected: ENCODER_FORMAT_VERSION.to_string(),
                found: self.format_version.to_string(),
            });
        }
        let width = self.numeric.len()
            + self.bill_types.len()
            + self.chambers.len()
            + self.states.len()
            + self.committees.len();
        if width != self.columns.len() || self.numeric.iter().any(|s| !(s.std > 0.0)) {
            return Err(Error::Decode {
                what: "encoder".into(),
                offset: None,
                message: "column metadata does not match vocabularies".into(),
            });
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        persist::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let spec: Self = persist::read_json(path, "encoder")?;
        spec.check()?;
        Ok(spec)
    }

    /// Encodes one record into `out` (length `width()`).
    fn encode_row(&self, r: &BillRecord, out: &mut [f64], warnings: &mut EncodeWarnings) {
        out.fill(0.0);
        let mut at = 0;
        for s in &self.numeric {
            out[at] = (s.field.raw(r) - s.mean) / s.std;
            at += 1;
        }
        let mut one_hot = |block: &str, vocab: &[String], value: &str, at: &mut usize| {
            match vocab.binary_search_by(|v| v.as_str().cmp(value)) {
                Ok(i) => out[*at + i] = 1.0,
                Err(_) => *warnings.unseen.entry(block.to_string()).or_default() += 1,
            }
            *at += vocab.len();
        };
        one_hot("bill_type", &self.bill_types, r.bill_type.as_str(), &mut at);
        one_hot("chamber", &self.chambers, r.chamber.as_str(), &mut at);
        one_hot("sponsor_state", &self.states, &r.sponsor_state, &mut at);
        for c in &r.committees {
            match self.committees.binary_search(c) {
                Ok(i) => out[at + i] = 1.0,
                Err(_) => *warnings.unseen.entry("committee".to_string()).or_default() += 1,
            }
        }
    }
}

/// Encodes `corpus` with `spec`. Unseen categories are reported, not fatal.
pub fn encode(corpus: &Corpus, spec: &EncoderSpec) -> Result<(FeatureMatrix, EncodeWarnings)> {
    spec.check()?;
    let width = spec.width();
    let mut values = DenseMatrix::zeros(corpus.len(), width);
    let mut warnings = EncodeWarnings::default();
    for (i, r) in corpus.records().iter().enumerate() {
        spec.encode_row(r, values.row_mut(i), &mut warnings);
    }
    Ok((
        FeatureMatrix {
            values,
            columns: spec.columns.clone(),
            row_ids: corpus.records().iter().map(|r| r.bill_id.clone()).collect(),
            parties: corpus.parties(),
        },
        warnings,
    ))
}
