//! Datasets, feature tables and end-to-end runs.
//!
//! A dataset file holds one JSON object per line:
//!
//! ```text
//! {"id": "a1", "text": "...", "label": 1, "scores": {"radar": 0.93}, "features": [9 floats]}
//! ```
//!
//! Everything but `id` is optional. Labels are 1 for machine-generated and 0
//! for human-written text. Examples without `features` get them from a
//! logprob cache or a scoring server when a run needs them.

mod diagnose;
mod files;
mod manifest;
mod run;

pub use diagnose::{diagnose, DEFAULT_HISTOGRAM_BINS, CohortSummary, DiagnosticsReport, Histogram, Summary};
pub use files::{
    dataset_from_feature_records, read_feature_file, read_predictions, write_feature_file, write_predictions, FeatureRecord,
    Prediction,
};
pub use manifest::{BoosterSection, DataSection, OutputSection, RunManifest, SCHEMA_VERSION};
pub use run::{
    prepare_features, run_boosted, run_standalone, BlockImportance, RunOutcome, RunReport,
};

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use crate::eval::EvalError;
use crate::features::{self, DiversityVector, ExtractorConfig, FeatureError, FEATURE_NAMES};
use crate::gbdt::GbdtError;
use crate::provider::{self, CacheError, FetchError, LogprobRecord};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("line {line_no}: {cause}")]
    MalformedLine { line_no: usize, cause: String },
    #[error("duplicate example id {0:?}")]
    DuplicateId(String),
    #[error("example {id:?} has no score named {score:?}")]
    MissingScore { id: String, score: String },
    #[error("no usable examples: {0}")]
    NoUsableExamples(String),
    #[error("labels must contain both classes ({machine} machine, {human} human)")]
    DegenerateLabels { machine: usize, human: usize },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Gbdt(#[from] GbdtError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error(transparent)]
    Fetch(#[from] FetchError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub id: String,
    pub text: Option<String>,
    /// 1 = machine-generated, 0 = human, `None` for unlabeled inference data.
    pub label: Option<u8>,
    /// Scores from other detectors, in file order.
    pub detector_scores: Vec<(String, f64)>,
    pub features: Option<DiversityVector>,
}

impl LabeledExample {
    pub fn score(&self, name: &str) -> Option<f64> {
        self.detector_scores
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassCounts {
    pub human: usize,
    pub machine: usize,
    pub unlabeled: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub examples: Vec<LabeledExample>,
}

#[derive(Deserialize)]
struct RawExample {
    id: String,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    label: Option<Value>,
    #[serde(default)]
    scores: Option<serde_json::Map<String, Value>>,
    #[serde(default)]
    features: Option<Vec<f64>>,
}

pub(crate) fn parse_label(value: Option<&Value>) -> Result<Option<u8>, String> {
    match value {
        None | Some(Value::Null) => Ok(None),
        Some(v) => match v.as_u64() {
            Some(l @ (0 | 1)) => Ok(Some(l as u8)),
            _ => Err(format!("label must be 0, 1 or null, got {v}")),
        },
    }
}

pub(crate) fn parse_features(values: &[f64]) -> Result<DiversityVector, String> {
    let vector = DiversityVector::from_slice(values)
        .ok_or_else(|| format!("features must hold {} values, got {}", FEATURE_NAMES.len(), values.len()))?;
    if !vector.is_finite() {
        return Err("features must be finite".into());
    }
    Ok(vector)
}

fn parse_example(line: &str) -> Result<LabeledExample, String> {
    let raw: RawExample = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let label = parse_label(raw.label.as_ref())?;
    let detector_scores = raw
        .scores
        .unwrap_or_default()
        .into_iter()
        .map(|(name, v)| match v.as_f64() {
            Some(x) if x.is_finite() => Ok((name, x)),
            _ => Err(format!("score {name:?} must be a finite number")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let features = raw.features.as_deref().map(parse_features).transpose()?;
    Ok(LabeledExample {
        id: raw.id,
        text: raw.text,
        label,
        detector_scores,
        features,
    })
}

impl Dataset {
    pub fn new(examples: Vec<LabeledExample>) -> Result<Self, PipelineError> {
        let mut seen = HashSet::new();
        for e in &examples {
            if !seen.insert(e.id.as_str()) {
                return Err(PipelineError::DuplicateId(e.id.clone()));
            }
        }
        Ok(Self { examples })
    }

    pub fn from_reader(reader: impl BufRead) -> Result<Self, PipelineError> {
        let mut examples = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let example = parse_example(&line).map_err(|cause| PipelineError::MalformedLine {
                line_no: i + 1,
                cause,
            })?;
            examples.push(example);
        }
        Self::new(examples)
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn class_counts(&self) -> ClassCounts {
        let mut counts = ClassCounts::default();
        for e in &self.examples {
            match e.label {
                Some(1) => counts.machine += 1,
                Some(_) => counts.human += 1,
                None => counts.unlabeled += 1,
            }
        }
        counts
    }

    /// Examples that still need features computed from logprobs.
    pub fn missing_features(&self) -> impl Iterator<Item = &LabeledExample> {
        self.examples.iter().filter(|e| e.features.is_none())
    }
}

/// Reads and validates a dataset file.
pub fn ingest(path: impl AsRef<Path>) -> Result<Dataset, PipelineError> {
    let dataset = Dataset::from_reader(BufReader::new(File::open(path)?))?;
    let counts = dataset.class_counts();
    log::info!(
        "ingested {} examples ({} human, {} machine, {} unlabeled)",
        dataset.len(),
        counts.human,
        counts.machine,
        counts.unlabeled
    );
    Ok(dataset)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SkippedExample {
    pub id: String,
    pub reason: String,
}

/// Model-ready rows: the nine diversity features, then detector scores in
/// the requested order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureTable {
    pub feature_names: Vec<String>,
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<Option<u8>>,
    pub skipped: Vec<SkippedExample>,
}

impl FeatureTable {
    /// Builds rows for every example of `dataset`.
    ///
    /// Features come from the example itself or, failing that, from its
    /// record in `records`. Examples whose sequence is too short, whose
    /// record is invalid, or that have neither features nor a record are
    /// skipped with a reason. A missing detector score is an error.
    pub fn build(
        dataset: &Dataset,
        records: &HashMap<String, LogprobRecord>,
        extractor: &ExtractorConfig,
        max_tokens: usize,
        score_names: &[String],
    ) -> Result<Self, PipelineError> {
        extractor.validate()?;
        let mut table = FeatureTable {
            feature_names: FEATURE_NAMES
                .iter()
                .map(|s| s.to_string())
                .chain(score_names.iter().cloned())
                .collect(),
            ..Default::default()
        };
        for example in &dataset.examples {
            let vector = match example.features {
                Some(v) => v,
                None => match records.get(&example.id) {
                    None => {
                        table.skip(&example.id, "no features and no logprob record".into());
                        continue;
                    }
                    Some(record) => match provider::surprisal_from_record(record, max_tokens)
                        .map_err(|e| e.to_string())
                        .and_then(|s| features::extract(&s.values, extractor).map_err(|e| e.to_string()))
                    {
                        Ok(v) => v,
                        Err(reason) => {
                            table.skip(&example.id, reason);
                            continue;
                        }
                    },
                },
            };
            let mut row = vector.to_array().to_vec();
            for name in score_names {
                let value = example.score(name).ok_or_else(|| PipelineError::MissingScore {
                    id: example.id.clone(),
                    score: name.clone(),
                })?;
                row.push(value);
            }
            table.ids.push(example.id.clone());
            table.rows.push(row);
            table.labels.push(example.label);
        }
        Ok(table)
    }

    fn skip(&mut self, id: &str, reason: String) {
        log::warn!("skipping {id}: {reason}");
        self.skipped.push(SkippedExample {
            id: id.to_owned(),
            reason,
        });
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows and labels of the labeled examples only.
    pub fn labeled(&self) -> (Vec<&[f64]>, Vec<u8>) {
        self.rows
            .iter()
            .zip(&self.labels)
            .filter_map(|(r, l)| l.map(|l| (r.as_slice(), l)))
            .unzip()
    }

    pub fn diversity(&self, i: usize) -> DiversityVector {
        DiversityVector::from_slice(&self.rows[i][..FEATURE_NAMES.len()]).expect("nine leading features")
    }
}
