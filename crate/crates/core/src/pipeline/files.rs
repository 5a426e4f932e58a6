//! Feature and prediction files, one JSON object per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{parse_features, parse_label, Dataset, FeatureTable, LabeledExample, PipelineError};
use crate::features::FEATURE_COUNT;

/// `{"id": str, "label": 0|1|null, "features": [9 floats], "extra_scores": [floats]}`
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureRecord {
    pub id: String,
    pub label: Option<u8>,
    pub features: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extra_scores: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFeatureRecord {
    id: String,
    #[serde(default)]
    label: Option<Value>,
    features: Vec<f64>,
    #[serde(default)]
    extra_scores: Option<Vec<f64>>,
}

impl FeatureRecord {
    /// One record per table row; columns past the ninth become
    /// `extra_scores`.
    pub fn from_table(table: &FeatureTable) -> Vec<Self> {
        table
            .rows
            .iter()
            .zip(&table.ids)
            .zip(&table.labels)
            .map(|((row, id), label)| FeatureRecord {
                id: id.clone(),
                label: *label,
                features: row[..FEATURE_COUNT].to_vec(),
                extra_scores: (row.len() > FEATURE_COUNT).then(|| row[FEATURE_COUNT..].to_vec()),
            })
            .collect()
    }
}

/// Turns feature records into a dataset, naming `extra_scores` positionally
/// by `score_names`. Unnamed trailing scores are dropped.
pub fn dataset_from_feature_records(
    records: Vec<FeatureRecord>,
    score_names: &[String],
) -> Result<Dataset, PipelineError> {
    let examples = records
        .into_iter()
        .map(|r| {
            let scores = r.extra_scores.unwrap_or_default();
            if scores.len() < score_names.len() {
                return Err(PipelineError::MissingScore {
                    id: r.id.clone(),
                    score: score_names[scores.len()].clone(),
                });
            }
            Ok(LabeledExample {
                features: Some(parse_features(&r.features).map_err(PipelineError::Manifest)?),
                id: r.id,
                text: None,
                label: r.label,
                detector_scores: score_names.iter().cloned().zip(scores).collect(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Dataset::new(examples)
}

impl Dataset {
    pub fn from_feature_file(path: impl AsRef<Path>, score_names: &[String]) -> Result<Self, PipelineError> {
        dataset_from_feature_records(read_feature_file(path)?, score_names)
    }
}

fn write_lines<T: Serialize>(path: &Path, items: &[T]) -> Result<(), PipelineError> {
    let mut out = BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut out, item).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_feature_file(path: impl AsRef<Path>, records: &[FeatureRecord]) -> Result<(), PipelineError> {
    write_lines(path.as_ref(), records)
}

pub fn read_feature_file(path: impl AsRef<Path>) -> Result<Vec<FeatureRecord>, PipelineError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |cause: String| PipelineError::MalformedLine { line_no: i + 1, cause };
        let raw: RawFeatureRecord = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        let label = parse_label(raw.label.as_ref()).map_err(malformed)?;
        parse_features(&raw.features).map_err(malformed)?;
        out.push(FeatureRecord {
            id: raw.id,
            label,
            features: raw.features,
            extra_scores: raw.extra_scores,
        });
    }
    Ok(out)
}

/// `{"id": str, "prob_ai": float}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub prob_ai: f64,
}

pub fn write_predictions(path: impl AsRef<Path>, predictions: &[Prediction]) -> Result<(), PipelineError> {
    write_lines(path.as_ref(), predictions)
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<Prediction>, PipelineError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let p: Prediction = serde_json::from_str(&line).map_err(|e| PipelineError::MalformedLine {
            line_no: i + 1,
            cause: e.to_string(),
        })?;
        out.push(p);
    }
    Ok(out)
}
