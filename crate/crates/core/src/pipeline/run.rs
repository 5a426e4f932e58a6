use std::collections::{HashMap, HashSet};
use std::fs;

use serde::{Deserialize, Serialize};

use super::{
    write_predictions, Dataset, FeatureTable, PipelineError, Prediction, RunManifest, SkippedExample,
};
use crate::eval::{classification_report, EvalReport};
use crate::features::{DISTRIBUTION_FEATURES, FEATURE_COUNT, FIRST_ORDER_FEATURES, SECOND_ORDER_FEATURES};
use crate::gbdt::{self, GbdtModel};
use crate::provider::{self, LogprobRecord};

/// Share of total split gain per feature group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockImportance {
    /// The nine diversity features together.
    pub diversity: f64,
    /// All detector score columns together.
    pub detectors: f64,
    pub distribution: f64,
    pub first_order: f64,
    pub second_order: f64,
}

impl BlockImportance {
    pub fn from_importance(importance: &[(String, f64)]) -> Self {
        let sum = |range: std::ops::Range<usize>| -> f64 { importance[range].iter().fold(0.0, |acc, (_, v)| acc + v) };
        Self {
            diversity: sum(0..FEATURE_COUNT),
            detectors: sum(FEATURE_COUNT..importance.len()),
            distribution: sum(DISTRIBUTION_FEATURES),
            first_order: sum(FIRST_ORDER_FEATURES),
            second_order: sum(SECOND_ORDER_FEATURES),
        }
    }
}

/// Test metrics plus bookkeeping for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    #[serde(flatten)]
    pub metrics: EvalReport,
    pub n_train_used: usize,
    pub n_test_used: usize,
    pub skipped_train: Vec<SkippedExample>,
    pub skipped_test: Vec<SkippedExample>,
    pub feature_names: Vec<String>,
    pub block_importance: BlockImportance,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub model: GbdtModel,
    pub report: RunReport,
    /// One per usable test example, in dataset order.
    pub predictions: Vec<Prediction>,
    pub importance: Vec<(String, f64)>,
}

/// Logprob records for every example of `datasets` that lacks features.
///
/// Records are read from the manifest's cache. When a provider is
/// configured, texts still missing are scored by it and appended to the
/// cache (if one is named). Texts the provider fails on are logged and end
/// up skipped downstream.
pub fn prepare_features(
    datasets: &[&Dataset],
    manifest: &RunManifest,
) -> Result<HashMap<String, LogprobRecord>, PipelineError> {
    let wanted: HashSet<String> = datasets
        .iter()
        .flat_map(|d| d.missing_features())
        .map(|e| e.id.clone())
        .collect();
    if wanted.is_empty() {
        return Ok(HashMap::new());
    }
    let mut records: HashMap<String, LogprobRecord> = match &manifest.data.logprob_cache {
        Some(path) if path.exists() => provider::cache_read(path, Some(&wanted))?
            .into_iter()
            .map(|r| (r.id.clone(), r))
            .collect(),
        _ => HashMap::new(),
    };
    let Some(config) = manifest.provider_config() else {
        return Ok(records);
    };
    let texts: Vec<(String, String)> = datasets
        .iter()
        .flat_map(|d| d.missing_features())
        .filter(|e| !records.contains_key(&e.id))
        .filter_map(|e| e.text.clone().map(|t| (e.id.clone(), t)))
        .collect();
    if texts.is_empty() {
        return Ok(records);
    }
    let outcome = provider::fetch_logprobs_blocking(&texts, &config)?;
    for failure in &outcome.failures {
        log::warn!(
            "{}: scoring failed after {} attempts: {}",
            failure.id,
            failure.attempts,
            failure.cause
        );
    }
    if let Some(path) = &manifest.data.logprob_cache {
        provider::cache_write(&outcome.records, path, false)?;
    }
    records.extend(outcome.records.into_iter().map(|r| (r.id.clone(), r)));
    Ok(records)
}

fn class_check(labels: &[u8]) -> Result<(), PipelineError> {
    let machine = labels.iter().filter(|&&l| l == 1).count();
    let human = labels.len() - machine;
    if machine == 0 || human == 0 {
        return Err(PipelineError::DegenerateLabels { machine, human });
    }
    Ok(())
}

fn fit_and_evaluate(
    mut train: FeatureTable,
    test: FeatureTable,
    manifest: &RunManifest,
) -> Result<RunOutcome, PipelineError> {
    for (id, label) in train.ids.iter().zip(&train.labels) {
        if label.is_none() {
            train.skipped.push(SkippedExample {
                id: id.clone(),
                reason: "unlabeled training example".into(),
            });
        }
    }
    let (rows, labels) = train.labeled();
    if rows.is_empty() {
        return Err(PipelineError::NoUsableExamples("training set".into()));
    }
    if test.is_empty() {
        return Err(PipelineError::NoUsableExamples("test set".into()));
    }
    class_check(&labels)?;
    let model = gbdt::train(&rows, &labels, &train.feature_names, &manifest.gbdt)?;
    let n_train_used = rows.len();

    let probs = gbdt::predict_proba(&model, &test.rows)?;
    let predictions: Vec<Prediction> = test
        .ids
        .iter()
        .zip(&probs)
        .map(|(id, &prob_ai)| Prediction {
            id: id.clone(),
            prob_ai,
        })
        .collect();
    let (scores, labels): (Vec<f64>, Vec<u8>) = probs
        .iter()
        .zip(&test.labels)
        .filter_map(|(&p, l)| l.map(|l| (p, l)))
        .unzip();
    let metrics = classification_report(&scores, &labels, 0.5)?;
    let importance = model.feature_importance();
    let report = RunReport {
        metrics,
        n_train_used,
        n_test_used: test.len(),
        skipped_train: train.skipped,
        skipped_test: test.skipped,
        feature_names: train.feature_names,
        block_importance: BlockImportance::from_importance(&importance),
    };
    let outcome = RunOutcome {
        model,
        report,
        predictions,
        importance,
    };
    write_outputs(&outcome, manifest)?;
    Ok(outcome)
}

fn write_outputs(outcome: &RunOutcome, manifest: &RunManifest) -> Result<(), PipelineError> {
    let out = &manifest.output;
    if let Some(path) = &out.model {
        gbdt::save(&outcome.model, path)?;
    }
    if let Some(path) = &out.predictions {
        write_predictions(path, &outcome.predictions)?;
    }
    if let Some(path) = &out.report {
        let mut text = serde_json::to_string_pretty(&outcome.report).map_err(std::io::Error::from)?;
        text.push('\n');
        fs::write(path, text)?;
    }
    Ok(())
}

fn tables(
    train: &Dataset,
    test: &Dataset,
    manifest: &RunManifest,
    score_names: &[String],
) -> Result<(FeatureTable, FeatureTable), PipelineError> {
    let records = prepare_features(&[train, test], manifest)?;
    let build = |d| FeatureTable::build(d, &records, &manifest.extractor, manifest.max_tokens, score_names);
    Ok((build(train)?, build(test)?))
}

/// Trains on the nine diversity features of `train` and evaluates on
/// `test`, writing whichever outputs the manifest names.
pub fn run_standalone(train: &Dataset, test: &Dataset, manifest: &RunManifest) -> Result<RunOutcome, PipelineError> {
    let (train, test) = tables(train, test, manifest, &[])?;
    fit_and_evaluate(train, test, manifest)
}

/// Like [`run_standalone`], with the detector scores named in
/// `manifest.booster.scores` appended after the diversity features.
pub fn run_boosted(train: &Dataset, test: &Dataset, manifest: &RunManifest) -> Result<RunOutcome, PipelineError> {
    if manifest.booster.scores.is_empty() {
        return Err(PipelineError::Manifest("booster.scores names no detector scores".into()));
    }
    let (train, test) = tables(train, test, manifest, &manifest.booster.scores)?;
    fit_and_evaluate(train, test, manifest)
}
