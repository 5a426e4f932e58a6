//! Declarative run configuration.
//!
//! ```toml
//! schema_version = 1
//! max_tokens = 1024
//!
//! [data]
//! train = "train.jsonl"
//! test = "test.jsonl"
//! logprob_cache = "logprobs.jsonl"
//!
//! [provider]            # optional; fetches logprobs missing from the cache
//! endpoint_url = "http://127.0.0.1:8000/v1/completions"
//! model_name = "gpt2"
//! api_key_env = "SURPRISAL_API_KEY"
//!
//! [extractor]
//! entropy_bins = 20
//!
//! [gbdt]
//! n_estimators = 200
//! max_depth = 12
//!
//! [booster]
//! scores = ["radar", "binoculars"]
//!
//! [output]
//! model = "model.json"
//! predictions = "predictions.jsonl"
//! report = "report.json"
//! ```
//!
//! Relative paths resolve against the manifest's directory. The top-level
//! `max_tokens` caps scored tokens for both fetching and extraction.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::features::ExtractorConfig;
use crate::gbdt::GbdtParams;
use crate::provider::{ProviderConfig, DEFAULT_MAX_TOKENS};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub logprob_cache: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoosterSection {
    /// Detector score names, in feature-column order after the nine
    /// diversity features.
    pub scores: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub model: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

fn default_max_tokens() -> usize {
    DEFAULT_MAX_TOKENS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: usize,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub provider: Option<ProviderConfig>,
    #[serde(default)]
    pub extractor: ExtractorConfig,
    #[serde(default)]
    pub gbdt: GbdtParams,
    #[serde(default)]
    pub booster: BoosterSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl Default for RunManifest {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            max_tokens: DEFAULT_MAX_TOKENS,
            data: DataSection::default(),
            provider: None,
            extractor: ExtractorConfig::default(),
            gbdt: GbdtParams::default(),
            booster: BoosterSection::default(),
            output: OutputSection::default(),
        }
    }
}

fn resolve(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl RunManifest {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        let manifest: Self = toml::from_str(text).map_err(|e| PipelineError::Manifest(e.to_string()))?;
        manifest.validate()?;
        Ok(manifest)
    }

    /// Parses the manifest at `path`, resolves relative paths against its
    /// directory and checks that every input it names exists.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let mut manifest = Self::from_toml(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut manifest.data.train,
            &mut manifest.data.test,
            &mut manifest.data.logprob_cache,
            &mut manifest.output.model,
            &mut manifest.output.predictions,
            &mut manifest.output.report,
        ] {
            resolve(base, p);
        }
        manifest.check_inputs_exist()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(PipelineError::Manifest(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.extractor.validate()?;
        self.gbdt.validate()?;
        if let Some(provider) = self.provider_config() {
            provider.validate()?;
        }
        Ok(())
    }

    pub fn check_inputs_exist(&self) -> Result<(), PipelineError> {
        let mut inputs = vec![&self.data.train, &self.data.test];
        // a cache can be created by fetching
        if self.provider.is_none() {
            inputs.push(&self.data.logprob_cache);
        }
        for p in inputs.into_iter().flatten() {
            if !p.exists() {
                return Err(PipelineError::Manifest(format!("{} does not exist", p.display())));
            }
        }
        Ok(())
    }

    /// The provider section with `max_tokens` applied.
    pub fn provider_config(&self) -> Option<ProviderConfig> {
        self.provider.clone().map(|p| ProviderConfig {
            max_tokens_scored: self.max_tokens,
            ..p
        })
    }
}
