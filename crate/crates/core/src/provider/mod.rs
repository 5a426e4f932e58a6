//! Token log-probabilities and the surprisal sequences derived from them.
//!
//! Log-probabilities come either from an HTTP completions backend
//! ([`fetch_logprobs`]) or from a line-delimited cache file
//! ([`cache_read`] / [`cache_write`]). All values are natural-log.

mod cache;
mod http;

pub use cache::{cache_read, cache_write, CacheError};
pub use http::{
    fetch_logprobs, fetch_logprobs_blocking, FailureCause, FetchError, FetchOutcome, PerTextFailure, ProviderConfig,
    ProviderProfile, RetryPolicy, SecretString,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default number of tokens scored per text.
pub const DEFAULT_MAX_TOKENS: usize = 1024;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecordError {
    #[error("record {id}: {tokens} tokens but {logprobs} logprobs")]
    LengthMismatch {
        id: String,
        tokens: usize,
        logprobs: usize,
    },
    #[error("record {id}: logprob {value} at position {index} is not a finite value <= 0")]
    NonFiniteLogprob { id: String, index: usize, value: f64 },
    #[error("record {id}: logprob missing at position {index}; only the first may be absent")]
    MissingLogprob { id: String, index: usize },
    #[error("record {id}: no logprobs present")]
    EmptySequence { id: String },
}

/// Per-token log-probabilities of one text as returned by a scoring model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogprobRecord {
    pub id: String,
    #[serde(rename = "model")]
    pub model_name: String,
    pub tokens: Vec<String>,
    /// `None` only at position 0, for a token scored without context.
    pub logprobs: Vec<Option<f64>>,
    pub truncated: bool,
}

impl LogprobRecord {
    pub fn validate(&self) -> Result<(), RecordError> {
        if self.tokens.len() != self.logprobs.len() {
            return Err(RecordError::LengthMismatch {
                id: self.id.clone(),
                tokens: self.tokens.len(),
                logprobs: self.logprobs.len(),
            });
        }
        for (index, lp) in self.logprobs.iter().enumerate() {
            match lp {
                None if index > 0 => {
                    return Err(RecordError::MissingLogprob {
                        id: self.id.clone(),
                        index,
                    })
                }
                Some(value) if !(value.is_finite() && *value <= 0.0) => {
                    return Err(RecordError::NonFiniteLogprob {
                        id: self.id.clone(),
                        index,
                        value: *value,
                    })
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Keeps at most the first `max_tokens` tokens, setting the truncation
    /// flag when anything was dropped.
    pub fn truncate(&mut self, max_tokens: usize) {
        if self.tokens.len() > max_tokens {
            self.tokens.truncate(max_tokens);
            self.logprobs.truncate(max_tokens);
            self.truncated = true;
        }
    }
}

/// Surprisal values (nats, non-negative) of one text in token order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurprisalSequence {
    pub id: String,
    pub values: Vec<f64>,
    pub source_model: String,
}

impl SurprisalSequence {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Negates the present logprobs of `record`, keeping at most `max_tokens`
/// values. An absent leading entry is dropped.
pub fn surprisal_from_record(
    record: &LogprobRecord,
    max_tokens: usize,
) -> Result<SurprisalSequence, RecordError> {
    record.validate()?;
    let values: Vec<f64> = record
        .logprobs
        .iter()
        .flatten()
        .take(max_tokens)
        .map(|lp| -lp)
        .collect();
    if values.is_empty() {
        return Err(RecordError::EmptySequence {
            id: record.id.clone(),
        });
    }
    Ok(SurprisalSequence {
        id: record.id.clone(),
        values,
        source_model: record.model_name.clone(),
    })
}
