//! Scoring texts against an HTTP completions server.
//!
//! The default [`ProviderProfile::EchoCompletions`] profile speaks the legacy
//! completions protocol: the whole text is sent as the prompt with zero new
//! tokens, `echo` on and per-token logprobs requested, so the server returns
//! the teacher-forced log-probability of every prompt token.
//! [`ProviderProfile::PromptLogprobs`] targets servers that expose a
//! `prompt_logprobs` request field instead.

use std::fmt;
use std::time::Duration;

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::{LogprobRecord, DEFAULT_MAX_TOKENS};
use crate::features::MIN_SEQUENCE_LEN;

/// An API key. Never printed by `Debug`.
#[derive(Clone, PartialEq, Eq)]
pub struct SecretString(String);

impl SecretString {
    pub fn new(value: impl Into<String>) -> Self {
        Self(value.into())
    }

    pub fn expose(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for SecretString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SecretString(***)")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProviderProfile {
    #[default]
    EchoCompletions,
    PromptLogprobs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetryPolicy {
    /// Total attempts per text, including the first.
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
    pub multiplier: f64,
    pub max_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 4,
            initial_backoff_ms: 250,
            multiplier: 2.0,
            max_backoff_ms: 8_000,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (1-based).
    pub fn backoff(&self, retry: u32) -> Duration {
        let factor = self.multiplier.max(1.0).powi(retry.saturating_sub(1) as i32);
        let ms = (self.initial_backoff_ms as f64 * factor).min(self.max_backoff_ms as f64);
        Duration::from_millis(ms as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub endpoint_url: String,
    pub model_name: String,
    /// Explicit key; takes precedence over `api_key_env`.
    #[serde(skip)]
    pub api_key: Option<SecretString>,
    /// Environment variable holding the API key.
    pub api_key_env: Option<String>,
    pub max_tokens_scored: usize,
    pub max_concurrency: usize,
    pub retry: RetryPolicy,
    pub timeout_ms: u64,
    pub profile: ProviderProfile,
    /// Text prepended to every prompt so the first real token is scored
    /// with context. The prefix's own tokens are dropped from the record.
    pub bos_prefix: Option<String>,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            endpoint_url: "http://127.0.0.1:8000/v1/completions".into(),
            model_name: "gpt2".into(),
            api_key: None,
            api_key_env: None,
            max_tokens_scored: DEFAULT_MAX_TOKENS,
            max_concurrency: 8,
            retry: RetryPolicy::default(),
            timeout_ms: 60_000,
            profile: ProviderProfile::default(),
            bos_prefix: None,
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), FetchError> {
        let bad = |msg: String| Err(FetchError::InvalidConfig(msg));
        if self.max_tokens_scored < MIN_SEQUENCE_LEN {
            return bad(format!(
                "max_tokens_scored must be at least {MIN_SEQUENCE_LEN}, got {}",
                self.max_tokens_scored
            ));
        }
        if self.max_concurrency == 0 {
            return bad("max_concurrency must be positive".into());
        }
        if self.retry.max_attempts == 0 {
            return bad("retry.max_attempts must be positive".into());
        }
        if self.timeout_ms == 0 {
            return bad("timeout_ms must be positive".into());
        }
        Ok(())
    }

    fn resolve_api_key(&self) -> Option<SecretString> {
        self.api_key.clone().or_else(|| {
            self.api_key_env
                .as_deref()
                .and_then(|var| std::env::var(var).ok())
                .filter(|k| !k.is_empty())
                .map(SecretString)
        })
    }

    fn request_body(&self, text: &str) -> Value {
        let prompt = match &self.bos_prefix {
            Some(prefix) => format!("{prefix}{text}"),
            None => text.to_owned(),
        };
        match self.profile {
            ProviderProfile::EchoCompletions => json!({
                "model": self.model_name,
                "prompt": prompt,
                "max_tokens": 0,
                "echo": true,
                "logprobs": 0,
            }),
            ProviderProfile::PromptLogprobs => json!({
                "model": self.model_name,
                "prompt": prompt,
                "max_tokens": 1,
                "prompt_logprobs": 0,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FailureCause {
    /// Non-success HTTP status on the final attempt.
    Http { status: u16 },
    /// Connection, timeout or body-read failure on the final attempt.
    Transport { message: String, connect: bool },
    /// The server answered but without usable per-token logprobs.
    Protocol(String),
}

impl fmt::Display for FailureCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Http { status } => write!(f, "HTTP status {status}"),
            Self::Transport { message, .. } => write!(f, "transport error: {message}"),
            Self::Protocol(msg) => write!(f, "protocol error: {msg}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerTextFailure {
    pub id: String,
    pub attempts: u32,
    pub cause: FailureCause,
}

#[derive(Debug, Clone, Default)]
pub struct FetchOutcome {
    /// Successful records, in input order.
    pub records: Vec<LogprobRecord>,
    pub failures: Vec<PerTextFailure>,
}

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("invalid provider config: {0}")]
    InvalidConfig(String),
    #[error("no texts to score")]
    EmptyInput,
    #[error("endpoint unreachable: {0}")]
    EndpointUnreachable(String),
    #[error("protocol error: {0}")]
    ProtocolError(String),
    #[error("http client: {0}")]
    Client(#[from] reqwest::Error),
}

impl FetchError {
    /// True for failures caused by the network or the backend.
    pub fn is_backend(&self) -> bool {
        matches!(
            self,
            Self::EndpointUnreachable(_) | Self::ProtocolError(_) | Self::Client(_)
        )
    }
}

enum Attempt {
    Done(LogprobRecord),
    Retry(FailureCause),
    Fatal(FailureCause),
}

/// Scores every `(id, text)` pair, issuing at most `max_concurrency`
/// requests at once.
///
/// Texts that still fail after retries are listed in
/// [`FetchOutcome::failures`]; the rest of the batch is unaffected. When
/// every text fails to connect the whole call returns
/// [`FetchError::EndpointUnreachable`], and when every response lacks
/// logprobs it returns [`FetchError::ProtocolError`].
pub async fn fetch_logprobs(
    texts: &[(String, String)],
    config: &ProviderConfig,
) -> Result<FetchOutcome, FetchError> {
    config.validate()?;
    if texts.is_empty() {
        return Err(FetchError::EmptyInput);
    }
    let client = reqwest::Client::builder()
        .timeout(Duration::from_millis(config.timeout_ms))
        .build()?;
    let api_key = config.resolve_api_key();

    let mut results: Vec<(usize, Result<LogprobRecord, PerTextFailure>)> =
        stream::iter(texts.iter().enumerate())
            .map(|(index, (id, text))| {
                let client = &client;
                let api_key = api_key.as_ref();
                async move { (index, fetch_one(client, config, api_key, id, text).await) }
            })
            .buffer_unordered(config.max_concurrency)
            .collect()
            .await;
    results.sort_by_key(|(index, _)| *index);

    let mut outcome = FetchOutcome::default();
    for (_, result) in results {
        match result {
            Ok(record) => outcome.records.push(record),
            Err(failure) => outcome.failures.push(failure),
        }
    }
    if outcome.records.is_empty() {
        let first = &outcome.failures[0].cause;
        let all = |pred: fn(&FailureCause) -> bool| outcome.failures.iter().all(|f| pred(&f.cause));
        if all(|c| matches!(c, FailureCause::Transport { connect: true, .. })) {
            return Err(FetchError::EndpointUnreachable(format!(
                "{}: {first}",
                config.endpoint_url
            )));
        }
        if all(|c| matches!(c, FailureCause::Protocol(_))) {
            return Err(FetchError::ProtocolError(first.to_string()));
        }
    }
    Ok(outcome)
}

/// Runs [`fetch_logprobs`] on a fresh Tokio runtime.
pub fn fetch_logprobs_blocking(
    texts: &[(String, String)],
    config: &ProviderConfig,
) -> Result<FetchOutcome, FetchError> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| FetchError::InvalidConfig(format!("cannot start runtime: {e}")))?;
    runtime.block_on(fetch_logprobs(texts, config))
}

async fn fetch_one(
    client: &reqwest::Client,
    config: &ProviderConfig,
    api_key: Option<&SecretString>,
    id: &str,
    text: &str,
) -> Result<LogprobRecord, PerTextFailure> {
    let body = config.request_body(text);
    let mut attempt = 1;
    loop {
        let cause = match attempt_once(client, config, api_key, id, &body).await {
            Attempt::Done(record) => return Ok(record),
            Attempt::Fatal(cause) => {
                return Err(PerTextFailure {
                    id: id.to_owned(),
                    attempts: attempt,
                    cause,
                })
            }
            Attempt::Retry(cause) => cause,
        };
        if attempt >= config.retry.max_attempts {
            return Err(PerTextFailure {
                id: id.to_owned(),
                attempts: attempt,
                cause,
            });
        }
        log::debug!("{id}: attempt {attempt} failed ({cause}), retrying");
        tokio::time::sleep(config.retry.backoff(attempt)).await;
        attempt += 1;
    }
}

async fn attempt_once(
    client: &reqwest::Client,
    config: &ProviderConfig,
    api_key: Option<&SecretString>,
    id: &str,
    body: &Value,
) -> Attempt {
    let mut request = client.post(&config.endpoint_url).json(body);
    if let Some(key) = api_key {
        request = request.bearer_auth(key.expose());
    }
    let response = match request.send().await {
        Ok(r) => r,
        Err(e) => {
            return Attempt::Retry(FailureCause::Transport {
                message: e.to_string(),
                connect: e.is_connect(),
            })
        }
    };
    let status = response.status();
    if !status.is_success() {
        let cause = FailureCause::Http {
            status: status.as_u16(),
        };
        return if status.is_server_error() || status.as_u16() == 429 || status.as_u16() == 408 {
            Attempt::Retry(cause)
        } else {
            Attempt::Fatal(cause)
        };
    }
    let payload: Value = match response.json().await {
        Ok(v) => v,
        Err(e) if e.is_decode() => return Attempt::Fatal(FailureCause::Protocol(e.to_string())),
        Err(e) => {
            return Attempt::Retry(FailureCause::Transport {
                message: e.to_string(),
                connect: false,
            })
        }
    };
    match parse_response(&payload, config, id) {
        Ok(record) => Attempt::Done(record),
        Err(msg) => Attempt::Fatal(FailureCause::Protocol(msg)),
    }
}

fn parse_response(payload: &Value, config: &ProviderConfig, id: &str) -> Result<LogprobRecord, String> {
    let choice = payload
        .get("choices")
        .and_then(|c| c.get(0))
        .ok_or("response has no choices")?;
    let (mut tokens, mut logprobs) = match config.profile {
        ProviderProfile::EchoCompletions => parse_echo(choice)?,
        ProviderProfile::PromptLogprobs => parse_prompt_logprobs(choice)?,
    };
    if config.bos_prefix.is_some() {
        if tokens.is_empty() {
            return Err("response has no tokens for the prefix".into());
        }
        tokens.remove(0);
        logprobs.remove(0);
    }
    let model_name = payload
        .get("model")
        .and_then(Value::as_str)
        .unwrap_or(&config.model_name)
        .to_owned();
    let mut record = LogprobRecord {
        id: id.to_owned(),
        model_name,
        tokens,
        logprobs,
        truncated: false,
    };
    record.truncate(config.max_tokens_scored);
    record.validate().map_err(|e| e.to_string())?;
    Ok(record)
}

type TokenLogprobs = (Vec<String>, Vec<Option<f64>>);

fn parse_echo(choice: &Value) -> Result<TokenLogprobs, String> {
    let lp = choice.get("logprobs").ok_or("choice has no logprobs object")?;
    let tokens = lp
        .get("tokens")
        .and_then(Value::as_array)
        .ok_or("logprobs.tokens missing")?;
    let values = lp
        .get("token_logprobs")
        .and_then(Value::as_array)
        .ok_or("logprobs.token_logprobs missing")?;
    if tokens.len() != values.len() {
        return Err(format!(
            "{} tokens but {} token_logprobs",
            tokens.len(),
            values.len()
        ));
    }
    let tokens = tokens
        .iter()
        .map(|t| t.as_str().map(str::to_owned).ok_or("non-string token"))
        .collect::<Result<Vec<_>, _>>()?;
    let logprobs = values
        .iter()
        .map(|v| match v {
            Value::Null => Ok(None),
            v => v.as_f64().map(Some).ok_or("non-numeric token logprob"),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((tokens, logprobs))
}

fn parse_prompt_logprobs(choice: &Value) -> Result<TokenLogprobs, String> {
    let entries = choice
        .get("prompt_logprobs")
        .and_then(Value::as_array)
        .ok_or("choice has no prompt_logprobs array")?;
    let token_ids = choice.get("prompt_token_ids").and_then(Value::as_array);
    let mut tokens = Vec::with_capacity(entries.len());
    let mut logprobs = Vec::with_capacity(entries.len());
    for (pos, entry) in entries.iter().enumerate() {
        let Some(map) = entry.as_object() else {
            if entry.is_null() {
                tokens.push(String::new());
                logprobs.push(None);
                continue;
            }
            return Err(format!("prompt_logprobs[{pos}] is not an object"));
        };
        let chosen = if map.len() == 1 {
            map.values().next()
        } else {
            let id = token_ids
                .and_then(|ids| ids.get(pos))
                .map(|id| id.to_string())
                .ok_or(format!("prompt_logprobs[{pos}] is ambiguous without prompt_token_ids"))?;
            map.get(&id)
        }
        .ok_or(format!("prompt_logprobs[{pos}] has no entry for the prompt token"))?;
        let value = chosen
            .get("logprob")
            .and_then(Value::as_f64)
            .ok_or(format!("prompt_logprobs[{pos}] lacks a numeric logprob"))?;
        let token = chosen
            .get("decoded_token")
            .and_then(Value::as_str)
            .unwrap_or_default();
        tokens.push(token.to_owned());
        logprobs.push(Some(value));
    }
    Ok((tokens, logprobs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_grows_and_caps() {
        let policy = RetryPolicy {
            max_attempts: 5,
            initial_backoff_ms: 100,
            multiplier: 2.0,
            max_backoff_ms: 300,
        };
        let delays: Vec<u64> = (1..=4).map(|r| policy.backoff(r).as_millis() as u64).collect();
        assert_eq!(delays, vec![100, 200, 300, 300]);
    }

    #[test]
    fn echo_request_body() {
        let config = ProviderConfig::default();
        let body = config.request_body("Hello there");
        assert_eq!(
            body,
            json!({"model": "gpt2", "prompt": "Hello there", "max_tokens": 0, "echo": true, "logprobs": 0})
        );
    }

    #[test]
    fn parse_echo_payload() {
        let payload = json!({
            "model": "gpt2",
            "choices": [{"text": "a b c", "logprobs": {
                "tokens": ["a", " b", " c"],
                "token_logprobs": [null, -1.25, -0.5]
            }}]
        });
        let r = parse_response(&payload, &ProviderConfig::default(), "x").unwrap();
        assert_eq!(r.tokens, vec!["a", " b", " c"]);
        assert_eq!(r.logprobs, vec![None, Some(-1.25), Some(-0.5)]);
        assert!(!r.truncated);
    }

    #[test]
    fn parse_missing_logprobs_is_protocol_error() {
        let payload = json!({"choices": [{"text": "a b c"}]});
        assert!(parse_response(&payload, &ProviderConfig::default(), "x").is_err());
    }

    #[test]
    fn bos_prefix_is_stripped() {
        let config = ProviderConfig {
            bos_prefix: Some("<|endoftext|>".into()),
            ..ProviderConfig::default()
        };
        assert_eq!(config.request_body("hi")["prompt"], "<|endoftext|>hi");
        let payload = json!({"choices": [{"logprobs": {
            "tokens": ["<|endoftext|>", "hi"],
            "token_logprobs": [null, -3.0]
        }}]});
        let r = parse_response(&payload, &config, "x").unwrap();
        assert_eq!(r.tokens, vec!["hi"]);
        assert_eq!(r.logprobs, vec![Some(-3.0)]);
    }

    #[test]
    fn parse_prompt_logprobs_payload() {
        let config = ProviderConfig {
            profile: ProviderProfile::PromptLogprobs,
            ..ProviderConfig::default()
        };
        let payload = json!({"choices": [{
            "prompt_token_ids": [10, 11, 12],
            "prompt_logprobs": [
                null,
                {"11": {"logprob": -2.0, "rank": 3, "decoded_token": " b"}},
                {"12": {"logprob": -0.75, "rank": 1, "decoded_token": " c"},
                 "99": {"logprob": -0.5, "rank": 1, "decoded_token": " z"}}
            ]
        }]});
        let r = parse_response(&payload, &config, "x").unwrap();
        assert_eq!(r.tokens, vec!["", " b", " c"]);
        assert_eq!(r.logprobs, vec![None, Some(-2.0), Some(-0.75)]);
    }

    #[test]
    fn positive_logprob_from_server_is_rejected() {
        let payload = json!({"choices": [{"logprobs": {
            "tokens": ["a", "b"], "token_logprobs": [null, 0.01]
        }}]});
        assert!(parse_response(&payload, &ProviderConfig::default(), "x").is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = ProviderConfig::default();
        assert!(c.validate().is_ok());
        c.max_tokens_scored = 3;
        assert!(c.validate().is_err());
        c.max_tokens_scored = 1024;
        c.max_concurrency = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn secret_is_redacted() {
        let s = SecretString::new("sk-123");
        assert_eq!(format!("{s:?}"), "SecretString(***)");
    }
}
