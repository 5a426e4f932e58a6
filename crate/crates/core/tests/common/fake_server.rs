//! A local completions endpoint with scripted failures.
//!
//! Prompts are split on whitespace into tokens. The first token gets a null
//! logprob and token `i` gets [`fake_logprob`]`(i)`. Prompt prefixes select
//! behavior:
//!
//! - `FAIL500` answers 500 every time
//! - `FLAKY` answers 503 to the first two attempts, then succeeds
//! - `NOLOGPROBS` answers 200 without a logprobs object

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};

pub fn fake_logprob(i: usize) -> f64 {
    -(0.5 + (i % 7) as f64 * 0.25)
}

#[derive(Default)]
pub struct Stats {
    pub in_flight: AtomicUsize,
    pub max_in_flight: AtomicUsize,
    pub requests: AtomicUsize,
    attempts: Mutex<HashMap<String, usize>>,
    /// Arrival times of attempts per prompt.
    pub arrivals: Mutex<HashMap<String, Vec<Instant>>>,
    pub auth: Mutex<Vec<Option<String>>>,
    pub delay: Duration,
}

pub struct FakeServer {
    pub addr: SocketAddr,
    pub stats: Arc<Stats>,
}

impl FakeServer {
    pub fn url(&self) -> String {
        format!("http://{}/v1/completions", self.addr)
    }
}

struct Guard<'a>(&'a Stats);

impl Drop for Guard<'_> {
    fn drop(&mut self) {
        self.0.in_flight.fetch_sub(1, Ordering::SeqCst);
    }
}

async fn completions(State(stats): State<Arc<Stats>>, headers: HeaderMap, Json(body): Json<Value>) -> (StatusCode, Json<Value>) {
    let now = stats.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    let _guard = Guard(&stats);
    stats.max_in_flight.fetch_max(now, Ordering::SeqCst);
    stats.requests.fetch_add(1, Ordering::SeqCst);
    stats.auth.lock().unwrap().push(
        headers
            .get("authorization")
            .and_then(|v| v.to_str().ok())
            .map(str::to_owned),
    );
    let prompt = body["prompt"].as_str().unwrap_or_default().to_owned();
    let attempt = {
        let mut attempts = stats.attempts.lock().unwrap();
        let n = attempts.entry(prompt.clone()).or_default();
        *n += 1;
        *n
    };
    stats
        .arrivals
        .lock()
        .unwrap()
        .entry(prompt.clone())
        .or_default()
        .push(Instant::now());
    tokio::time::sleep(stats.delay).await;

    if prompt.starts_with("FAIL500") {
        return (StatusCode::INTERNAL_SERVER_ERROR, Json(json!({"error": "boom"})));
    }
    if prompt.starts_with("FLAKY") && attempt <= 2 {
        return (StatusCode::SERVICE_UNAVAILABLE, Json(json!({"error": "busy"})));
    }
    if prompt.starts_with("NOLOGPROBS") {
        return (StatusCode::OK, Json(json!({"choices": [{"text": ""}]})));
    }
    let words: Vec<&str> = prompt.split_whitespace().collect();
    let model = body["model"].clone();
    if body.get("prompt_logprobs").is_some() {
        let ids: Vec<usize> = (0..words.len()).map(|i| 1000 + i).collect();
        let entries: Vec<Value> = words
            .iter()
            .enumerate()
            .map(|(i, w)| {
                if i == 0 {
                    return Value::Null;
                }
                // a runner-up alternative forces disambiguation by token id
                json!({
                    ids[i].to_string(): {"logprob": fake_logprob(i), "decoded_token": w},
                    "7": {"logprob": -9.0, "decoded_token": "alt"},
                })
            })
            .collect();
        return (
            StatusCode::OK,
            Json(json!({"model": model, "choices": [{"prompt_logprobs": entries, "prompt_token_ids": ids}]})),
        );
    }
    let logprobs: Vec<Value> = (0..words.len())
        .map(|i| if i == 0 { Value::Null } else { json!(fake_logprob(i)) })
        .collect();
    (
        StatusCode::OK,
        Json(json!({
            "model": model,
            "choices": [{"text": prompt, "logprobs": {"tokens": words, "token_logprobs": logprobs}}],
        })),
    )
}

/// Starts a server on an ephemeral port in a background thread.
pub fn start(delay: Duration) -> FakeServer {
    let stats = Arc::new(Stats {
        delay,
        ..Default::default()
    });
    let (tx, rx) = std::sync::mpsc::channel();
    let state = stats.clone();
    std::thread::spawn(move || {
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(4)
            .enable_all()
            .build()
            .unwrap();
        runtime.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            let app = Router::new().route("/v1/completions", post(completions)).with_state(state);
            axum::serve(listener, app).await.unwrap();
        });
    });
    FakeServer {
        addr: rx.recv().unwrap(),
        stats,
    }
}

/// A URL on a port nothing listens on.
pub fn unreachable_url() -> String {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    format!("http://{addr}/v1/completions")
}

/// `n` whitespace-separated words.
pub fn words(n: usize) -> String {
    (0..n).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ")
}
