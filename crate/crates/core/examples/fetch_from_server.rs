//! Scores texts against a completions endpoint and caches the logprobs.
//!
//! With no arguments a tiny local server stands in for the language model.
//! To use a real one:
//!
//! ```text
//! SURPRISAL_API_KEY=... cargo run --example fetch_from_server -- http://host:8000/v1/completions gpt2
//! ```

use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};
use surprisal_detect::features::{extract, ExtractorConfig};
use surprisal_detect::provider::{
    cache_read, cache_write, fetch_logprobs_blocking, surprisal_from_record, ProviderConfig, SecretString,
    DEFAULT_MAX_TOKENS,
};

/// Whitespace tokens, logprob falls with word length.
async fn completions(Json(body): Json<Value>) -> Json<Value> {
    let prompt = body["prompt"].as_str().unwrap_or_default();
    let tokens: Vec<&str> = prompt.split_whitespace().collect();
    let logprobs: Vec<Value> = tokens
        .iter()
        .enumerate()
        .map(|(i, w)| if i == 0 { Value::Null } else { json!(-0.3 * w.len() as f64) })
        .collect();
    Json(json!({"choices": [{"text": prompt, "logprobs": {"tokens": tokens, "token_logprobs": logprobs}}]}))
}

fn local_server() -> String {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    listener.set_nonblocking(true).unwrap();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async {
            let listener = tokio::net::TcpListener::from_std(listener).unwrap();
            axum::serve(listener, Router::new().route("/v1/completions", post(completions)))
                .await
                .unwrap();
        });
    });
    format!("http://{addr}/v1/completions")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let endpoint_url = args.next().unwrap_or_else(local_server);
    let model_name = args.next().unwrap_or_else(|| "local".into());
    let config = ProviderConfig {
        endpoint_url,
        model_name,
        api_key: std::env::var("SURPRISAL_API_KEY").ok().map(SecretString::new),
        max_concurrency: 4,
        ..Default::default()
    };

    let texts: Vec<(String, String)> = [
        "the quick brown fox jumps over the lazy dog again and again",
        "colorless green ideas sleep furiously while tired engineers debug production",
        "a b c d e f g h i j k l m n o p",
    ]
    .iter()
    .enumerate()
    .map(|(i, t)| (format!("t{i}"), t.to_string()))
    .collect();

    let out = fetch_logprobs_blocking(&texts, &config)?;
    for f in &out.failures {
        eprintln!("{}: {} after {} attempts", f.id, f.cause, f.attempts);
    }

    let dir = tempfile::tempdir()?;
    let cache = dir.path().join("logprobs.jsonl");
    cache_write(&out.records, &cache, false)?;
    for record in cache_read(&cache, None)? {
        let s = surprisal_from_record(&record, DEFAULT_MAX_TOKENS)?;
        let v = extract(&s.values, &ExtractorConfig::default())?;
        println!("{}: {} tokens, mu_s {:.3}, var_s {:.3}", record.id, record.tokens.len(), v.mu_s, v.var_s);
    }
    Ok(())
}
