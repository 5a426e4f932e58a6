//! Trains the standalone detector on a synthetic cohort and reports test
//! metrics.
//!
//! `cargo run --release --example train_standalone -- [per_class] [seed]`

use surprisal_detect::pipeline::{self, RunManifest};
use surprisal_detect::provider::cache_write;
use surprisal_detect::synthetic;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let per_class: usize = args.next().map(|a| a.parse()).transpose()?.unwrap_or(300);
    let seed: u64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(1);

    let mut texts = synthetic::cohort(per_class, seed);
    let test = texts.split_off(texts.len() * 7 / 10);

    // the pipeline reads surprisal from a logprob cache, so write one
    let dir = tempfile::tempdir()?;
    let cache = dir.path().join("logprobs.jsonl");
    cache_write(&synthetic::records(&texts, "synthetic"), &cache, false)?;
    cache_write(&synthetic::records(&test, "synthetic"), &cache, true)?;

    let mut manifest = RunManifest::default();
    manifest.data.logprob_cache = Some(cache);
    let out = pipeline::run_standalone(&synthetic::dataset(&texts), &synthetic::dataset(&test), &manifest)?;

    println!("train rows {}, test rows {}", out.report.n_train_used, out.report.n_test_used);
    println!("{}", out.report.metrics);
    println!("trees {}", out.model.trees.len());
    Ok(())
}
