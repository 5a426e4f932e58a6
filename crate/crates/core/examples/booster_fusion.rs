//! Booster mode: appends another detector's score to the diversity features.
//!
//! The extra score here is a noisy copy of the label, so the fused model
//! should lean on it. A constant score is shown for contrast.

use surprisal_detect::pipeline::{self, Dataset, RunManifest};
use surprisal_detect::provider::cache_write;
use surprisal_detect::synthetic::{self, SyntheticText};

fn scored(texts: &[SyntheticText], score: impl Fn(usize, &SyntheticText) -> f64) -> Dataset {
    let mut d = synthetic::dataset(texts);
    for (i, (e, t)) in d.examples.iter_mut().zip(texts).enumerate() {
        e.detector_scores.push(("radar".into(), score(i, t)));
    }
    d
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // every fourth human/machine pair trades surprisal, so those texts look
    // like the other class to the diversity features
    let mut train = synthetic::cohort(200, 3);
    for pair in train.chunks_mut(2).step_by(4) {
        let (h, m) = pair.split_at_mut(1);
        std::mem::swap(&mut h[0].surprisal, &mut m[0].surprisal);
    }
    let test = train.split_off(280);

    let dir = tempfile::tempdir()?;
    let cache = dir.path().join("logprobs.jsonl");
    cache_write(&synthetic::records(&train, "synthetic"), &cache, false)?;
    cache_write(&synthetic::records(&test, "synthetic"), &cache, true)?;
    let mut manifest = RunManifest::default();
    manifest.data.logprob_cache = Some(cache);

    let alone = pipeline::run_standalone(&synthetic::dataset(&train), &synthetic::dataset(&test), &manifest)?;
    println!("standalone:  AUROC {:.4}", alone.report.metrics.auroc);

    manifest.booster.scores = vec!["radar".into()];
    let noisy = |i: usize, t: &SyntheticText| f64::from(t.label) * 0.6 + ((i * 37) % 10) as f64 / 25.0;
    let fused = pipeline::run_boosted(&scored(&train, noisy), &scored(&test, noisy), &manifest)?;
    println!("with radar:  AUROC {:.4}", fused.report.metrics.auroc);
    println!("  blocks {:?}", fused.report.block_importance);

    // differs slightly from standalone: column sampling draws from ten columns
    let flat = pipeline::run_boosted(&scored(&train, |_, _| 0.5), &scored(&test, |_, _| 0.5), &manifest)?;
    println!("constant:    AUROC {:.4}", flat.report.metrics.auroc);
    println!("  blocks {:?}", flat.report.block_importance);
    Ok(())
}
