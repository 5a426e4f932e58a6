//! Compares surprisal mean and variance between the two cohorts.

use std::collections::HashMap;

use surprisal_detect::features::ExtractorConfig;
use surprisal_detect::pipeline::{diagnose, FeatureTable, DEFAULT_HISTOGRAM_BINS};
use surprisal_detect::provider::DEFAULT_MAX_TOKENS;
use surprisal_detect::synthetic;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let texts = synthetic::cohort(200, 11);
    let records: HashMap<_, _> = synthetic::records(&texts, "synthetic")
        .into_iter()
        .map(|r| (r.id.clone(), r))
        .collect();
    let table = FeatureTable::build(
        &synthetic::dataset(&texts),
        &records,
        &ExtractorConfig::default(),
        DEFAULT_MAX_TOKENS,
        &[],
    )?;
    let report = diagnose(&table, DEFAULT_HISTOGRAM_BINS)?;
    for c in [&report.human, &report.machine] {
        println!(
            "{:<8} mu_s mean {:.3} median {:.3}   var_s mean {:.3} median {:.3}",
            if c.label == synthetic::HUMAN { "human" } else { "machine" }, c.mu_s.mean, c.mu_s.median, c.var_s.mean, c.var_s.median
        );
    }
    let h = &report.var_s_histogram;
    println!("var_s histogram");
    for i in 0..h.human.len() {
        println!(
            "  [{:>7.3}, {:>7.3})  human {:>3}  machine {:>3}",
            h.edges[i], h.edges[i + 1], h.human[i], h.machine[i]
        );
    }
    Ok(())
}
