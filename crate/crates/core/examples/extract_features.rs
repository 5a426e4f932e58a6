//! Turns a surprisal sequence into the nine diversity features.
//!
//! `cargo run --example extract_features`

use surprisal_detect::features::{extract, ExtractorConfig, FEATURE_NAMES};
use surprisal_detect::synthetic;

fn main() {
    let texts = synthetic::cohort(1, 7);
    let config = ExtractorConfig::default();
    for text in &texts {
        let v = extract(&text.surprisal, &config).expect("sequence long enough");
        println!("{} (label {}, {} tokens)", text.id, text.label, text.surprisal.len());
        for (name, value) in FEATURE_NAMES.iter().zip(v.to_array()) {
            println!("  {name:<12} {value:>10.5}");
        }
    }

    // a hand-written sequence, plus one that is too short to score
    let s = [2.1, 0.4, 5.3, 1.2, 0.9, 3.3, 0.2];
    println!("hand-written: {:?}", extract(&s, &config).unwrap());
    println!("too short: {}", extract(&s[..3], &config).unwrap_err());
}
