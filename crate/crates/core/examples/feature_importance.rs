//! Gain-based importance per feature and per feature block.

use surprisal_detect::features::FEATURE_NAMES;
use surprisal_detect::gbdt::{self, GbdtParams};
use surprisal_detect::pipeline::BlockImportance;
use surprisal_detect::synthetic;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (title, texts) in [
        ("distribution differs", synthetic::cohort(200, 5)),
        ("only ordering differs", synthetic::temporal_only_cohort(200, 5)),
    ] {
        let rows: Vec<[f64; 9]> = texts
            .iter()
            .map(|t| surprisal_detect::features::extract(&t.surprisal, &Default::default()).map(|v| v.to_array()))
            .collect::<Result<_, _>>()?;
        let labels: Vec<u8> = texts.iter().map(|t| t.label).collect();
        let names: Vec<String> = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
        let model = gbdt::train(&rows, &labels, &names, &GbdtParams::default())?;
        let importance = gbdt::feature_importance(&model);

        println!("{title}");
        for (name, value) in &importance {
            println!("  {name:<12} {value:.4}");
        }
        println!("  {:?}", BlockImportance::from_importance(&importance));
    }
    Ok(())
}
