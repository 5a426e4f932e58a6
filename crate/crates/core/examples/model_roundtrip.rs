//! Saves a model to JSON, loads it back, and checks predictions match bit
//! for bit.

use surprisal_detect::gbdt::{self, GbdtParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rows: Vec<Vec<f64>> = (0..200)
        .map(|i| {
            let x = i as f64 / 20.0;
            vec![x, (x * 1.7).sin(), (i % 13) as f64]
        })
        .collect();
    let labels: Vec<u8> = rows.iter().map(|r| u8::from(r[0] + r[1] > 5.0)).collect();
    let names = ["x".to_string(), "wave".to_string(), "noise".to_string()];
    let params = GbdtParams {
        n_estimators: 40,
        max_depth: 4,
        ..Default::default()
    };
    let model = gbdt::train(&rows, &labels, &names, &params)?;

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("model.json");
    gbdt::save(&model, &path)?;
    let loaded = gbdt::load(&path)?;

    let a = gbdt::predict_proba(&model, &rows)?;
    let b = gbdt::predict_proba(&loaded, &rows)?;
    let same = a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits());
    println!("{} bytes, {} trees, identical predictions: {same}", std::fs::metadata(&path)?.len(), loaded.trees.len());

    std::fs::write(&path, "{\"format_version\": 2}")?;
    println!("bad file: {}", gbdt::load(&path).unwrap_err());
    Ok(())
}
