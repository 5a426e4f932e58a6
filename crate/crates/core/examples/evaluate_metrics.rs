//! AUROC and threshold metrics on a handful of scores.

use surprisal_detect::eval::{auroc, classification_report};

fn main() {
    let scores = [0.05, 0.2, 0.35, 0.35, 0.6, 0.7, 0.8, 0.95];
    let labels = [0, 0, 1, 0, 0, 1, 1, 1];
    println!("AUROC {:.4}", auroc(&scores, &labels).unwrap());
    for t in [0.3, 0.5, 0.75] {
        let r = classification_report(&scores, &labels, t).unwrap();
        println!("threshold {t}: {r}");
    }
    println!("{}", classification_report(&scores, &labels, 0.5).unwrap().to_json());
}
