//! Stratified 5-fold splits with per-fold train/tuning partitions.
//!
//! ```bash
//! cargo run --example cv_splits
//! ```

use blurmm::routeval::cv_split;

fn main() -> blurmm::Result<()> {
    let slides: Vec<(String, u8)> = (0..916).map(|i| (format!("p{i:04}"), u8::from(i >= 363))).collect();
    let split = cv_split(&slides, 5, 42)?;
    let class1 = |ids: &[String]| ids.iter().filter(|id| split.labels[*id] == 1).count();
    println!("{:>4} {:>6} {:>6} {:>6} {:>10}", "fold", "train", "tune", "valid", "valid c1");
    for (k, f) in split.folds.iter().enumerate() {
        println!(
            "{k:>4} {:>6} {:>6} {:>6} {:>10}",
            f.train.len(),
            f.tuning.len(),
            f.validation.len(),
            class1(&f.validation)
        );
    }
    Ok(())
}
