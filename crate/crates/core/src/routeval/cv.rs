use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{Purpose, RngSpec};

/// Fraction of each fold's non-validation slides held out for tuning.
const TUNING_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvFold {
    pub train: Vec<String>,
    pub tuning: Vec<String>,
    pub validation: Vec<String>,
}

/// Slide-level stratified k-fold split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSplit {
    pub k: usize,
    pub folds: Vec<CvFold>,
    pub labels: BTreeMap<String, u8>,
}

/// Stratified folds: each class is shuffled by `seed` and dealt round-robin into the
/// validation folds, continuing the deal where the previous class stopped. Within a
/// fold the remaining slides of each class split 80/20 into train and tuning.
pub fn cv_split(slides: &[(String, u8)], k: usize, seed: u64) -> Result<CvSplit> {
    if k < 2 {
        return Err(Error::domain(format!("need k >= 2 folds, got {k}")));
    }
    let labels: BTreeMap<String, u8> = slides.iter().cloned().collect();
    if labels.len() != slides.len() {
        return Err(Error::domain("duplicate slide ids"));
    }
    let mut classes: BTreeMap<u8, Vec<String>> = BTreeMap::new();
    for (id, label) in &labels {
        classes.entry(*label).or_default().push(id.clone());
    }
    for (label, ids) in &classes {
        if ids.len() < k {
            return Err(Error::domain(format!(
                "class {label} has {} slides, fewer than k = {k}",
                ids.len()
            )));
        }
    }
    let rng = RngSpec::new(seed);
    let mut shuffled: BTreeMap<u8, Vec<String>> = BTreeMap::new();
    for (label, mut ids) in classes {
        rng.stream(Purpose::Shuffle(0xCF00 + u64::from(label))).shuffle(&mut ids);
        shuffled.insert(label, ids);
    }

    let mut fold_of: BTreeMap<&str, usize> = BTreeMap::new();
    let mut next = 0usize;
    for ids in shuffled.values() {
        for id in ids {
            fold_of.insert(id, next % k);
            next += 1;
        }
    }

    let folds = (0..k)
        .map(|f| {
            let mut fold = CvFold { train: Vec::new(), tuning: Vec::new(), validation: Vec::new() };
            for ids in shuffled.values() {
                let rest: Vec<&String> = ids.iter().filter(|id| fold_of[id.as_str()] != f).collect();
                let n_tuning = (TUNING_FRACTION * rest.len() as f64).round() as usize;
                fold.tuning.extend(rest[..n_tuning].iter().map(|s| s.to_string()));
                fold.train.extend(rest[n_tuning..].iter().map(|s| s.to_string()));
                fold.validation
                    .extend(ids.iter().filter(|id| fold_of[id.as_str()] == f).cloned());
            }
            fold.train.sort();
            fold.tuning.sort();
            fold.validation.sort();
            fold
        })
        .collect();
    Ok(CvSplit { k, folds, labels })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slides(n0: usize, n1: usize) -> Vec<(String, u8)> {
        (0..n0 + n1)
            .map(|i| (format!("p{i:04}"), u8::from(i >= n0)))
            .collect()
    }

    #[test]
    fn exact_divisibility() {
        let split = cv_split(&slides(5, 5), 5, 1).unwrap();
        for fold in &split.folds {
            let ones = fold.validation.iter().filter(|s| split.labels[*s] == 1).count();
            assert_eq!((fold.validation.len(), ones), (2, 1));
        }
    }

    #[test]
    fn cohort_sized_fold_sizes() {
        let split = cv_split(&slides(363, 553), 5, 7).unwrap();
        let mut sizes: Vec<usize> = split.folds.iter().map(|f| f.validation.len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![183, 183, 183, 183, 184]);
    }

    #[test]
    fn too_small_class() {
        assert!(cv_split(&slides(2, 10), 3, 0).is_err());
        assert!(cv_split(&slides(5, 5), 1, 0).is_err());
    }
}
