use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear-interpolation percentile on an ascending slice: `h = q·(n-1)`.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    match sorted.get(lo + 1) {
        Some(next) if frac > 0.0 => sorted[lo] + frac * (next - sorted[lo]),
        _ => sorted[lo],
    }
}

/// One slide's aggregated prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlideScore {
    pub slide_id: String,
    pub label: u8,
    pub value: f64,
    pub n_tiles: usize,
}

/// 75th percentile of the tile scores.
pub fn aggregate_slide(tile_scores: &[f64]) -> Result<f64> {
    if tile_scores.is_empty() {
        return Err(Error::domain("cannot aggregate a slide without tile scores"));
    }
    if tile_scores.iter().any(|s| s.is_nan()) {
        return Err(Error::domain("tile scores contain NaN"));
    }
    let mut sorted = tile_scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(percentile_sorted(&sorted, 0.75))
}

/// Area under the ROC curve as the Mann-Whitney statistic, ties counted half.
///
/// Pair counts are accumulated as integers, so the result is exact up to the final division.
pub fn auc(labels: &[u8], scores: &[f64]) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(Error::domain(format!(
            "{} labels for {} scores",
            labels.len(),
            scores.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::domain("scores contain NaN"));
    }
    let mut neg: Vec<f64> = Vec::new();
    let mut pos: Vec<f64> = Vec::new();
    for (&y, &s) in labels.iter().zip(scores) {
        match y {
            0 => neg.push(s),
            1 => pos.push(s),
            other => return Err(Error::domain(format!("label must be 0 or 1, got {other}"))),
        }
    }
    if neg.is_empty() || pos.is_empty() {
        return Err(Error::domain("AUC needs both classes"));
    }
    neg.sort_by(f64::total_cmp);
    let mut greater: u64 = 0;
    let mut ties: u64 = 0;
    for p in &pos {
        let below = neg.partition_point(|n| n < p);
        let not_above = neg.partition_point(|n| n <= p);
        greater += below as u64;
        ties += (not_above - below) as u64;
    }
    let pairs = (pos.len() * neg.len()) as f64;
    Ok((greater as f64 + 0.5 * ties as f64) / pairs)
}
