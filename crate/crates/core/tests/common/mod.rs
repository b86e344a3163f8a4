//! Oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use blurmm::imgcore::Raster;
use blurmm::rng::{Purpose, RngSpec, Stream};

pub fn stream(seed: u64, tag: u64) -> Stream {
    RngSpec::new(seed).stream(Purpose::Shuffle(tag))
}

/// Pairwise AUC: every (positive, negative) pair scores 1, 0.5 on ties.
pub fn brute_auc(labels: &[u8], scores: &[f64]) -> f64 {
    let mut total = 0.0;
    let mut pairs = 0u64;
    for (i, &yi) in labels.iter().enumerate() {
        for (j, &yj) in labels.iter().enumerate() {
            if yi == 1 && yj == 0 {
                pairs += 1;
                total += if scores[i] > scores[j] {
                    1.0
                } else if scores[i] == scores[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    total / pairs as f64
}

/// Linear-interpolation percentile computed from scratch.
pub fn sort_percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = q * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Random binary labels with both classes present, scores drawn from a small
/// set so ties are common.
pub fn random_instance(s: &mut Stream, max_n: u64) -> (Vec<u8>, Vec<f64>) {
    loop {
        let n = 2 + s.below(max_n - 1) as usize;
        let levels = 1 + s.below(8);
        let labels: Vec<u8> = (0..n).map(|_| s.below(2) as u8).collect();
        let scores: Vec<f64> = (0..n).map(|_| s.below(levels) as f64 / 4.0).collect();
        if labels.contains(&0) && labels.contains(&1) {
            return (labels, scores);
        }
    }
}

/// Gray raster of white noise plus a few soft blobs, on the 0–255 scale.
pub fn textured(size: usize, s: &mut Stream) -> Raster {
    let blobs: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                s.next_f64() * size as f64,
                s.next_f64() * size as f64,
                4.0 + 8.0 * s.next_f64(),
                60.0 * (s.next_f64() - 0.5),
            )
        })
        .collect();
    let mut px = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            let mut v = 128.0 + 40.0 * (s.next_f64() - 0.5);
            for &(cx, cy, r, a) in &blobs {
                let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                v += a * (-d2 / (2.0 * r * r)).exp();
            }
            px.push(v);
        }
    }
    Raster::new(size, size, 1, px).unwrap()
}

/// Max absolute difference over pixels at least `margin` from every border.
pub fn interior_max_abs(a: &Raster, b: &Raster, margin: usize) -> f64 {
    let (w, h) = (a.width(), a.height());
    let mut worst = 0.0f64;
    for y in margin..h - margin {
        for x in margin..w - margin {
            worst = worst.max((a.get(x, y, 0) - b.get(x, y, 0)).abs());
        }
    }
    worst
}

/// Average ranks, ties sharing the mean of their positions.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let mean = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = mean;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}
