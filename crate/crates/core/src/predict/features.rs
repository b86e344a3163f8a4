use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_score, logistic};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::imgcore::{gaussian_blur, laplacian_variance, Raster};
use crate::imgcore::reflect101;

pub const FEATURE_COUNT: usize = 4;

/// `[gray mean, gray standard deviation, ln(1 + LV), mean central-difference gradient magnitude]`.
pub fn extract_features(raster: &Raster) -> [f64; FEATURE_COUNT] {
    let gray = raster.to_grayscale();
    let px = gray.pixels();
    if px.is_empty() {
        return [0.0; FEATURE_COUNT];
    }
    let n = px.len() as f64;
    let mean = px.iter().sum::<f64>() / n;
    let sd = (px.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    let lv = laplacian_variance(&gray).unwrap_or(0.0);

    let (w, h) = (gray.width(), gray.height());
    let mut grad = 0.0;
    for y in 0..h {
        let up = reflect101(y as isize - 1, h);
        let down = reflect101(y as isize + 1, h);
        for x in 0..w {
            let left = reflect101(x as isize - 1, w);
            let right = reflect101(x as isize + 1, w);
            let gx = 0.5 * (px[y * w + right] - px[y * w + left]);
            let gy = 0.5 * (px[down * w + x] - px[up * w + x]);
            grad += gx.hypot(gy);
        }
    }
    [mean, sd, lv.ln_1p(), grad / n]
}

/// Frozen logistic model over standardized features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureModelSpec {
    pub model_id: String,
    pub weights: [f64; FEATURE_COUNT],
    pub bias: f64,
    pub feature_means: [f64; FEATURE_COUNT],
    pub feature_sds: [f64; FEATURE_COUNT],
    /// Blur applied to the training tiles.
    pub train_sigma: f64,
}

impl FeatureModelSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = self.weights.iter().chain(&self.feature_means).all(|v| v.is_finite())
            && self.bias.is_finite();
        if !finite || self.feature_sds.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Config(format!(
                "feature model {}: weights must be finite and feature_sds positive",
                self.model_id
            )));
        }
        Ok(())
    }

    pub fn standardize(&self, x: &[f64; FEATURE_COUNT]) -> [f64; FEATURE_COUNT] {
        let mut z = [0.0; FEATURE_COUNT];
        for j in 0..FEATURE_COUNT {
            z[j] = (x[j] - self.feature_means[j]) / self.feature_sds[j];
        }
        z
    }

    pub fn score_features(&self, x: &[f64; FEATURE_COUNT]) -> f64 {
        let z = self.standardize(x);
        let logit: f64 = self.weights.iter().zip(&z).map(|(w, v)| w * v).sum::<f64>() + self.bias;
        logistic(logit)
    }
}

/// Scores a tile's pixels.
pub fn feature_predict(raster: &Raster, spec: &FeatureModelSpec) -> Result<f64> {
    check_score(spec.score_features(&extract_features(raster)), || {
        format!("feature model {}", spec.model_id)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainHyperparams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for TrainHyperparams {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 500,
            l2: 1e-4,
        }
    }
}

/// Standardized feature rows with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub features: Vec<[f64; FEATURE_COUNT]>,
    pub labels: Vec<u8>,
}

/// Mean cross-entropy plus `l2/2·|w|²` (the bias is not penalized).
pub fn logistic_loss(weights: &[f64; FEATURE_COUNT], bias: f64, set: &TrainingSet, l2: f64) -> f64 {
    let n = set.features.len() as f64;
    let data: f64 = set
        .features
        .iter()
        .zip(&set.labels)
        .map(|(x, &y)| {
            let z: f64 = weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + bias;
            // log(1 + e^z) - y z, written to avoid overflow
            let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
            softplus - f64::from(y) * z
        })
        .sum();
    data / n + 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>()
}

/// Gradient of [`logistic_loss`]: `(∂/∂w, ∂/∂b)`.
pub fn logistic_gradient(
    weights: &[f64; FEATURE_COUNT],
    bias: f64,
    set: &TrainingSet,
    l2: f64,
) -> ([f64; FEATURE_COUNT], f64) {
    let n = set.features.len() as f64;
    let mut gw = [0.0; FEATURE_COUNT];
    let mut gb = 0.0;
    for (x, &y) in set.features.iter().zip(&set.labels) {
        let z: f64 = weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + bias;
        let r = logistic(z) - f64::from(y);
        for j in 0..FEATURE_COUNT {
            gw[j] += r * x[j];
        }
        gb += r;
    }
    for j in 0..FEATURE_COUNT {
        gw[j] = gw[j] / n + l2 * weights[j];
    }
    (gw, gb / n)
}

/// Full-batch gradient descent from zero weights.
pub fn fit_logistic(set: &TrainingSet, hp: &TrainHyperparams) -> ([f64; FEATURE_COUNT], f64) {
    let mut w = [0.0; FEATURE_COUNT];
    let mut b = 0.0;
    for _ in 0..hp.epochs {
        let (gw, gb) = logistic_gradient(&w, b, set, hp.l2);
        for j in 0..FEATURE_COUNT {
            w[j] -= hp.learning_rate * gw[j];
        }
        b -= hp.learning_rate * gb;
    }
    (w, b)
}

/// Standardization constants; constant features get unit scale.
pub fn standardization(rows: &[[f64; FEATURE_COUNT]]) -> ([f64; FEATURE_COUNT], [f64; FEATURE_COUNT]) {
    let n = rows.len() as f64;
    let mut mean = [0.0; FEATURE_COUNT];
    let mut sd = [0.0; FEATURE_COUNT];
    for j in 0..FEATURE_COUNT {
        mean[j] = rows.iter().map(|r| r[j]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
        sd[j] = if var > 0.0 { var.sqrt() } else { 1.0 };
    }
    (mean, sd)
}

/// Fits a model on raw feature rows (standardizing them first).
pub fn fit_feature_model(
    model_id: &str,
    rows: &[[f64; FEATURE_COUNT]],
    labels: &[u8],
    train_sigma: f64,
    hp: &TrainHyperparams,
) -> Result<FeatureModelSpec> {
    if rows.len() != labels.len() || rows.is_empty() {
        return Err(Error::domain("training set is empty or ragged"));
    }
    if !(labels.contains(&0) && labels.contains(&1)) {
        return Err(Error::domain("training set must contain both classes"));
    }
    let (feature_means, feature_sds) = standardization(rows);
    let proto = FeatureModelSpec {
        model_id: model_id.to_string(),
        weights: [0.0; FEATURE_COUNT],
        bias: 0.0,
        feature_means,
        feature_sds,
        train_sigma,
    };
    let set = TrainingSet {
        features: rows.iter().map(|r| proto.standardize(r)).collect(),
        labels: labels.to_vec(),
    };
    let (weights, bias) = fit_logistic(&set, hp);
    let spec = FeatureModelSpec { weights, bias, ..proto };
    spec.validate()?;
    Ok(spec)
}

/// Blurs every tile at `train_sigma`, extracts features and fits the model.
pub fn train_feature_model(
    model_id: &str,
    corpus: &Corpus,
    train_sigma: f64,
    hp: &TrainHyperparams,
) -> Result<FeatureModelSpec> {
    let labels: Vec<u8> = corpus.records().iter().map(|r| r.label).collect();
    if !(labels.contains(&0) && labels.contains(&1)) {
        return Err(Error::domain("training corpus must contain both classes"));
    }
    let rows: Vec<[f64; FEATURE_COUNT]> = (0..corpus.len())
        .into_par_iter()
        .map(|i| Ok(extract_features(&gaussian_blur(&corpus.load(i)?, train_sigma)?)))
        .collect::<Result<_>>()?;
    fit_feature_model(model_id, &rows, &labels, train_sigma, hp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    #[test]
    fn constant_raster_features() {
        let f = extract_features(&Raster::filled(8, 8, 90.0));
        assert_eq!(f, [90.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn gradient_of_ramp() {
        let px = (0..36).map(|i| 2.0 * (i % 6) as f64).collect();
        let f = extract_features(&Raster::new(6, 6, 1, px).unwrap());
        // interior columns have |gx| = 2, the two border columns reflect to 0
        assert!((f[3] - 2.0 * 4.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn zero_model_scores_half() {
        let spec = FeatureModelSpec {
            model_id: "z".into(),
            weights: [0.0; 4],
            bias: 0.0,
            feature_means: [0.0; 4],
            feature_sds: [1.0; 4],
            train_sigma: 0.0,
        };
        let mut s = Stream::from_state(1);
        let px = (0..100).map(|_| s.next_f64() * 255.0).collect();
        let r = Raster::new(10, 10, 1, px).unwrap();
        assert_eq!(feature_predict(&r, &spec).unwrap(), 0.5);
        assert_eq!(feature_predict(&r, &spec).unwrap(), feature_predict(&r, &spec).unwrap());
    }

    #[test]
    fn single_class_is_rejected() {
        let rows = vec![[1.0, 2.0, 3.0, 4.0]; 3];
        assert!(fit_feature_model("m", &rows, &[1, 1, 1], 0.0, &TrainHyperparams::default()).is_err());
    }

    #[test]
    fn separable_toy_set_is_ranked_perfectly() {
        let mut s = Stream::from_state(17);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..200 {
            let y = (i % 2) as u8;
            let shift = if y == 1 { 3.0 } else { -3.0 };
            rows.push([shift + s.next_f64(), s.next_f64(), 10.0 * s.next_f64(), s.next_f64()]);
            labels.push(y);
        }
        let spec = fit_feature_model("m", &rows, &labels, 0.0, &TrainHyperparams::default()).unwrap();
        let scores: Vec<f64> = rows.iter().map(|r| spec.score_features(r)).collect();
        assert_eq!(crate::routeval::auc(&labels, &scores).unwrap(), 1.0);
    }

    #[test]
    fn permuted_labels_give_chance_auc() {
        let mut s = Stream::from_state(23);
        let rows: Vec<[f64; 4]> = (0..2000)
            .map(|_| [s.next_normal(), s.next_normal(), s.next_normal(), s.next_normal()])
            .collect();
        let labels: Vec<u8> = (0..2000).map(|_| s.below(2) as u8).collect();
        let spec = fit_feature_model("m", &rows, &labels, 0.0, &TrainHyperparams::default()).unwrap();
        let scores: Vec<f64> = rows.iter().map(|r| spec.score_features(r)).collect();
        let a = crate::routeval::auc(&labels, &scores).unwrap();
        assert!((a - 0.5).abs() < 0.1, "auc {a}");
    }
}
