//! Tile predictors: a closed-form analytic surrogate, a trainable feature model and
//! an external subprocess adapter.

mod analytic;
mod external;
mod features;

pub use analytic::{analytic_predict, default_analytic_roster, solve_analytic_params, AnalyticSpec, RosterParams};
pub use external::{external_predict, ExternalSpec, PredictRequest, PredictResponse};
pub use features::{
    extract_features, feature_predict, logistic_gradient, logistic_loss, train_feature_model,
    FeatureModelSpec, TrainHyperparams, TrainingSet, FEATURE_COUNT,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Logistic sigmoid, stable for large `|x|`.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// One configured predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredictorSpec {
    Analytic(AnalyticSpec),
    FeatureModel(FeatureModelSpec),
    External(ExternalSpec),
}

impl PredictorSpec {
    pub fn model_id(&self) -> &str {
        match self {
            PredictorSpec::Analytic(s) => &s.model_id,
            PredictorSpec::FeatureModel(s) => &s.model_id,
            PredictorSpec::External(s) => &s.model_id,
        }
    }

    /// Whether scoring reads tile pixels.
    pub fn needs_pixels(&self) -> bool {
        !matches!(self, PredictorSpec::Analytic(_))
    }

    /// Whether scoring needs the tile as a file on disk.
    pub fn needs_files(&self) -> bool {
        matches!(self, PredictorSpec::External(_))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PredictorSpec::Analytic(s) => s.validate(),
            PredictorSpec::FeatureModel(s) => s.validate(),
            PredictorSpec::External(s) => {
                if s.command.is_empty() {
                    Err(Error::Config(format!("predictor {}: empty command", s.model_id)))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// A tile-level prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub tile_id: String,
    pub model_id: String,
    pub value: f64,
}

pub(crate) fn check_score(value: f64, what: impl FnOnce() -> String) -> Result<f64> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::domain(format!("{}: score {value} outside [0, 1]", what())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logistic_values() {
        assert_eq!(logistic(0.0), 0.5);
        assert!((logistic(2.0) - 0.880_797_077_977_882_3).abs() < 1e-15);
        assert!((logistic(-2.0) + logistic(2.0) - 1.0).abs() < 1e-15);
        assert_eq!(logistic(-1000.0), 0.0);
        assert_eq!(logistic(1000.0), 1.0);
    }

    #[test]
    fn predictor_json_is_tagged() {
        let spec = PredictorSpec::External(ExternalSpec {
            model_id: "cnn".into(),
            command: vec!["python3".into(), "serve.py".into()],
        });
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(json, r#"{"kind":"external","model_id":"cnn","command":["python3","serve.py"]}"#);
        assert_eq!(serde_json::from_str::<PredictorSpec>(&json).unwrap(), spec);
        assert!(spec.needs_files() && spec.needs_pixels());
        let bad = r#"{"kind":"external","model_id":"cnn","command":[],"extra":1}"#;
        assert!(serde_json::from_str::<PredictorSpec>(bad).is_err());
    }
}
