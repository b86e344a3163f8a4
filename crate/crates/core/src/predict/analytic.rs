use serde::{Deserialize, Serialize};

use super::{check_score, logistic, PredictorSpec, Score};
use crate::corpus::TileRecord;
use crate::error::{Error, Result};
use crate::rng::{hash_str, Purpose, RngSpec};

/// Closed-form predictor with discriminability `d(σ) = c·exp(-σ/λ)`.
///
/// The score of a tile is `logistic(d(ĝ)·(2·label - 1) + ε)` with
/// `ε ~ N(0, noise_sd²)` drawn from the tile's stream for this model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticSpec {
    pub model_id: String,
    pub c: f64,
    pub lambda: f64,
    pub noise_sd: f64,
}

impl AnalyticSpec {
    pub fn discriminability(&self, sigma: f64) -> f64 {
        self.c * (-sigma / self.lambda).exp()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0)
            || !(self.lambda.is_finite() && self.lambda > 0.0)
            || !(self.noise_sd.is_finite() && self.noise_sd >= 0.0)
        {
            return Err(Error::Config(format!(
                "analytic predictor {}: need c > 0, lambda > 0, noise_sd >= 0",
                self.model_id
            )));
        }
        Ok(())
    }
}

/// Amplitudes that make adjacent models tie exactly at each crossover σ.
///
/// Model `m + 1` gets `c[m+1] = c[m]·exp(σ*·(1/λ[m+1] - 1/λ[m]))`.
pub fn solve_analytic_params(
    model_ids: &[&str],
    base_c: f64,
    lambdas: &[f64],
    crossovers: &[f64],
    noise_sd: f64,
) -> Result<Vec<AnalyticSpec>> {
    if lambdas.is_empty() || model_ids.len() != lambdas.len() {
        return Err(Error::domain("need one model id per lambda"));
    }
    if crossovers.len() + 1 != lambdas.len() {
        return Err(Error::domain("need exactly one crossover per additional model"));
    }
    if lambdas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("lambdas must be strictly increasing"));
    }
    if crossovers.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("crossovers must be strictly increasing"));
    }
    let mut specs = Vec::with_capacity(lambdas.len());
    let mut c = base_c;
    for (m, (&id, &lambda)) in model_ids.iter().zip(lambdas).enumerate() {
        if m > 0 {
            let star = crossovers[m - 1];
            c *= (star * (1.0 / lambda - 1.0 / lambdas[m - 1])).exp();
        }
        let spec = AnalyticSpec {
            model_id: id.to_string(),
            c,
            lambda,
            noise_sd,
        };
        spec.validate()?;
        specs.push(spec);
    }
    Ok(specs)
}

/// Knobs for the default three-model analytic roster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RosterParams {
    pub model_ids: Vec<String>,
    pub base_c: f64,
    pub lambdas: Vec<f64>,
    pub crossovers: Vec<f64>,
    pub noise_sd: f64,
}

impl Default for RosterParams {
    fn default() -> Self {
        Self {
            model_ids: vec!["base".into(), "m05".into(), "m10".into()],
            base_c: 2.0,
            lambdas: vec![1.0, 4.0, 40.0],
            crossovers: vec![1.5, 6.0],
            noise_sd: 1.0,
        }
    }
}

impl RosterParams {
    pub fn build(&self) -> Result<Vec<PredictorSpec>> {
        let ids: Vec<&str> = self.model_ids.iter().map(String::as_str).collect();
        Ok(
            solve_analytic_params(&ids, self.base_c, &self.lambdas, &self.crossovers, self.noise_sd)?
                .into_iter()
                .map(PredictorSpec::Analytic)
                .collect(),
        )
    }
}

/// The default analytic roster (`base`, `m05`, `m10`) crossing at σ = 1.5 and 6.0.
pub fn default_analytic_roster() -> Vec<PredictorSpec> {
    RosterParams::default().build().expect("default roster is valid")
}

/// Scores one tile. Deterministic in `(master seed, slide, ordinal, model id)`.
pub fn analytic_predict(record: &TileRecord, ordinal: u64, spec: &AnalyticSpec, rng: &RngSpec) -> Result<Score> {
    let g_hat = record
        .g_hat
        .ok_or_else(|| Error::domain(format!("tile {} has no recorded blur level", record.tile_id)))?;
    let sign = if record.label == 1 { 1.0 } else { -1.0 };
    let noise = if spec.noise_sd > 0.0 {
        let mut stream = rng.tile_stream(
            &record.slide_id,
            ordinal,
            Purpose::Predictor(hash_str(&spec.model_id)),
        );
        spec.noise_sd * stream.next_normal()
    } else {
        0.0
    };
    let value = logistic(spec.discriminability(g_hat) * sign + noise);
    let value = check_score(value, || format!("tile {}", record.tile_id))?;
    Ok(Score {
        tile_id: record.tile_id.clone(),
        model_id: spec.model_id.clone(),
        value,
    })
}
