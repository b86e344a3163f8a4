//! Run configuration: one TOML file drives every command.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::blursim::{default_groups, scenario_table, sigma_grid, BlurGroup, Scenario};
use crate::calib::{ThresholdPolicy, DEFAULT_CURVE_SAMPLE};
use crate::error::{Error, Result};
use crate::imgcore::TileFilter;
use crate::predict::{PredictorSpec, RosterParams, TrainHyperparams};
use crate::synth::CorpusSpec;

/// A flat raster to cut into tiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterInput {
    pub path: PathBuf,
    pub slide_id: String,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    /// Existing tile manifest; when absent the synthetic corpus is used.
    pub manifest: Option<PathBuf>,
    /// Flat rasters for `gen-corpus` to tile instead of synthesizing.
    pub rasters: Vec<RasterInput>,
    pub tiling: TileFilter,
    pub synthetic: CorpusSpec,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            manifest: None,
            rasters: Vec::new(),
            tiling: TileFilter::default(),
            synthetic: CorpusSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlurConfig {
    /// Fixed-σ sweep levels; σ = 0 is always added.
    pub sigmas: Vec<f64>,
    pub groups: [BlurGroup; 3],
    pub scenarios: Vec<Scenario>,
}

impl Default for BlurConfig {
    fn default() -> Self {
        Self {
            sigmas: sigma_grid(),
            groups: default_groups(),
            scenarios: scenario_table(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationConfig {
    pub sample_size: usize,
    /// σ levels of the LV curve; must start at 0.
    pub curve_sigmas: Vec<f64>,
    /// Explicit σ cut-offs; when absent they come from the shipped slide-level AUC table.
    pub sigma_cutoffs: Option<[f64; 2]>,
    pub cutoff_margin: f64,
    pub theta_sharp: f64,
    /// Explicit LV thresholds; when absent they are derived from the LV curve.
    pub thresholds: Option<ThresholdPolicy>,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        let mut curve_sigmas = vec![0.0];
        curve_sigmas.extend(sigma_grid());
        Self {
            sample_size: DEFAULT_CURVE_SAMPLE,
            curve_sigmas,
            sigma_cutoffs: None,
            cutoff_margin: crate::calib::DEFAULT_CUTOFF_MARGIN,
            theta_sharp: 500.0,
            thresholds: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RosterSource {
    /// Closed-form predictors from `roster.analytic`.
    Analytic,
    /// Feature models trained at `roster.train` σ levels.
    Trained,
    /// Predictor specs read from `roster.file` (JSON array).
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTarget {
    pub model_id: String,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RosterConfig {
    pub source: RosterSource,
    pub analytic: RosterParams,
    pub train: Vec<TrainTarget>,
    pub hyperparams: TrainHyperparams,
    pub file: Option<PathBuf>,
    /// Band models ordered sharp → blurry; the first is the base model.
    pub routing: Vec<String>,
}

impl Default for RosterConfig {
    fn default() -> Self {
        let ids = ["base", "m05", "m10"];
        Self {
            source: RosterSource::Analytic,
            analytic: RosterParams::default(),
            train: ids
                .iter()
                .zip([0.0, 0.5, 1.0])
                .map(|(id, sigma)| TrainTarget { model_id: id.to_string(), sigma })
                .collect(),
            hyperparams: TrainHyperparams::default(),
            file: None,
            routing: ids.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluationConfig {
    /// Cross-validation folds; 1 evaluates the whole corpus once.
    pub cv_folds: usize,
    pub write_trace: bool,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self { cv_folds: 1, write_trace: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub master_seed: u64,
    pub out_dir: PathBuf,
    pub corpus: CorpusConfig,
    pub blur: BlurConfig,
    pub calibration: CalibrationConfig,
    pub roster: RosterConfig,
    pub evaluation: EvaluationConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            master_seed: 42,
            out_dir: PathBuf::from("out"),
            corpus: CorpusConfig::default(),
            blur: BlurConfig::default(),
            calibration: CalibrationConfig::default(),
            roster: RosterConfig::default(),
            evaluation: EvaluationConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parses TOML, rejecting unknown keys with the full list of offenders.
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut unknown = Vec::new();
        let de = toml::Deserializer::new(text);
        let cfg: RunConfig = serde_ignored::deserialize(de, |path| unknown.push(path.to_string()))
            .map_err(|e| Error::Config(format!("parsing config: {e}")))?;
        if !unknown.is_empty() {
            return Err(Error::Config(format!("unknown config keys: {}", unknown.join(", "))));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the effective config, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.corpus.synthetic.validate()?;
        for g in &self.blur.groups {
            g.validate()?;
        }
        for s in &self.blur.scenarios {
            s.validate()?;
        }
        if self.blur.sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::Config("blur.sigmas must be finite and >= 0".into()));
        }
        if let Some(t) = &self.calibration.thresholds {
            t.validate()?;
        }
        if let Some([a, b]) = self.calibration.sigma_cutoffs {
            if !(a.is_finite() && b.is_finite() && 0.0 <= a && a < b) {
                return Err(Error::Config("calibration.sigma_cutoffs must satisfy 0 <= lo < hi".into()));
            }
        }
        if self.calibration.sample_size == 0 {
            return Err(Error::Config("calibration.sample_size must be >= 1".into()));
        }
        if self.roster.routing.len() != 3 {
            return Err(Error::Config("roster.routing must name exactly three band models".into()));
        }
        if self.evaluation.cv_folds == 0 {
            return Err(Error::Config("evaluation.cv_folds must be >= 1".into()));
        }
        match self.roster.source {
            RosterSource::Trained if self.roster.train.is_empty() => {
                return Err(Error::Config("roster.train is empty".into()))
            }
            RosterSource::File if self.roster.file.is_none() => {
                return Err(Error::Config("roster.source = \"file\" needs roster.file".into()))
            }
            _ => {}
        }
        Ok(())
    }

    pub fn base_model_id(&self) -> &str {
        &self.roster.routing[0]
    }
}

/// Reads a JSON array of predictor specs.
pub fn read_roster(path: &Path) -> Result<Vec<PredictorSpec>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let specs: Vec<PredictorSpec> =
        serde_json::from_str(&text).map_err(|e| Error::format("roster", e.to_string()))?;
    for s in &specs {
        s.validate()?;
    }
    Ok(specs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_default() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn effective_config_round_trips() {
        let cfg = RunConfig::from_toml("master_seed = 9\n[evaluation]\ncv_folds = 5\n").unwrap();
        let again = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.hash(), again.hash());
    }

    #[test]
    fn unknown_keys_are_listed() {
        let err = RunConfig::from_toml("master_sed = 1\n[evaluation]\nfolds = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("master_sed") && msg.contains("evaluation.folds"), "{msg}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn nested_unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("[corpus.synthetic]\nn_slide = 3\n").is_err());
    }

    #[test]
    fn inconsistent_thresholds_are_rejected() {
        let text = "[calibration.thresholds]\ntheta_sharp = 500.0\ntheta_hi = 1.0\ntheta_lo = 2.0\n";
        assert!(RunConfig::from_toml(text).is_err());
    }
}
