use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{aggregate_slide, SlideScore};
use super::routing::RoutingPolicy;
use crate::blursim::{apply_fixed_blur, apply_scenario, BlurGroup, Scenario};
use crate::corpus::{Corpus, TileRecord};
use crate::error::{Error, Result};
use crate::imgcore::{laplacian_variance, write_pnm, Raster};
use crate::predict::{
    analytic_predict, external_predict, extract_features, PredictRequest, PredictorSpec, Score,
};
use crate::rng::RngSpec;

/// Approach name of the routed multi-model predictor in reports.
pub const DEEPBLURMM: &str = "deepblurmm";

/// One routing decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub tile_id: String,
    pub theta: f64,
    pub model_id: String,
}

/// Every predictor's score for every tile of a (blurred) corpus.
#[derive(Debug, Clone)]
pub struct TileEvaluation {
    /// Records with `theta` filled in when LV was measured.
    pub records: Vec<TileRecord>,
    /// `scores[p][t]`: predictor `p` on tile `t`.
    pub scores: Vec<Vec<f64>>,
    /// Index of the routed predictor per tile, when a policy was given.
    pub routed: Option<Vec<usize>>,
}

fn predictor_index(predictors: &[PredictorSpec], id: &str) -> Result<usize> {
    predictors
        .iter()
        .position(|p| p.model_id() == id)
        .ok_or_else(|| Error::Config(format!("no predictor with model id {id}")))
}

fn check_roster(predictors: &[PredictorSpec]) -> Result<()> {
    if predictors.is_empty() {
        return Err(Error::Config("predictor roster is empty".into()));
    }
    let mut seen = std::collections::HashSet::new();
    for p in predictors {
        p.validate()?;
        if !seen.insert(p.model_id()) {
            return Err(Error::Config(format!("duplicate model id {}", p.model_id())));
        }
    }
    Ok(())
}

/// Scores all tiles with all predictors; with a policy, also measures LV and routes.
///
/// External predictors read tiles written (8-bit) under `workdir`.
pub fn evaluate_tiles(
    corpus: &Corpus,
    predictors: &[PredictorSpec],
    policy: Option<&RoutingPolicy>,
    rng: &RngSpec,
    workdir: Option<&Path>,
) -> Result<TileEvaluation> {
    check_roster(predictors)?;
    let band_targets: Option<HashMap<&str, usize>> = policy
        .map(|p| {
            p.validate()?;
            p.model_ids()
                .into_iter()
                .map(|id| Ok((id, predictor_index(predictors, id)?)))
                .collect::<Result<_>>()
        })
        .transpose()?;
    let needs_files = predictors.iter().any(PredictorSpec::needs_files);
    if needs_files && workdir.is_none() {
        return Err(Error::Config("external predictors need a working directory".into()));
    }
    let needs_pixels = policy.is_some() || predictors.iter().any(PredictorSpec::needs_pixels);

    struct TileOut {
        record: TileRecord,
        scores: Vec<f64>,
        routed: Option<usize>,
        file: Option<PathBuf>,
    }

    let outs: Vec<TileOut> = (0..corpus.len())
        .into_par_iter()
        .map(|i| -> Result<TileOut> {
            let mut record = corpus.records()[i].clone();
            let ordinal = corpus.ordinal(i);
            let raster: Option<Raster> = if needs_pixels { Some(corpus.load(i)?) } else { None };
            let mut routed = None;
            if let (Some(policy), Some(targets), Some(r)) = (policy, &band_targets, &raster) {
                let theta = laplacian_variance(r).map_err(|e| e.with_tile(&record.tile_id))?;
                record.theta = Some(theta);
                routed = Some(targets[policy.route(theta)?]);
            }
            let features = match &raster {
                Some(r) if predictors.iter().any(|p| matches!(p, PredictorSpec::FeatureModel(_))) => {
                    Some(extract_features(r))
                }
                _ => None,
            };
            let mut file = None;
            let mut scores = Vec::with_capacity(predictors.len());
            for p in predictors {
                let value = match p {
                    PredictorSpec::Analytic(spec) => analytic_predict(&record, ordinal, spec, rng)?.value,
                    PredictorSpec::FeatureModel(spec) => {
                        spec.score_features(features.as_ref().expect("features extracted"))
                    }
                    PredictorSpec::External(_) => {
                        if file.is_none() {
                            let path = workdir.expect("checked").join(&record.path);
                            write_pnm(&path, raster.as_ref().expect("pixels loaded"))?;
                            file = Some(path);
                        }
                        f64::NAN
                    }
                };
                scores.push(value);
            }
            Ok(TileOut { record, scores, routed, file })
        })
        .collect::<Result<_>>()?;

    let mut scores = vec![Vec::with_capacity(outs.len()); predictors.len()];
    for out in &outs {
        for (p, v) in out.scores.iter().enumerate() {
            scores[p].push(*v);
        }
    }
    if needs_files {
        let requests: Vec<PredictRequest> = outs
            .iter()
            .map(|o| PredictRequest {
                id: o.record.tile_id.clone(),
                path: o.file.clone().expect("file written"),
            })
            .collect();
        for (p, spec) in predictors.iter().enumerate() {
            if let PredictorSpec::External(ext) = spec {
                let batch = external_predict(&requests, ext)?;
                scores[p] = batch.into_iter().map(|s| s.value).collect();
            }
        }
    }
    let routed = policy.map(|_| outs.iter().map(|o| o.routed.expect("routed")).collect());
    Ok(TileEvaluation {
        records: outs.into_iter().map(|o| o.record).collect(),
        scores,
        routed,
    })
}

/// Routes every tile by its LV and scores it with the band's predictor.
pub fn deepblurmm_predict(
    corpus: &Corpus,
    policy: &RoutingPolicy,
    predictors: &[PredictorSpec],
    rng: &RngSpec,
    workdir: Option<&Path>,
) -> Result<(Vec<Score>, Vec<TraceRow>)> {
    policy.validate()?;
    for id in policy.model_ids() {
        predictor_index(predictors, id)?;
    }
    // only the predictors the policy can route to are run
    let used: Vec<PredictorSpec> = predictors
        .iter()
        .filter(|p| policy.model_ids().contains(&p.model_id()))
        .cloned()
        .collect();
    let eval = evaluate_tiles(corpus, &used, Some(policy), rng, workdir)?;
    let routed = eval.routed.as_ref().expect("policy given");
    let mut scores = Vec::with_capacity(eval.records.len());
    let mut trace = Vec::with_capacity(eval.records.len());
    for (t, rec) in eval.records.iter().enumerate() {
        let p = routed[t];
        let model_id = used[p].model_id().to_string();
        scores.push(Score {
            tile_id: rec.tile_id.clone(),
            model_id: model_id.clone(),
            value: eval.scores[p][t],
        });
        trace.push(TraceRow {
            tile_id: rec.tile_id.clone(),
            theta: rec.theta.expect("measured"),
            model_id,
        });
    }
    Ok((scores, trace))
}

/// Per-slide 75th-percentile scores, slides ordered by id and tiles by tile id.
pub fn slide_scores(records: &[TileRecord], scores: &[f64]) -> Result<Vec<SlideScore>> {
    let mut by_slide: BTreeMap<&str, (u8, Vec<(&str, f64)>)> = BTreeMap::new();
    for (r, &s) in records.iter().zip(scores) {
        by_slide
            .entry(&r.slide_id)
            .or_insert_with(|| (r.label, Vec::new()))
            .1
            .push((&r.tile_id, s));
    }
    by_slide
        .into_iter()
        .map(|(slide, (label, mut tiles))| {
            tiles.sort_by(|a, b| a.0.cmp(b.0));
            let values: Vec<f64> = tiles.iter().map(|t| t.1).collect();
            Ok(SlideScore {
                slide_id: slide.to_string(),
                label,
                value: aggregate_slide(&values)?,
                n_tiles: values.len(),
            })
        })
        .collect()
}

/// What a condition varied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Sigma(f64),
    Scenario(Scenario),
}

impl Condition {
    pub fn label(&self) -> String {
        match self {
            Condition::Sigma(s) => format!("sigma={s}"),
            Condition::Scenario(s) => format!("scenario {}", s.id),
        }
    }
}

/// Tile and slide scores of one approach under one condition.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproachResult {
    pub approach: String,
    pub tile_labels: Vec<u8>,
    pub tile_scores: Vec<f64>,
    pub slides: Vec<SlideScore>,
}

impl ApproachResult {
    fn new(approach: &str, records: &[TileRecord], scores: Vec<f64>) -> Result<Self> {
        Ok(Self {
            approach: approach.to_string(),
            tile_labels: records.iter().map(|r| r.label).collect(),
            slides: slide_scores(records, &scores)?,
            tile_scores: scores,
        })
    }

    /// Concatenates results of disjoint slide sets (cross-validation pooling).
    pub fn pooled(parts: &[&ApproachResult]) -> ApproachResult {
        let mut out = ApproachResult {
            approach: parts[0].approach.clone(),
            tile_labels: Vec::new(),
            tile_scores: Vec::new(),
            slides: Vec::new(),
        };
        for p in parts {
            out.tile_labels.extend(&p.tile_labels);
            out.tile_scores.extend(&p.tile_scores);
            out.slides.extend(p.slides.iter().cloned());
        }
        out
    }
}

/// Everything measured under one condition.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionResult {
    pub condition: Condition,
    pub approaches: Vec<ApproachResult>,
    /// Tiles routed to each model (multi-model runs only).
    pub band_counts: BTreeMap<String, usize>,
    pub trace: Vec<TraceRow>,
}

/// Scores the corpus at σ = 0 and every listed σ with every predictor.
pub fn sweep_fixed_blur(
    corpus: &Corpus,
    predictors: &[PredictorSpec],
    sigmas: &[f64],
    rng: &RngSpec,
    workdir: Option<&Path>,
) -> Result<Vec<ConditionResult>> {
    check_roster(predictors)?;
    let mut levels = vec![0.0];
    levels.extend(sigmas.iter().copied().filter(|&s| s != 0.0));
    levels
        .iter()
        .map(|&sigma| {
            let blurred = apply_fixed_blur(corpus, sigma)?;
            let dir = workdir.map(|w| w.join(format!("sigma_{sigma}")));
            let eval = evaluate_tiles(&blurred, predictors, None, rng, dir.as_deref())?;
            let approaches = predictors
                .iter()
                .zip(eval.scores)
                .map(|(p, s)| ApproachResult::new(p.model_id(), &eval.records, s))
                .collect::<Result<_>>()?;
            Ok(ConditionResult {
                condition: Condition::Sigma(sigma),
                approaches,
                band_counts: BTreeMap::new(),
                trace: Vec::new(),
            })
        })
        .collect()
}

/// For each scenario, blurs the corpus once and scores it two ways on the same tiles:
/// routed multi-model and base model alone.
pub fn run_scenarios(
    corpus: &Corpus,
    scenarios: &[Scenario],
    groups: &[BlurGroup; 3],
    policy: &RoutingPolicy,
    predictors: &[PredictorSpec],
    base_model_id: &str,
    rng: &RngSpec,
    workdir: Option<&Path>,
) -> Result<Vec<ConditionResult>> {
    check_roster(predictors)?;
    policy.validate()?;
    for id in policy.model_ids() {
        predictor_index(predictors, id)?;
    }
    let base = predictor_index(predictors, base_model_id)?;
    scenarios
        .iter()
        .map(|scenario| {
            let blurred = apply_scenario(corpus, scenario, groups, rng)?;
            let dir = workdir.map(|w| w.join(format!("scenario_{}", scenario.id)));
            let eval = evaluate_tiles(&blurred, predictors, Some(policy), rng, dir.as_deref())?;
            let routed = eval.routed.as_ref().expect("policy given");
            let mm: Vec<f64> = routed.iter().enumerate().map(|(t, &p)| eval.scores[p][t]).collect();
            let mut band_counts: BTreeMap<String, usize> =
                policy.model_ids().into_iter().map(|id| (id.to_string(), 0)).collect();
            let trace = eval
                .records
                .iter()
                .zip(routed)
                .map(|(r, &p)| {
                    let model_id = predictors[p].model_id().to_string();
                    *band_counts.get_mut(&model_id).expect("band model") += 1;
                    TraceRow { tile_id: r.tile_id.clone(), theta: r.theta.expect("measured"), model_id }
                })
                .collect();
            Ok(ConditionResult {
                condition: Condition::Scenario(*scenario),
                approaches: vec![
                    ApproachResult::new(DEEPBLURMM, &eval.records, mm)?,
                    ApproachResult::new(base_model_id, &eval.records, eval.scores[base].clone())?,
                ],
                band_counts,
                trace,
            })
        })
        .collect()
}
