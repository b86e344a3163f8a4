//! The pipelines behind each CLI subcommand.
//!
//! Every command writes its outputs plus `<command>_metadata.json` and
//! `effective_config.toml` into the output directory.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::calib::{
    derive_lv_thresholds, find_sigma_cutoffs, lv_sigma_curve, AucCurveSet, LvSigmaCurve, ThresholdDerivation,
    ThresholdPolicy,
};
use crate::config::{read_roster, RosterSource, RunConfig};
use crate::corpus::{write_manifest, Corpus, TileRecord};
use crate::error::{Error, Result};
use crate::imgcore::{read_pnm, tile_raster, write_pnm};
use crate::predict::{train_feature_model, PredictorSpec};
use crate::rng::RngSpec;
use crate::routeval::{
    cv_split, deepblurmm_predict, run_scenarios, sweep_fixed_blur, ConditionResult, EvalReport,
    Level, RoutingPolicy, TraceRow,
};
use crate::synth::{synthetic_corpus, write_corpus};

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

#[derive(Serialize)]
struct RunMetadata<'a> {
    command: &'a str,
    master_seed: u64,
    config_sha256: String,
    blurmm_version: &'a str,
}

/// Resolved configuration plus output directory for one command run.
pub struct Run {
    pub config: RunConfig,
    pub out: PathBuf,
}

impl Run {
    pub fn new(config: RunConfig, out: Option<PathBuf>) -> Self {
        let out = out.unwrap_or_else(|| config.out_dir.clone());
        Self { config, out }
    }

    pub fn rng(&self) -> RngSpec {
        RngSpec::new(self.config.master_seed)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write_metadata(&self, command: &str) -> Result<()> {
        write_file(&self.path("effective_config.toml"), self.config.to_toml().as_bytes())?;
        write_json(
            &self.path(&format!("{command}_metadata.json")),
            &RunMetadata {
                command,
                master_seed: self.config.master_seed,
                config_sha256: self.config.hash(),
                blurmm_version: env!("CARGO_PKG_VERSION"),
            },
        )
    }

    /// The configured manifest, else the procedural corpus.
    pub fn load_corpus(&self) -> Result<Corpus> {
        match &self.config.corpus.manifest {
            Some(path) => {
                if !path.exists() {
                    return Err(Error::Config(format!("corpus manifest {} does not exist", path.display())));
                }
                Corpus::from_manifest(path)
            }
            None => synthetic_corpus(&self.config.corpus.synthetic, &self.rng()),
        }
    }

    /// Configured σ cut-offs, else those found in the shipped slide-level AUC table.
    pub fn sigma_cutoffs(&self) -> Result<[f64; 2]> {
        if let Some(c) = self.config.calibration.sigma_cutoffs {
            return Ok(c);
        }
        cutoffs_from_curves(&AucCurveSet::reference_slide(), self.config.calibration.cutoff_margin)
    }

    pub fn lv_curve(&self, corpus: &Corpus) -> Result<LvSigmaCurve> {
        let cal = &self.config.calibration;
        lv_sigma_curve(corpus, &cal.curve_sigmas, cal.sample_size, &self.rng())
    }

    /// Explicit thresholds, or thresholds derived from the corpus LV curve.
    pub fn thresholds(&self, corpus: &Corpus) -> Result<ThresholdDerivation> {
        let cutoffs = self.sigma_cutoffs()?;
        match self.config.calibration.thresholds {
            Some(policy) => Ok(ThresholdDerivation { sigma_cutoffs: cutoffs, policy, warnings: Vec::new() }),
            None => derive_lv_thresholds(&self.lv_curve(corpus)?, cutoffs, self.config.calibration.theta_sharp),
        }
    }

    pub fn policy(&self, thresholds: &ThresholdPolicy) -> Result<RoutingPolicy> {
        let ids = &self.config.roster.routing;
        RoutingPolicy::from_thresholds(thresholds, [&ids[0], &ids[1], &ids[2]])
    }

    /// Builds the predictor roster; trained rosters are fitted on `train`.
    pub fn roster(&self, train: &Corpus) -> Result<Vec<PredictorSpec>> {
        let r = &self.config.roster;
        match r.source {
            RosterSource::Analytic => r.analytic.build(),
            RosterSource::File => read_roster(r.file.as_deref().expect("validated")),
            RosterSource::Trained => r
                .train
                .iter()
                .map(|t| {
                    train_feature_model(&t.model_id, train, t.sigma, &r.hyperparams).map(PredictorSpec::FeatureModel)
                })
                .collect(),
        }
    }

    /// `(training, validation)` corpora: one pair per fold, or the whole corpus twice.
    pub fn evaluation_sets(&self, corpus: &Corpus) -> Result<Vec<(Corpus, Corpus)>> {
        let k = self.config.evaluation.cv_folds;
        if k == 1 {
            if self.config.roster.source == RosterSource::Trained {
                return Err(Error::Config(
                    "a trained roster needs evaluation.cv_folds >= 2 so models are scored on held-out slides".into(),
                ));
            }
            return Ok(vec![(corpus.clone(), corpus.clone())]);
        }
        let split = cv_split(&corpus.slides(), k, self.config.master_seed)?;
        Ok(split
            .folds
            .iter()
            .map(|f| {
                let train: HashSet<String> = f.train.iter().cloned().collect();
                let val: HashSet<String> = f.validation.iter().cloned().collect();
                (corpus.subset_slides(&train), corpus.subset_slides(&val))
            })
            .collect())
    }

    fn workdir(&self, fold: usize) -> PathBuf {
        self.path(&format!("work/fold_{fold}"))
    }
}

/// Both cut-offs of a three-model AUC table, or a domain error naming the missing one.
pub fn cutoffs_from_curves(curves: &AucCurveSet, margin: f64) -> Result<[f64; 2]> {
    let found = find_sigma_cutoffs(curves, margin)?;
    match found.as_slice() {
        [Some(a), Some(b)] => Ok([*a, *b]),
        [_, _] => Err(Error::domain(format!("AUC table does not yield both cut-offs: {found:?}"))),
        _ => Err(Error::domain("AUC table must have exactly three models")),
    }
}

fn build_report(per_fold: &[Vec<ConditionResult>]) -> Result<EvalReport> {
    if per_fold.len() == 1 {
        EvalReport::from_results(&per_fold[0])
    } else {
        EvalReport::from_folds(per_fold)
    }
}

fn write_trace(path: &Path, trace: &[TraceRow]) -> Result<()> {
    let bytes = csv_bytes(|buf| {
        let mut w = csv::Writer::from_writer(buf);
        for row in trace {
            w.serialize(row).map_err(|e| Error::Protocol(format!("writing trace: {e}")))?;
        }
        w.flush().map_err(|e| Error::io("trace", e))?;
        Ok(())
    })?;
    write_file(path, &bytes)
}

/// `gen-corpus`: the procedural corpus, or tiles cut from configured rasters.
pub fn gen_corpus(run: &Run) -> Result<usize> {
    let dir = run.path("corpus");
    let n = if run.config.corpus.rasters.is_empty() {
        let corpus = synthetic_corpus(&run.config.corpus.synthetic, &run.rng())?;
        write_corpus(&corpus, &dir)?;
        corpus.len()
    } else {
        let mut records = Vec::new();
        for input in &run.config.corpus.rasters {
            if !input.path.exists() {
                return Err(Error::Config(format!("raster {} does not exist", input.path.display())));
            }
            let raster = read_pnm(&input.path)?;
            let ext = if raster.channels() == 1 { "pgm" } else { "ppm" };
            for (tile, pos) in tile_raster(&raster, &run.config.corpus.tiling)? {
                let id = format!("{}_r{:03}_c{:03}", input.slide_id, pos.row, pos.col);
                let path = format!("tiles/{}/{id}.{ext}", input.slide_id);
                write_pnm(&dir.join(&path), &tile)?;
                records.push(TileRecord::new(id, input.slide_id.clone(), input.label, path));
            }
        }
        Corpus::records_only(records.clone())?;
        write_manifest(&dir.join("manifest.csv"), &records)?;
        records.len()
    };
    run.write_metadata("gen-corpus")?;
    Ok(n)
}

/// `calibrate`: LV curve and thresholds. Cut-offs may come from an AUC table.
pub fn calibrate(run: &Run, auc_curves: Option<&Path>) -> Result<ThresholdDerivation> {
    let corpus = run.load_corpus()?;
    let cutoffs = match auc_curves {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            cutoffs_from_curves(&AucCurveSet::from_csv(&text)?, run.config.calibration.cutoff_margin)?
        }
        None => run.sigma_cutoffs()?,
    };
    let curve = run.lv_curve(&corpus)?;
    write_file(&run.path("lv_curve.csv"), &csv_bytes(|b| curve.write_csv(b))?)?;
    let derivation = derive_lv_thresholds(&curve, cutoffs, run.config.calibration.theta_sharp)?;
    write_json(&run.path("thresholds.json"), &derivation)?;
    run.write_metadata("calibrate")?;
    Ok(derivation)
}

/// `train`: fits the configured feature models on the whole corpus and writes `roster.json`.
pub fn train(run: &Run) -> Result<Vec<PredictorSpec>> {
    let corpus = run.load_corpus()?;
    let r = &run.config.roster;
    let roster = r
        .train
        .iter()
        .map(|t| train_feature_model(&t.model_id, &corpus, t.sigma, &r.hyperparams).map(PredictorSpec::FeatureModel))
        .collect::<Result<Vec<_>>>()?;
    write_json(&run.path("roster.json"), &roster)?;
    run.write_metadata("train")?;
    Ok(roster)
}

/// `sweep`: every predictor at σ = 0 and each configured σ.
pub fn sweep(run: &Run) -> Result<EvalReport> {
    let corpus = run.load_corpus()?;
    let rng = run.rng();
    let mut per_fold = Vec::new();
    for (f, (train, val)) in run.evaluation_sets(&corpus)?.iter().enumerate() {
        let roster = run.roster(train)?;
        per_fold.push(sweep_fixed_blur(val, &roster, &run.config.blur.sigmas, &rng, Some(&run.workdir(f)))?);
    }
    let report = build_report(&per_fold)?;
    let agg = report.primary_aggregation();
    write_file(&run.path("sweep_report.csv"), &csv_bytes(|b| report.write_csv(b))?)?;
    write_file(&run.path("sweep_report.json"), format!("{}\n", report.to_json()).as_bytes())?;
    for (level, name) in [(Level::Slide, "sweep_slide_auc.csv"), (Level::Tile, "sweep_tile_auc.csv")] {
        let curves = report.curves(level, agg)?;
        write_file(&run.path(name), &csv_bytes(|b| curves.write_csv(b).map_err(|e| Error::io(name, e)))?)?;
    }
    run.write_metadata("sweep")?;
    Ok(report)
}

/// `scenarios`: routed multi-model vs base model under each blur scenario.
pub fn scenarios(run: &Run) -> Result<EvalReport> {
    let corpus = run.load_corpus()?;
    let rng = run.rng();
    let derivation = run.thresholds(&corpus)?;
    write_json(&run.path("thresholds.json"), &derivation)?;
    let policy = run.policy(&derivation.policy)?;
    let mut per_fold = Vec::new();
    for (f, (train, val)) in run.evaluation_sets(&corpus)?.iter().enumerate() {
        let roster = run.roster(train)?;
        per_fold.push(run_scenarios(
            val,
            &run.config.blur.scenarios,
            &run.config.blur.groups,
            &policy,
            &roster,
            run.config.base_model_id(),
            &rng,
            Some(&run.workdir(f)),
        )?);
    }
    let report = build_report(&per_fold)?;
    write_file(&run.path("scenario_report.csv"), &csv_bytes(|b| report.write_csv(b))?)?;
    write_file(&run.path("scenario_report.json"), format!("{}\n", report.to_json()).as_bytes())?;
    let table = csv_bytes(|b| {
        report.write_scenario_csv(
            b,
            &run.config.blur.scenarios,
            run.config.base_model_id(),
            report.primary_aggregation(),
        )
    })?;
    write_file(&run.path("scenario_table.csv"), &table)?;
    if run.config.evaluation.write_trace {
        let trace: Vec<TraceRow> = per_fold.iter().flatten().flat_map(|c| c.trace.iter().cloned()).collect();
        write_trace(&run.path("trace.csv"), &trace)?;
    }
    run.write_metadata("scenarios")?;
    Ok(report)
}

/// Band counts of a routing run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteSummary {
    pub tiles: usize,
    pub band_counts: std::collections::BTreeMap<String, usize>,
}

/// `route`: scores the corpus as-is through the routed roster.
///
/// Thresholds come from `thresholds` (a file written by `calibrate`), the config, or,
/// failing both, a fresh calibration on the corpus itself.
pub fn route(run: &Run, thresholds: Option<&Path>) -> Result<RouteSummary> {
    let corpus = run.load_corpus()?;
    let policy = match thresholds {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            let d: ThresholdDerivation =
                serde_json::from_str(&text).map_err(|e| Error::format("thresholds", e.to_string()))?;
            d.policy.validate()?;
            d.policy
        }
        None => run.thresholds(&corpus)?.policy,
    };
    let policy = run.policy(&policy)?;
    let roster = run.roster(&corpus)?;
    let (scores, trace) = deepblurmm_predict(&corpus, &policy, &roster, &run.rng(), Some(&run.workdir(0)))?;
    let bytes = csv_bytes(|buf| {
        writeln!(buf, "tile_id,model_id,score").map_err(|e| Error::io("scores", e))?;
        for s in &scores {
            writeln!(buf, "{},{},{}", s.tile_id, s.model_id, s.value).map_err(|e| Error::io("scores", e))?;
        }
        Ok(())
    })?;
    write_file(&run.path("scores.csv"), &bytes)?;
    write_trace(&run.path("trace.csv"), &trace)?;
    let mut band_counts: std::collections::BTreeMap<String, usize> =
        policy.model_ids().into_iter().map(|m| (m.to_string(), 0)).collect();
    for t in &trace {
        *band_counts.get_mut(&t.model_id).expect("band model") += 1;
    }
    let summary = RouteSummary { tiles: trace.len(), band_counts };
    write_json(&run.path("route_summary.json"), &summary)?;
    run.write_metadata("route")?;
    Ok(summary)
}

/// Cut-offs found in an AUC table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutoffReport {
    pub source: String,
    pub models: Vec<String>,
    pub margin: f64,
    pub sigma_cutoffs: Vec<Option<f64>>,
    /// Present when an LV curve was supplied.
    pub thresholds: Option<ThresholdDerivation>,
}

/// `report`: σ cut-offs from an AUC table (default: the shipped slide-level table),
/// mapped to LV thresholds when an LV curve is given.
pub fn report(run: &Run, auc_curves: Option<&Path>, lv_curve: Option<&Path>) -> Result<CutoffReport> {
    let (source, curves) = match auc_curves {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            (p.display().to_string(), AucCurveSet::from_csv(&text)?)
        }
        None => ("fixtures/table_s2_slide.csv".to_string(), AucCurveSet::reference_slide()),
    };
    let margin = run.config.calibration.cutoff_margin;
    let sigma_cutoffs = find_sigma_cutoffs(&curves, margin)?;
    let thresholds = match lv_curve {
        Some(p) => Some(derive_lv_thresholds(
            &LvSigmaCurve::read_csv(p)?,
            cutoffs_from_curves(&curves, margin)?,
            run.config.calibration.theta_sharp,
        )?),
        None => None,
    };
    let out = CutoffReport { source, models: curves.models.clone(), margin, sigma_cutoffs, thresholds };
    write_json(&run.path("cutoffs.json"), &out)?;
    run.write_metadata("report")?;
    Ok(out)
}
