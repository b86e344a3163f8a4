use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::experiments::{ApproachResult, Condition, ConditionResult, DEEPBLURMM};
use super::metrics::auc;
use crate::calib::AucCurveSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Tile,
    Slide,
}

/// How per-fold results were combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Single evaluation over the whole corpus, no folds.
    All,
    /// Unweighted mean of per-fold AUCs.
    FoldMean,
    /// One AUC over the concatenated validation sets.
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub condition: String,
    pub sigma: Option<f64>,
    pub scenario: Option<u32>,
    pub approach: String,
    pub level: Level,
    pub aggregation: Aggregation,
    pub auc: f64,
    /// Tiles or slides the AUC was computed over.
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandCountRow {
    pub condition: String,
    pub model_id: String,
    pub tiles: usize,
}

/// AUC table over conditions × approaches × levels, plus routing counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
    pub band_counts: Vec<BandCountRow>,
}

fn level_auc(a: &ApproachResult, level: Level) -> Result<(f64, usize)> {
    match level {
        Level::Tile => Ok((auc(&a.tile_labels, &a.tile_scores)?, a.tile_scores.len())),
        Level::Slide => {
            let labels: Vec<u8> = a.slides.iter().map(|s| s.label).collect();
            let values: Vec<f64> = a.slides.iter().map(|s| s.value).collect();
            Ok((auc(&labels, &values)?, values.len()))
        }
    }
}

fn row(c: &Condition, approach: &str, level: Level, aggregation: Aggregation, auc: f64, n: usize) -> ReportRow {
    let (sigma, scenario) = match c {
        Condition::Sigma(s) => (Some(*s), None),
        Condition::Scenario(s) => (None, Some(s.id)),
    };
    ReportRow {
        condition: c.label(),
        sigma,
        scenario,
        approach: approach.to_string(),
        level,
        aggregation,
        auc,
        n,
    }
}

fn band_rows(c: &Condition, counts: &BTreeMap<String, usize>) -> Vec<BandCountRow> {
    counts
        .iter()
        .map(|(m, &tiles)| BandCountRow { condition: c.label(), model_id: m.clone(), tiles })
        .collect()
}

impl EvalReport {
    /// Report over a single evaluation of the whole corpus.
    pub fn from_results(results: &[ConditionResult]) -> Result<Self> {
        let mut rows = Vec::new();
        let mut band_counts = Vec::new();
        for r in results {
            for level in [Level::Tile, Level::Slide] {
                for a in &r.approaches {
                    let (v, n) = level_auc(a, level)?;
                    rows.push(row(&r.condition, &a.approach, level, Aggregation::All, v, n));
                }
            }
            band_counts.extend(band_rows(&r.condition, &r.band_counts));
        }
        Ok(Self { rows, band_counts })
    }

    /// Report over cross-validation folds, with fold-mean and pooled rows.
    ///
    /// Every fold must hold the same conditions and approaches in the same order.
    pub fn from_folds(folds: &[Vec<ConditionResult>]) -> Result<Self> {
        let first = folds.first().ok_or_else(|| Error::domain("no folds to report"))?;
        for f in folds {
            let same = f.len() == first.len()
                && f.iter().zip(first).all(|(a, b)| {
                    a.condition == b.condition
                        && a.approaches.len() == b.approaches.len()
                        && a.approaches.iter().zip(&b.approaches).all(|(x, y)| x.approach == y.approach)
                });
            if !same {
                return Err(Error::domain("folds disagree on conditions or approaches"));
            }
        }
        let mut rows = Vec::new();
        let mut band_counts = Vec::new();
        for (c, head) in first.iter().enumerate() {
            for level in [Level::Tile, Level::Slide] {
                for (a, approach) in head.approaches.iter().enumerate() {
                    let parts: Vec<&ApproachResult> = folds.iter().map(|f| &f[c].approaches[a]).collect();
                    let mut sum = 0.0;
                    let mut n = 0;
                    for p in &parts {
                        let (v, k) = level_auc(p, level)?;
                        sum += v;
                        n += k;
                    }
                    let mean = sum / parts.len() as f64;
                    rows.push(row(&head.condition, &approach.approach, level, Aggregation::FoldMean, mean, n));
                    let (pooled, n) = level_auc(&ApproachResult::pooled(&parts), level)?;
                    rows.push(row(&head.condition, &approach.approach, level, Aggregation::Pooled, pooled, n));
                }
            }
            let mut counts: BTreeMap<String, usize> = BTreeMap::new();
            for f in folds {
                for (m, k) in &f[c].band_counts {
                    *counts.entry(m.clone()).or_default() += k;
                }
            }
            band_counts.extend(band_rows(&head.condition, &counts));
        }
        Ok(Self { rows, band_counts })
    }

    /// The aggregation present in this report: `All` or, for fold reports, `FoldMean`.
    pub fn primary_aggregation(&self) -> Aggregation {
        if self.rows.iter().any(|r| r.aggregation == Aggregation::All) {
            Aggregation::All
        } else {
            Aggregation::FoldMean
        }
    }

    pub fn find(&self, condition: &str, approach: &str, level: Level, aggregation: Aggregation) -> Option<&ReportRow> {
        self.rows.iter().find(|r| {
            r.condition == condition && r.approach == approach && r.level == level && r.aggregation == aggregation
        })
    }

    /// Fixed-σ rows as one AUC curve per approach, in first-seen order.
    pub fn curves(&self, level: Level, aggregation: Aggregation) -> Result<AucCurveSet> {
        let mut sigmas: Vec<f64> = Vec::new();
        let mut models: Vec<String> = Vec::new();
        let selected: Vec<&ReportRow> = self
            .rows
            .iter()
            .filter(|r| r.sigma.is_some() && r.level == level && r.aggregation == aggregation)
            .collect();
        for r in &selected {
            let s = r.sigma.expect("filtered");
            if !sigmas.contains(&s) {
                sigmas.push(s);
            }
            if !models.contains(&r.approach) {
                models.push(r.approach.clone());
            }
        }
        if sigmas.is_empty() {
            return Err(Error::domain("report has no fixed-sigma rows at this level"));
        }
        let mut auc = vec![vec![f64::NAN; sigmas.len()]; models.len()];
        for r in selected {
            let i = sigmas.iter().position(|&s| s == r.sigma.expect("filtered")).expect("present");
            let m = models.iter().position(|x| *x == r.approach).expect("present");
            auc[m][i] = r.auc;
        }
        if auc.iter().flatten().any(|v| v.is_nan()) {
            return Err(Error::domain("fixed-sigma report is missing model/sigma cells"));
        }
        let set = AucCurveSet { sigmas, models, auc };
        set.validate()?;
        Ok(set)
    }

    /// Scenario rows in the multi-model vs base layout:
    /// `scenario,groups,mm_tile,mm_slide,base_tile,base_slide`.
    pub fn write_scenario_csv(
        &self,
        mut out: impl Write,
        scenarios: &[crate::blursim::Scenario],
        base_model_id: &str,
        aggregation: Aggregation,
    ) -> Result<()> {
        let io = |e: std::io::Error| Error::Protocol(format!("writing scenario table: {e}"));
        writeln!(out, "scenario,groups,mm_tile,mm_slide,base_tile,base_slide").map_err(io)?;
        for s in scenarios {
            let cond = Condition::Scenario(*s).label();
            let get = |approach: &str, level: Level| -> Result<f64> {
                self.find(&cond, approach, level, aggregation)
                    .map(|r| r.auc)
                    .ok_or_else(|| Error::domain(format!("report lacks {approach} for {cond}")))
            };
            writeln!(
                out,
                "{},{},{},{},{},{}",
                s.id,
                s.label(),
                get(DEEPBLURMM, Level::Tile)?,
                get(DEEPBLURMM, Level::Slide)?,
                get(base_model_id, Level::Tile)?,
                get(base_model_id, Level::Slide)?
            )
            .map_err(io)?;
        }
        Ok(())
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r).map_err(|e| Error::Protocol(format!("writing report: {e}")))?;
        }
        w.flush().map_err(|e| Error::Protocol(format!("writing report: {e}")))?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::routeval::SlideScore;

    fn approach(name: &str, scores: &[f64]) -> ApproachResult {
        let labels = vec![0, 1, 0, 1];
        ApproachResult {
            approach: name.into(),
            tile_labels: labels.clone(),
            tile_scores: scores.to_vec(),
            slides: scores
                .iter()
                .zip(&labels)
                .enumerate()
                .map(|(i, (&v, &l))| SlideScore { slide_id: format!("s{i}"), label: l, value: v, n_tiles: 1 })
                .collect(),
        }
    }

    fn result(sigma: f64, a: &[f64], b: &[f64]) -> ConditionResult {
        ConditionResult {
            condition: Condition::Sigma(sigma),
            approaches: vec![approach("m0", a), approach("m1", b)],
            band_counts: BTreeMap::new(),
            trace: Vec::new(),
        }
    }

    #[test]
    fn sweep_report_shape_and_curves() {
        let res = vec![result(0.0, &[0.1, 0.9, 0.2, 0.8], &[0.5; 4]), result(2.0, &[0.9, 0.1, 0.2, 0.8], &[0.1, 0.9, 0.2, 0.8])];
        let rep = EvalReport::from_results(&res).unwrap();
        assert_eq!(rep.rows.len(), 2 * 2 * 2);
        let c = rep.curves(Level::Slide, Aggregation::All).unwrap();
        assert_eq!(c.sigmas, vec![0.0, 2.0]);
        assert_eq!(c.models, vec!["m0", "m1"]);
        assert_eq!(c.auc[0], vec![1.0, 0.25]);
        assert_eq!(c.auc[1], vec![0.5, 1.0]);
    }

    #[test]
    fn fold_mean_and_pooled() {
        let f1 = vec![result(0.0, &[0.1, 0.9, 0.2, 0.8], &[0.5; 4])];
        let f2 = vec![result(0.0, &[0.9, 0.1, 0.2, 0.8], &[0.5; 4])];
        let rep = EvalReport::from_folds(&[f1, f2]).unwrap();
        let mean = rep.find("sigma=0", "m0", Level::Tile, Aggregation::FoldMean).unwrap();
        assert_eq!(mean.auc, 0.625);
        assert_eq!(mean.n, 8);
        let pooled = rep.find("sigma=0", "m0", Level::Tile, Aggregation::Pooled).unwrap();
        assert!((0.0..=1.0).contains(&pooled.auc));
        assert_eq!(rep.primary_aggregation(), Aggregation::FoldMean);
    }

    #[test]
    fn csv_has_one_row_per_cell() {
        let rep = EvalReport::from_results(&[result(0.0, &[0.1, 0.9, 0.2, 0.8], &[0.5; 4])]).unwrap();
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 4);
        assert!(text.starts_with("condition,sigma,scenario,approach,level,aggregation,auc,n\n"));
    }
}
