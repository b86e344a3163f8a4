//! Sharpness calibration: the LV-versus-σ curve, LV thresholds at σ cut-offs, and
//! σ cut-offs read off per-model AUC curves.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::imgcore::{gaussian_blur, laplacian_variance};
use crate::rng::{Purpose, RngSpec};
use crate::routeval::percentile_sorted;

/// Shipped slide-level AUC fixture (σ grid plus original set, three models).
pub const REFERENCE_SLIDE_AUC: &str = include_str!("../fixtures/table_s2_slide.csv");
/// Shipped tile-level AUC fixture.
pub const REFERENCE_TILE_AUC: &str = include_str!("../fixtures/table_s2_tile.csv");

/// Default sample size for the LV curve.
pub const DEFAULT_CURVE_SAMPLE: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub sigma: f64,
    pub p05: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p95: f64,
    pub n: usize,
}

/// Quantiles of tile LV at each blur level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LvSigmaCurve {
    pub rows: Vec<CurveRow>,
}

impl LvSigmaCurve {
    pub fn validate(&self) -> Result<()> {
        if !self.rows.iter().any(|r| r.sigma == 0.0) {
            return Err(Error::domain("curve has no sigma = 0 row"));
        }
        if self.rows.windows(2).any(|w| w[0].sigma >= w[1].sigma) {
            return Err(Error::domain("curve sigmas must be strictly increasing"));
        }
        for r in &self.rows {
            if !(r.p05 <= r.p25 && r.p25 <= r.p50 && r.p50 <= r.p75 && r.p75 <= r.p95) {
                return Err(Error::domain(format!("unordered quantiles at sigma {}", r.sigma)));
            }
        }
        Ok(())
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)
                .map_err(|e| Error::format("lv curve", e.to_string()))?;
        }
        w.flush().map_err(|e| Error::io("lv curve", e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::Reader::from_reader(file);
        let rows = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<CurveRow>, _>>()
            .map_err(|e| Error::format(path.display().to_string(), e.to_string()))?;
        let curve = Self { rows };
        curve.validate()?;
        Ok(curve)
    }
}

/// Blurs a random sample of tiles at every σ and summarizes their LV.
///
/// Tiles are drawn without replacement, up to `sample_size`.
pub fn lv_sigma_curve(
    corpus: &Corpus,
    sigmas: &[f64],
    sample_size: usize,
    rng: &RngSpec,
) -> Result<LvSigmaCurve> {
    if corpus.is_empty() {
        return Err(Error::domain("cannot build an LV curve from an empty corpus"));
    }
    if !sigmas.contains(&0.0) {
        return Err(Error::domain("sigma list must include 0"));
    }
    if sigmas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("sigma list must be strictly increasing"));
    }
    let mut indices: Vec<usize> = (0..corpus.len()).collect();
    rng.stream(Purpose::Shuffle(0xC0_12E5)).shuffle(&mut indices);
    indices.truncate(sample_size.min(corpus.len()).max(1));
    indices.sort_unstable();

    // lv[t][s]: LV of sampled tile t at sigma s
    let lv: Vec<Vec<f64>> = indices
        .par_iter()
        .map(|&i| {
            let raster = corpus.load(i)?;
            sigmas
                .iter()
                .map(|&s| laplacian_variance(&gaussian_blur(&raster, s)?))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let rows = sigmas
        .iter()
        .enumerate()
        .map(|(s, &sigma)| {
            let mut col: Vec<f64> = lv.iter().map(|t| t[s]).collect();
            col.sort_by(f64::total_cmp);
            CurveRow {
                sigma,
                p05: percentile_sorted(&col, 0.05),
                p25: percentile_sorted(&col, 0.25),
                p50: percentile_sorted(&col, 0.50),
                p75: percentile_sorted(&col, 0.75),
                p95: percentile_sorted(&col, 0.95),
                n: col.len(),
            }
        })
        .collect();
    Ok(LvSigmaCurve { rows })
}

/// LV floors that drive preprocessing QC and model routing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdPolicy {
    /// QC floor for sharp tiles.
    pub theta_sharp: f64,
    /// Tiles above this go to the base model.
    pub theta_hi: f64,
    /// Tiles below this go to the high-blur model.
    pub theta_lo: f64,
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        Self {
            theta_sharp: 500.0,
            theta_hi: 25.0,
            theta_lo: 2.0,
        }
    }
}

impl ThresholdPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta_sharp > self.theta_hi && self.theta_hi > self.theta_lo && self.theta_lo > 0.0) {
            return Err(Error::Config(format!(
                "thresholds must satisfy theta_sharp > theta_hi > theta_lo > 0, got {} / {} / {}",
                self.theta_sharp, self.theta_hi, self.theta_lo
            )));
        }
        Ok(())
    }
}

/// Median LV at `sigma`, log-linearly interpolated between bracketing rows.
///
/// The second value is a warning when the bracketing medians do not decrease.
pub fn lv_at_sigma(curve: &LvSigmaCurve, sigma: f64) -> Result<(f64, Option<String>)> {
    let rows = &curve.rows;
    let (first, last) = match (rows.first(), rows.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::domain("empty curve")),
    };
    if !(first.sigma..=last.sigma).contains(&sigma) {
        return Err(Error::domain(format!(
            "cut-off sigma {sigma} outside curve range [{}, {}]",
            first.sigma, last.sigma
        )));
    }
    if let Some(r) = rows.iter().find(|r| r.sigma == sigma) {
        return Ok((r.p50, None));
    }
    let hi = rows.iter().position(|r| r.sigma > sigma).expect("inside range");
    let (a, b) = (&rows[hi - 1], &rows[hi]);
    if a.p50 <= 0.0 || b.p50 <= 0.0 {
        return Err(Error::domain(format!(
            "median LV must be positive to interpolate in log space near sigma {sigma}"
        )));
    }
    let warning = (b.p50 >= a.p50).then(|| {
        format!(
            "median LV not decreasing between sigma {} ({}) and {} ({})",
            a.sigma, a.p50, b.sigma, b.p50
        )
    });
    let t = (sigma - a.sigma) / (b.sigma - a.sigma);
    let log_lv = a.p50.ln() + t * (b.p50.ln() - a.p50.ln());
    Ok((log_lv.exp(), warning))
}

/// Result of mapping σ cut-offs onto LV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdDerivation {
    pub sigma_cutoffs: [f64; 2],
    pub policy: ThresholdPolicy,
    pub warnings: Vec<String>,
}

/// LV thresholds at two σ cut-offs: `theta_hi` at the smaller, `theta_lo` at the larger.
pub fn derive_lv_thresholds(
    curve: &LvSigmaCurve,
    sigma_cutoffs: [f64; 2],
    theta_sharp: f64,
) -> Result<ThresholdDerivation> {
    curve.validate()?;
    let (lo_cut, hi_cut) = if sigma_cutoffs[0] <= sigma_cutoffs[1] {
        (sigma_cutoffs[0], sigma_cutoffs[1])
    } else {
        (sigma_cutoffs[1], sigma_cutoffs[0])
    };
    let (theta_hi, w1) = lv_at_sigma(curve, lo_cut)?;
    let (theta_lo, w2) = lv_at_sigma(curve, hi_cut)?;
    Ok(ThresholdDerivation {
        sigma_cutoffs: [lo_cut, hi_cut],
        policy: ThresholdPolicy {
            theta_sharp,
            theta_hi,
            theta_lo,
        },
        warnings: w1.into_iter().chain(w2).collect(),
    })
}

/// AUC of several models over a shared σ grid, ordered by training blur.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucCurveSet {
    pub sigmas: Vec<f64>,
    pub models: Vec<String>,
    /// `auc[m][i]` is model `m` at `sigmas[i]`.
    pub auc: Vec<Vec<f64>>,
}

impl AucCurveSet {
    pub fn validate(&self) -> Result<()> {
        if self.models.len() != self.auc.len() {
            return Err(Error::domain("one AUC series per model required"));
        }
        for (m, series) in self.models.iter().zip(&self.auc) {
            if series.len() != self.sigmas.len() {
                return Err(Error::domain(format!(
                    "model {m} has {} AUC values for {} sigmas",
                    series.len(),
                    self.sigmas.len()
                )));
            }
            if series.iter().any(|a| !(0.0..=1.0).contains(a)) {
                return Err(Error::domain(format!("model {m} has AUC values outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Parses `sigma,<model>,<model>,...` CSV.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let headers = rdr
            .headers()
            .map_err(|e| Error::format("auc header", e.to_string()))?
            .clone();
        if headers.get(0) != Some("sigma") || headers.len() < 2 {
            return Err(Error::format("auc header", "expected sigma followed by model columns"));
        }
        let models: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut sigmas = Vec::new();
        let mut auc = vec![Vec::new(); models.len()];
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::format(format!("auc row {}", line + 2), e.to_string()))?;
            let parse = |j: usize| -> Result<f64> {
                rec.get(j)
                    .and_then(|v| v.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::format(format!("auc row {}", line + 2), format!("bad value in column {j}")))
            };
            sigmas.push(parse(0)?);
            for (m, series) in auc.iter_mut().enumerate() {
                series.push(parse(m + 1)?);
            }
        }
        let set = Self { sigmas, models, auc };
        set.validate()?;
        Ok(set)
    }

    pub fn reference_slide() -> Self {
        Self::from_csv(REFERENCE_SLIDE_AUC).expect("shipped fixture parses")
    }

    pub fn reference_tile() -> Self {
        Self::from_csv(REFERENCE_TILE_AUC).expect("shipped fixture parses")
    }

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "sigma,{}", self.models.join(","))?;
        for (i, s) in self.sigmas.iter().enumerate() {
            let row: Vec<String> = self.auc.iter().map(|a| a[i].to_string()).collect();
            writeln!(out, "{s},{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Default excess AUC a challenger needs over the incumbent.
pub const DEFAULT_CUTOFF_MARGIN: f64 = 0.005;

/// For each adjacent model pair, the smallest σ where the challenger beats the
/// incumbent by more than `margin`; `None` when it never does.
pub fn find_sigma_cutoffs(curves: &AucCurveSet, margin: f64) -> Result<Vec<Option<f64>>> {
    curves.validate()?;
    if curves.models.len() < 2 {
        return Err(Error::domain("need at least two models to find cut-offs"));
    }
    if !(margin >= 0.0) {
        return Err(Error::domain(format!("margin must be >= 0, got {margin}")));
    }
    Ok(curves
        .auc
        .windows(2)
        .map(|pair| {
            curves
                .sigmas
                .iter()
                .zip(pair[0].iter().zip(&pair[1]))
                .find(|(_, (inc, ch))| *ch - *inc > margin)
                .map(|(s, _)| *s)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_curve(sigmas: &[f64]) -> LvSigmaCurve {
        LvSigmaCurve {
            rows: sigmas
                .iter()
                .map(|&s| {
                    let m = (5.0 - s).exp();
                    CurveRow { sigma: s, p05: m, p25: m, p50: m, p75: m, p95: m, n: 1 }
                })
                .collect(),
        }
    }

    #[test]
    fn log_linear_interpolation_by_hand() {
        let curve = exp_curve(&[0.0, 1.0, 2.0]);
        let (theta, warn) = lv_at_sigma(&curve, 1.5).unwrap();
        assert!((theta - 3.5f64.exp()).abs() < 1e-9);
        assert!((theta - 33.12).abs() < 0.01);
        assert!(warn.is_none());
        assert_eq!(lv_at_sigma(&curve, 2.0).unwrap().0, 3.0f64.exp());
        assert!(lv_at_sigma(&curve, 2.5).is_err());
    }

    #[test]
    fn thresholds_ordered_by_cutoff() {
        let curve = exp_curve(&[0.0, 1.0, 2.0, 4.0, 7.0]);
        let d = derive_lv_thresholds(&curve, [6.0, 1.5], 500.0).unwrap();
        assert_eq!(d.sigma_cutoffs, [1.5, 6.0]);
        assert!(d.policy.theta_hi > d.policy.theta_lo);
        assert!((d.policy.theta_lo - (-1.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn non_monotone_bracket_warns() {
        let mut curve = exp_curve(&[0.0, 1.0, 2.0]);
        curve.rows[2].p50 = curve.rows[1].p50 * 2.0;
        curve.rows[2].p75 = curve.rows[2].p50;
        curve.rows[2].p95 = curve.rows[2].p50;
        let (_, warn) = lv_at_sigma(&curve, 1.5).unwrap();
        assert!(warn.is_some());
    }

    #[test]
    fn reference_slide_cutoffs() {
        let cut = find_sigma_cutoffs(&AucCurveSet::reference_slide(), DEFAULT_CUTOFF_MARGIN).unwrap();
        assert_eq!(cut, vec![Some(1.5), Some(6.0)]);
        // without a margin the first pair already flips at 1.0
        let cut0 = find_sigma_cutoffs(&AucCurveSet::reference_slide(), 0.0).unwrap();
        assert_eq!(cut0[0], Some(1.0));
    }

    #[test]
    fn reference_tile_cutoffs_characterization() {
        let cut = find_sigma_cutoffs(&AucCurveSet::reference_tile(), DEFAULT_CUTOFF_MARGIN).unwrap();
        assert_eq!(cut, vec![Some(1.5), Some(6.0)]);
    }

    #[test]
    fn cutoff_edge_cases() {
        let same = AucCurveSet {
            sigmas: vec![0.0, 1.0, 2.0],
            models: vec!["a".into(), "b".into()],
            auc: vec![vec![0.9, 0.8, 0.7], vec![0.9, 0.8, 0.7]],
        };
        assert_eq!(find_sigma_cutoffs(&same, 0.005).unwrap(), vec![None]);
        let better = AucCurveSet {
            auc: vec![vec![0.8, 0.7, 0.6], vec![0.81, 0.71, 0.61]],
            ..same.clone()
        };
        assert_eq!(find_sigma_cutoffs(&better, 0.005).unwrap(), vec![Some(0.0)]);
        let ragged = AucCurveSet {
            auc: vec![vec![0.8, 0.7], vec![0.81, 0.71, 0.61]],
            ..same.clone()
        };
        assert!(find_sigma_cutoffs(&ragged, 0.005).is_err());
        let single = AucCurveSet {
            models: vec!["a".into()],
            auc: vec![vec![0.8, 0.7, 0.6]],
            ..same
        };
        assert!(find_sigma_cutoffs(&single, 0.005).is_err());
    }

    #[test]
    fn policy_ordering() {
        assert!(ThresholdPolicy::default().validate().is_ok());
        let bad = ThresholdPolicy { theta_sharp: 500.0, theta_hi: 1.0, theta_lo: 2.0 };
        assert!(bad.validate().is_err());
    }
}
