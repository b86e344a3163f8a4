use serde::{Deserialize, Serialize};

use crate::calib::ThresholdPolicy;
use crate::error::{Error, Result};

/// An LV interval routed to one model. `upper` may be infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Band {
    pub model_id: String,
    pub lower: f64,
    pub lower_inclusive: bool,
    pub upper: f64,
    pub upper_inclusive: bool,
}

impl Band {
    pub fn contains(&self, theta: f64) -> bool {
        let above = if self.lower_inclusive { theta >= self.lower } else { theta > self.lower };
        let below = if self.upper_inclusive { theta <= self.upper } else { theta < self.upper };
        above && below
    }
}

/// Ordered LV bands that partition `[0, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoutingPolicy {
    pub bands: Vec<Band>,
}

impl RoutingPolicy {
    pub fn new(bands: Vec<Band>) -> Result<Self> {
        let p = Self { bands };
        p.validate()?;
        Ok(p)
    }

    /// `θ > hi` → `ids[0]`, `lo ≤ θ ≤ hi` → `ids[1]`, `θ < lo` → `ids[2]`.
    pub fn from_thresholds(thresholds: &ThresholdPolicy, ids: [&str; 3]) -> Result<Self> {
        let (hi, lo) = (thresholds.theta_hi, thresholds.theta_lo);
        Self::new(vec![
            Band { model_id: ids[0].into(), lower: hi, lower_inclusive: false, upper: f64::INFINITY, upper_inclusive: false },
            Band { model_id: ids[1].into(), lower: lo, lower_inclusive: true, upper: hi, upper_inclusive: true },
            Band { model_id: ids[2].into(), lower: 0.0, lower_inclusive: true, upper: lo, upper_inclusive: false },
        ])
    }

    /// Everything goes to one model.
    pub fn single(model_id: &str) -> Self {
        Self {
            bands: vec![Band {
                model_id: model_id.into(),
                lower: 0.0,
                lower_inclusive: true,
                upper: f64::INFINITY,
                upper_inclusive: false,
            }],
        }
    }

    /// Checks that the bands tile `[0, ∞)` without gaps or overlaps.
    pub fn validate(&self) -> Result<()> {
        let mut sorted: Vec<&Band> = self.bands.iter().collect();
        sorted.sort_by(|a, b| a.lower.total_cmp(&b.lower));
        let first = sorted.first().ok_or_else(|| Error::Config("routing policy has no bands".into()))?;
        if first.lower != 0.0 || !first.lower_inclusive {
            return Err(Error::Config("routing bands must start at LV 0 inclusive".into()));
        }
        for pair in sorted.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if a.upper != b.lower || a.upper_inclusive == b.lower_inclusive {
                return Err(Error::Config(format!(
                    "bands {} and {} leave a gap or overlap at LV {}",
                    a.model_id, b.model_id, a.upper
                )));
            }
        }
        let last = sorted.last().expect("nonempty");
        if last.upper != f64::INFINITY {
            return Err(Error::Config("last routing band must be unbounded above".into()));
        }
        if sorted.iter().any(|b| !(b.lower < b.upper) || b.lower.is_nan()) {
            return Err(Error::Config("every band needs lower < upper".into()));
        }
        Ok(())
    }

    /// Model id for an LV value.
    pub fn route(&self, theta: f64) -> Result<&str> {
        if !theta.is_finite() || theta < 0.0 {
            return Err(Error::domain(format!("LV must be finite and >= 0, got {theta}")));
        }
        self.bands
            .iter()
            .find(|b| b.contains(theta))
            .map(|b| b.model_id.as_str())
            .ok_or_else(|| Error::Config(format!("no routing band covers LV {theta}")))
    }

    pub fn model_ids(&self) -> Vec<&str> {
        self.bands.iter().map(|b| b.model_id.as_str()).collect()
    }
}
