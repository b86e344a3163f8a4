//! Controlled Gaussian blur over tile corpora: fixed-σ sets and mixed-blur scenarios.

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{write_manifest, Corpus, GroupName, TileRecord, TileSource};
use crate::error::{Error, Result};
use crate::imgcore::{gaussian_blur, laplacian_variance, write_pnm, Raster};
use crate::rng::{Purpose, RngSpec, Stream};

/// The fourteen blur levels of the fixed-σ validation sets (σ = 0 is the unblurred baseline).
pub fn sigma_grid() -> Vec<f64> {
    vec![
        0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0,
    ]
}

/// A uniform σ range `[sigma_lo, sigma_hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlurGroup {
    pub name: GroupName,
    pub sigma_lo: f64,
    pub sigma_hi: f64,
}

impl BlurGroup {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_lo.is_finite() && self.sigma_hi.is_finite())
            || self.sigma_lo < 0.0
            || self.sigma_hi <= self.sigma_lo
        {
            return Err(Error::Config(format!(
                "group {}: need 0 <= sigma_lo < sigma_hi, got [{}, {})",
                self.name, self.sigma_lo, self.sigma_hi
            )));
        }
        Ok(())
    }
}

/// Slight (A), moderate (B) and heavy (C) blur.
pub fn default_groups() -> [BlurGroup; 3] {
    [
        BlurGroup { name: GroupName::A, sigma_lo: 0.0, sigma_hi: 1.5 },
        BlurGroup { name: GroupName::B, sigma_lo: 1.5, sigma_hi: 6.0 },
        BlurGroup { name: GroupName::C, sigma_lo: 6.0, sigma_hi: 10.0 },
    ]
}

/// Proportions of tiles drawn from groups A, B and C.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: u32,
    pub p_a: f64,
    pub p_b: f64,
    pub p_c: f64,
}

impl Scenario {
    pub fn new(id: u32, p_a: f64, p_b: f64, p_c: f64) -> Result<Self> {
        let s = Self { id, p_a, p_b, p_c };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let ps = [self.p_a, self.p_b, self.p_c];
        if ps.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config(format!("scenario {}: proportions must lie in [0, 1]", self.id)));
        }
        if (ps.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("scenario {}: proportions must sum to 1", self.id)));
        }
        Ok(())
    }

    /// Categorical draw from a uniform `u` in `[0, 1)`.
    pub fn pick(&self, u: f64) -> GroupName {
        if u < self.p_a {
            GroupName::A
        } else if u < self.p_a + self.p_b {
            GroupName::B
        } else if self.p_c > 0.0 {
            GroupName::C
        } else if self.p_b > 0.0 {
            // rounding in p_a + p_b can leave a sliver above the last nonzero group
            GroupName::B
        } else {
            GroupName::A
        }
    }

    /// Short label such as `A/B/C = 50/25/25`.
    pub fn label(&self) -> String {
        format!(
            "A/B/C = {}/{}/{}",
            (self.p_a * 100.0).round(),
            (self.p_b * 100.0).round(),
            (self.p_c * 100.0).round()
        )
    }
}

/// The eight mixed-blur scenarios.
pub fn scenario_table() -> Vec<Scenario> {
    [
        (1.0, 0.0, 0.0),
        (0.0, 1.0, 0.0),
        (0.0, 0.0, 1.0),
        (0.5, 0.25, 0.25),
        (0.25, 0.5, 0.25),
        (0.25, 0.25, 0.5),
        (0.5, 0.5, 0.0),
        (0.8, 0.15, 0.05),
    ]
    .iter()
    .enumerate()
    .map(|(i, &(a, b, c))| Scenario { id: i as u32 + 1, p_a: a, p_b: b, p_c: c })
    .collect()
}

fn group_of(groups: &[BlurGroup; 3], name: GroupName) -> &BlurGroup {
    groups.iter().find(|g| g.name == name).expect("all three groups present")
}

fn blur_stream(rng: &RngSpec, corpus: &Corpus, index: usize) -> Stream {
    let r = &corpus.records()[index];
    rng.tile_stream(&r.slide_id, corpus.ordinal(index), Purpose::BlurAssignment)
}

/// Independent categorical group draw per tile from its own stream.
pub fn assign_groups(corpus: &Corpus, scenario: &Scenario, rng: &RngSpec) -> Vec<GroupName> {
    (0..corpus.len())
        .map(|i| scenario.pick(blur_stream(rng, corpus, i).next_f64()))
        .collect()
}

/// `a + (b - a) u` with `u` uniform in `[0, 1)`.
pub fn sample_sigma(group: &BlurGroup, stream: &mut Stream) -> f64 {
    group.sigma_lo + (group.sigma_hi - group.sigma_lo) * stream.next_f64()
}

/// Blurs each tile on load by its record's `g_i`.
struct BlurredSource {
    inner: Arc<dyn TileSource>,
}

impl TileSource for BlurredSource {
    fn load(&self, record: &TileRecord, ordinal: u64) -> Result<Raster> {
        let raster = self.inner.load(record, ordinal)?;
        gaussian_blur(&raster, record.g_i.unwrap_or(0.0))
    }
}

fn blur_with(corpus: &Corpus, added: impl Fn(usize, &TileRecord) -> (f64, Option<GroupName>)) -> Result<Corpus> {
    let records = corpus
        .records()
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let (g_i, group) = added(i, r);
            let mut out = r.clone();
            out.g = r.blur_level();
            out.theta = None;
            out.with_added_blur(g_i, group)
        })
        .collect();
    corpus.with_source(records, Arc::new(BlurredSource { inner: corpus.source() }))
}

/// Every tile blurred at exactly `sigma`. Pixels are produced lazily on load.
pub fn apply_fixed_blur(corpus: &Corpus, sigma: f64) -> Result<Corpus> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::domain(format!("sigma must be finite and >= 0, got {sigma}")));
    }
    blur_with(corpus, |_, _| (sigma, None))
}

/// Draws a group and a σ per tile, then blurs lazily. Deterministic in the tile keys.
pub fn apply_scenario(
    corpus: &Corpus,
    scenario: &Scenario,
    groups: &[BlurGroup; 3],
    rng: &RngSpec,
) -> Result<Corpus> {
    scenario.validate()?;
    for g in groups {
        g.validate()?;
    }
    blur_with(corpus, |i, _| {
        let mut stream = blur_stream(rng, corpus, i);
        let name = scenario.pick(stream.next_f64());
        (sample_sigma(group_of(groups, name), &mut stream), Some(name))
    })
}

/// Writes every tile under `dir` and a manifest whose `theta` is the LV of the written file.
pub fn write_blurred(corpus: &Corpus, dir: &Path) -> Result<Vec<TileRecord>> {
    let records: Vec<TileRecord> = (0..corpus.len())
        .into_par_iter()
        .map(|i| {
            let rec = &corpus.records()[i];
            let raster = corpus.load(i)?.quantized();
            write_pnm(&dir.join(&rec.path), &raster)?;
            let mut out = rec.clone();
            out.theta = Some(laplacian_variance(&raster)?);
            Ok(out)
        })
        .collect::<Result<_>>()?;
    write_manifest(&dir.join("manifest.csv"), &records)?;
    Ok(records)
}
