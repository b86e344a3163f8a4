//! Procedural tile corpus: two classes that differ only in fine, high-contrast speckles.
//!
//! Class-0 tiles are a bright background with large soft dark blobs and sparse
//! speckles; class-1 tiles add dense speckles. Both carry additive Gaussian noise.
//! Every tile is a pure function of the spec, the master seed and its
//! `(slide_id, ordinal)` key, so the corpus can be regenerated instead of stored.

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{write_manifest, Corpus, TileRecord, TileSource};
use crate::error::{Error, Result};
use crate::imgcore::{laplacian_variance, write_pnm, Raster};
use crate::rng::{Purpose, RngSpec, Stream};

/// Generator parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusSpec {
    pub n_slides: usize,
    pub tiles_per_slide: usize,
    /// Fraction of slides that belong to class 0.
    pub class0_fraction: f64,
    pub tile_size: usize,
    pub background: f64,
    pub blob_count_min: usize,
    pub blob_count_max: usize,
    pub blob_radius_min: f64,
    pub blob_radius_max: f64,
    pub blob_amplitude_min: f64,
    pub blob_amplitude_max: f64,
    /// Width of the blob edge transition in pixels.
    pub blob_edge: f64,
    /// Per-tile speckle density (fraction of pixels) drawn uniformly from these ranges.
    pub class0_speckle_density: [f64; 2],
    pub class1_speckle_density: [f64; 2],
    pub speckle_amplitude_min: f64,
    pub speckle_amplitude_max: f64,
    /// Gaussian profile sd of each speckle in pixels; 0 stamps single pixels.
    pub speckle_radius: f64,
    pub noise_sd: f64,
    /// Per-tile noise sd is drawn uniformly from `[noise_sd, noise_sd_max]`.
    pub noise_sd_max: f64,
    /// Minimum Laplacian variance every generated tile must reach.
    pub lv_min: f64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            n_slides: 200,
            tiles_per_slide: 20,
            class0_fraction: 0.4,
            tile_size: 128,
            background: 200.0,
            blob_count_min: 2,
            blob_count_max: 6,
            blob_radius_min: 12.0,
            blob_radius_max: 28.0,
            blob_amplitude_min: 40.0,
            blob_amplitude_max: 90.0,
            blob_edge: 2.0,
            class0_speckle_density: [0.004, 0.016],
            class1_speckle_density: [0.010, 0.030],
            speckle_amplitude_min: 40.0,
            speckle_amplitude_max: 80.0,
            speckle_radius: 1.6,
            noise_sd: 5.0,
            noise_sd_max: 10.0,
            lv_min: 500.0,
        }
    }
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("corpus: {m}")));
        if self.n_slides < 2 {
            return bad("n_slides must be >= 2");
        }
        if self.tiles_per_slide < 1 {
            return bad("tiles_per_slide must be >= 1");
        }
        let n0 = self.class0_slides();
        if n0 == 0 || n0 == self.n_slides {
            return bad("class balance leaves one class without slides");
        }
        if self.tile_size < 3 {
            return bad("tile_size must be >= 3");
        }
        if self.blob_count_min > self.blob_count_max
            || self.blob_radius_min > self.blob_radius_max
            || self.blob_amplitude_min > self.blob_amplitude_max
            || self.speckle_amplitude_min > self.speckle_amplitude_max
        {
            return bad("min/max ranges must be ordered");
        }
        for d in [self.class0_speckle_density, self.class1_speckle_density] {
            if !(0.0 <= d[0] && d[0] <= d[1] && d[1] <= 1.0) {
                return bad("speckle density ranges must satisfy 0 <= lo <= hi <= 1");
            }
        }
        if !(self.noise_sd_max >= self.noise_sd) {
            return bad("noise_sd_max must be >= noise_sd");
        }
        if self.noise_sd < 0.0 || self.blob_edge <= 0.0 || self.speckle_radius < 0.0 {
            return bad("noise_sd and speckle_radius must be >= 0 and blob_edge > 0");
        }
        Ok(())
    }

    pub fn class0_slides(&self) -> usize {
        (self.n_slides as f64 * self.class0_fraction).round() as usize
    }

    pub fn slide_id(slide: usize) -> String {
        format!("s{slide:04}")
    }

    pub fn tile_id(slide: usize, ordinal: usize) -> String {
        format!("s{slide:04}_t{ordinal:03}")
    }

    /// Records for every tile, labels shuffled across slides by the master seed.
    pub fn records(&self, rng: &RngSpec) -> Vec<TileRecord> {
        let mut labels: Vec<u8> = (0..self.n_slides)
            .map(|i| u8::from(i >= self.class0_slides()))
            .collect();
        rng.stream(Purpose::Shuffle(0x51DE_1ABE)).shuffle(&mut labels);
        let mut records = Vec::with_capacity(self.n_slides * self.tiles_per_slide);
        for (slide, &label) in labels.iter().enumerate() {
            for t in 0..self.tiles_per_slide {
                let tile_id = Self::tile_id(slide, t);
                let path = format!("tiles/{}/{tile_id}.pgm", Self::slide_id(slide));
                records.push(TileRecord::new(tile_id, Self::slide_id(slide), label, path));
            }
        }
        records
    }

    /// Renders one tile, quantized to 8-bit values.
    pub fn render(&self, label: u8, stream: &mut Stream) -> Raster {
        let n = self.tile_size;
        let mut px = vec![self.background; n * n];
        let uniform = |s: &mut Stream, lo: f64, hi: f64| lo + (hi - lo) * s.next_f64();

        let spread = (self.blob_count_max - self.blob_count_min) as u64 + 1;
        let blobs = self.blob_count_min + stream.below(spread) as usize;
        for _ in 0..blobs {
            let cx = uniform(stream, 0.0, n as f64);
            let cy = uniform(stream, 0.0, n as f64);
            let radius = uniform(stream, self.blob_radius_min, self.blob_radius_max);
            let amp = uniform(stream, self.blob_amplitude_min, self.blob_amplitude_max);
            let reach = radius + 6.0 * self.blob_edge;
            let x0 = (cx - reach).floor().max(0.0) as usize;
            let x1 = ((cx + reach).ceil() as usize).min(n);
            let y0 = (cy - reach).floor().max(0.0) as usize;
            let y1 = ((cy + reach).ceil() as usize).min(n);
            for y in y0..y1 {
                for x in x0..x1 {
                    let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
                    px[y * n + x] -= amp / (1.0 + ((d - radius) / self.blob_edge).exp());
                }
            }
        }

        let range = if label == 0 {
            self.class0_speckle_density
        } else {
            self.class1_speckle_density
        };
        let density = uniform(stream, range[0], range[1]);
        let count = (density * (n * n) as f64).round() as usize;
        let reach = (3.0 * self.speckle_radius).ceil() as isize;
        for _ in 0..count {
            let idx = stream.below((n * n) as u64) as usize;
            let amp = uniform(stream, self.speckle_amplitude_min, self.speckle_amplitude_max);
            if reach == 0 {
                px[idx] -= amp;
                continue;
            }
            let (cx, cy) = ((idx % n) as isize, (idx / n) as isize);
            let denom = 2.0 * self.speckle_radius * self.speckle_radius;
            for y in (cy - reach).max(0)..(cy + reach + 1).min(n as isize) {
                for x in (cx - reach).max(0)..(cx + reach + 1).min(n as isize) {
                    let d2 = ((x - cx).pow(2) + (y - cy).pow(2)) as f64;
                    px[y as usize * n + x as usize] -= amp * (-d2 / denom).exp();
                }
            }
        }

        let noise_sd = uniform(stream, self.noise_sd, self.noise_sd_max);
        if noise_sd > 0.0 {
            for v in px.iter_mut() {
                *v += noise_sd * stream.next_normal();
            }
        }
        for v in px.iter_mut() {
            *v = f64::from(Raster::quantize(*v));
        }
        Raster::from_parts_unchecked(n, n, 1, px)
    }
}

/// Regenerates tiles on demand from the generator spec.
pub struct SyntheticSource {
    spec: CorpusSpec,
    rng: RngSpec,
}

impl SyntheticSource {
    pub fn new(spec: CorpusSpec, rng: RngSpec) -> Self {
        Self { spec, rng }
    }
}

impl TileSource for SyntheticSource {
    fn load(&self, record: &TileRecord, ordinal: u64) -> Result<Raster> {
        let mut stream = self.rng.tile_stream(&record.slide_id, ordinal, Purpose::Texture);
        Ok(self.spec.render(record.label, &mut stream))
    }
}

/// Builds the procedural corpus, dropping tiles below the sharpness floor.
///
/// Fails when more than 1% of tiles miss the floor, since that signals a
/// parameter set that no longer produces sharp tiles.
pub fn synthetic_corpus(spec: &CorpusSpec, rng: &RngSpec) -> Result<Corpus> {
    spec.validate()?;
    let source = Arc::new(SyntheticSource::new(spec.clone(), *rng));
    let all = Corpus::new(spec.records(rng), source.clone())?;
    let passing: Vec<bool> = (0..all.len())
        .into_par_iter()
        .map(|i| Ok(laplacian_variance(&all.load(i)?)? >= spec.lv_min))
        .collect::<Result<_>>()?;
    let failed = passing.iter().filter(|p| !**p).count();
    if failed as f64 > 0.01 * all.len() as f64 {
        return Err(Error::Config(format!(
            "{failed} of {} generated tiles fall below LV {}; raise noise_sd or speckle density",
            all.len(),
            spec.lv_min
        )));
    }
    if failed == 0 {
        return Ok(all);
    }
    Ok(all.retain_indices(|i| passing[i]))
}

/// Writes every tile as PGM under `dir` plus `dir/manifest.csv`.
pub fn write_corpus(corpus: &Corpus, dir: &Path) -> Result<()> {
    (0..corpus.len()).into_par_iter().try_for_each(|i| {
        let raster = corpus.load(i)?;
        write_pnm(&dir.join(&corpus.records()[i].path), &raster)
    })?;
    write_manifest(&dir.join("manifest.csv"), corpus.records())
}
