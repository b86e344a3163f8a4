//! Tile records, the manifest CSV and corpora backed by disk, memory or a generator.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{read_pnm, Raster};

/// Manifest column order.
pub const MANIFEST_HEADER: [&str; 9] = [
    "tile_id", "slide_id", "label", "path", "g", "g_i", "g_hat", "group", "theta",
];

/// Blur group a tile was assigned to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GroupName {
    A,
    B,
    C,
}

impl fmt::Display for GroupName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GroupName::A => "A",
            GroupName::B => "B",
            GroupName::C => "C",
        };
        f.write_str(s)
    }
}

/// One tile: identity, slide membership, class label and blur bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileRecord {
    pub tile_id: String,
    pub slide_id: String,
    /// 0 for the low-grade class, 1 for the high-grade class.
    pub label: u8,
    pub path: String,
    /// Initial blur level.
    pub g: f64,
    /// Added blur level.
    pub g_i: Option<f64>,
    /// Recorded blur level `g + g_i`.
    pub g_hat: Option<f64>,
    pub group: Option<GroupName>,
    /// Measured Laplacian variance.
    pub theta: Option<f64>,
}

impl TileRecord {
    pub fn new(tile_id: impl Into<String>, slide_id: impl Into<String>, label: u8, path: impl Into<String>) -> Self {
        Self {
            tile_id: tile_id.into(),
            slide_id: slide_id.into(),
            label,
            path: path.into(),
            g: 0.0,
            g_i: None,
            g_hat: None,
            group: None,
            theta: None,
        }
    }

    /// Records an added blur `g_i` and sets `g_hat = g + g_i`.
    pub fn with_added_blur(mut self, g_i: f64, group: Option<GroupName>) -> Self {
        self.g_i = Some(g_i);
        self.g_hat = Some(self.g + g_i);
        self.group = group;
        self
    }

    /// Blur level used by predictors: `g_hat` when set, otherwise the initial level.
    pub fn blur_level(&self) -> f64 {
        self.g_hat.unwrap_or(self.g)
    }

    pub fn validate(&self) -> Result<()> {
        let ctx = |m: String| Error::domain(format!("tile {}: {m}", self.tile_id));
        if self.label > 1 {
            return Err(ctx(format!("label must be 0 or 1, got {}", self.label)));
        }
        let non_negative = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(ctx(format!("{name} must be finite and >= 0, got {v}")))
            }
        };
        non_negative("g", self.g)?;
        if let Some(v) = self.g_i {
            non_negative("g_i", v)?;
        }
        if let Some(v) = self.g_hat {
            non_negative("g_hat", v)?;
        }
        if let Some(v) = self.theta {
            non_negative("theta", v)?;
        }
        if let Some(g_i) = self.g_i {
            if self.g_hat != Some(self.g + g_i) {
                return Err(ctx(format!(
                    "g_hat {:?} does not equal g + g_i = {}",
                    self.g_hat,
                    self.g + g_i
                )));
            }
        }
        Ok(())
    }
}

pub fn write_manifest(path: &Path, records: &[TileRecord]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for r in records {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Vec<TileRecord>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != MANIFEST_HEADER {
        return Err(Error::format(
            "manifest header",
            format!("expected {}, found {}", MANIFEST_HEADER.join(","), headers.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut out = Vec::new();
    for (line, row) in rdr.deserialize::<TileRecord>().enumerate() {
        let rec = row.map_err(|e| Error::format(format!("manifest row {}", line + 2), e.to_string()))?;
        rec.validate()?;
        out.push(rec);
    }
    Ok(out)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(path.display().to_string(), format!("{other:?}")),
    }
}

/// Supplies the pixels of a tile.
pub trait TileSource: Send + Sync {
    fn load(&self, record: &TileRecord, ordinal: u64) -> Result<Raster>;
}

/// Tiles stored as PNM files relative to a root directory.
pub struct DiskSource {
    root: PathBuf,
}

impl DiskSource {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }
}

impl TileSource for DiskSource {
    fn load(&self, record: &TileRecord, _ordinal: u64) -> Result<Raster> {
        read_pnm(&self.root.join(&record.path))
    }
}

/// Tiles held in memory, keyed by tile id.
pub struct MemorySource {
    rasters: HashMap<String, Raster>,
}

impl TileSource for MemorySource {
    fn load(&self, record: &TileRecord, _ordinal: u64) -> Result<Raster> {
        self.rasters
            .get(&record.tile_id)
            .cloned()
            .ok_or_else(|| Error::domain(format!("no raster for tile {}", record.tile_id)))
    }
}

struct NoPixels;

impl TileSource for NoPixels {
    fn load(&self, record: &TileRecord, _ordinal: u64) -> Result<Raster> {
        Err(Error::domain(format!(
            "corpus has no pixel data (tile {})",
            record.tile_id
        )))
    }
}

/// A set of tile records with their pixel source.
///
/// Each tile has an ordinal, its position within its slide in record order, which
/// keys its random streams; the ordinal survives slide-level subsetting.
#[derive(Clone)]
pub struct Corpus {
    records: Vec<TileRecord>,
    ordinals: Vec<u64>,
    source: Arc<dyn TileSource>,
}

impl fmt::Debug for Corpus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Corpus")
            .field("tiles", &self.records.len())
            .finish_non_exhaustive()
    }
}

impl Corpus {
    pub fn new(records: Vec<TileRecord>, source: Arc<dyn TileSource>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut slide_labels: HashMap<&str, u8> = HashMap::new();
        let mut next_ordinal: HashMap<&str, u64> = HashMap::new();
        let mut ordinals = Vec::with_capacity(records.len());
        for r in &records {
            r.validate()?;
            if !seen.insert(r.tile_id.as_str()) {
                return Err(Error::domain(format!("duplicate tile id {}", r.tile_id)));
            }
            let label = *slide_labels.entry(&r.slide_id).or_insert(r.label);
            if label != r.label {
                return Err(Error::domain(format!(
                    "slide {} mixes labels {} and {}",
                    r.slide_id, label, r.label
                )));
            }
            let ord = next_ordinal.entry(&r.slide_id).or_insert(0);
            ordinals.push(*ord);
            *ord += 1;
        }
        Ok(Self {
            records,
            ordinals,
            source,
        })
    }

    /// Loads a manifest; tile paths resolve relative to the manifest's directory.
    pub fn from_manifest(path: &Path) -> Result<Self> {
        let records = read_manifest(path)?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::new(records, Arc::new(DiskSource::new(root)))
    }

    pub fn in_memory(tiles: Vec<(TileRecord, Raster)>) -> Result<Self> {
        let mut rasters = HashMap::with_capacity(tiles.len());
        let mut records = Vec::with_capacity(tiles.len());
        for (rec, raster) in tiles {
            rasters.insert(rec.tile_id.clone(), raster);
            records.push(rec);
        }
        Self::new(records, Arc::new(MemorySource { rasters }))
    }

    /// A corpus of records only, for predictors that never look at pixels.
    pub fn records_only(records: Vec<TileRecord>) -> Result<Self> {
        Self::new(records, Arc::new(NoPixels))
    }

    pub fn records(&self) -> &[TileRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn ordinal(&self, index: usize) -> u64 {
        self.ordinals[index]
    }

    pub fn load(&self, index: usize) -> Result<Raster> {
        let r = &self.records[index];
        self.source
            .load(r, self.ordinals[index])
            .map_err(|e| e.with_tile(&r.tile_id))
    }

    /// Same pixels, different records (used after blurring bookkeeping changes).
    pub fn with_records(&self, records: Vec<TileRecord>) -> Result<Self> {
        if records.len() != self.records.len() {
            return Err(Error::domain("record count mismatch"));
        }
        Ok(Self {
            records,
            ordinals: self.ordinals.clone(),
            source: Arc::clone(&self.source),
        })
    }

    /// Replaces records and pixel source together, keeping ordinals.
    pub fn with_source(&self, records: Vec<TileRecord>, source: Arc<dyn TileSource>) -> Result<Self> {
        if records.len() != self.records.len() {
            return Err(Error::domain("record count mismatch"));
        }
        for r in &records {
            r.validate()?;
        }
        Ok(Self {
            records,
            ordinals: self.ordinals.clone(),
            source,
        })
    }

    pub(crate) fn source(&self) -> Arc<dyn TileSource> {
        Arc::clone(&self.source)
    }

    /// Keeps only tiles whose slide is in `slides`, preserving ordinals.
    pub fn subset_slides(&self, slides: &HashSet<String>) -> Corpus {
        self.retain_indices(|i| slides.contains(&self.records[i].slide_id))
    }

    /// Keeps the tiles at the indices for which `keep` returns true, preserving ordinals.
    pub fn retain_indices(&self, keep: impl Fn(usize) -> bool) -> Corpus {
        let (records, ordinals) = (0..self.records.len())
            .filter(|&i| keep(i))
            .map(|i| (self.records[i].clone(), self.ordinals[i]))
            .unzip();
        Corpus {
            records,
            ordinals,
            source: Arc::clone(&self.source),
        }
    }

    /// `(slide_id, label)` pairs sorted by slide id.
    pub fn slides(&self) -> Vec<(String, u8)> {
        let map: BTreeMap<&str, u8> = self
            .records
            .iter()
            .map(|r| (r.slide_id.as_str(), r.label))
            .collect();
        map.into_iter().map(|(s, l)| (s.to_string(), l)).collect()
    }
}
