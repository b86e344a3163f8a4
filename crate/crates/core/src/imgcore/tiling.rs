use super::laplacian::laplacian_variance;
use super::raster::Raster;
use crate::error::{Error, Result};

/// Quality-control rule for grid tiles.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TileFilter {
    pub tile_size: usize,
    /// Minimum fraction of tissue pixels in a kept tile.
    pub tissue_min_fraction: f64,
    /// A pixel is tissue when its gray value is at most this (255 minus the darkness threshold 25).
    pub tissue_gray_max: f64,
    /// Minimum Laplacian variance of a kept tile.
    pub lv_min: f64,
}

impl Default for TileFilter {
    fn default() -> Self {
        Self {
            tile_size: 598,
            tissue_min_fraction: 0.5,
            tissue_gray_max: 230.0,
            lv_min: 500.0,
        }
    }
}

/// Grid location of a tile inside its source raster.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TilePosition {
    pub row: usize,
    pub col: usize,
    pub x: usize,
    pub y: usize,
}

fn tissue_fraction(gray: &Raster, gray_max: f64) -> f64 {
    let n = gray.pixels().len();
    let tissue = gray.pixels().iter().filter(|&&v| v <= gray_max).count();
    tissue as f64 / n as f64
}

/// Cuts a non-overlapping grid from the top-left and keeps the tiles that pass `filter`.
///
/// Partial strips at the right and bottom edges are dropped.
pub fn tile_raster(raster: &Raster, filter: &TileFilter) -> Result<Vec<(Raster, TilePosition)>> {
    let size = filter.tile_size;
    if size < 3 {
        return Err(Error::domain(format!("tile_size must be >= 3, got {size}")));
    }
    let mut kept = Vec::new();
    for row in 0..raster.height() / size {
        for col in 0..raster.width() / size {
            let (x, y) = (col * size, row * size);
            let tile = raster.crop(x, y, size, size)?;
            let gray = tile.to_grayscale();
            if tissue_fraction(&gray, filter.tissue_gray_max) < filter.tissue_min_fraction {
                continue;
            }
            if laplacian_variance(&gray)? < filter.lv_min {
                continue;
            }
            kept.push((tile, TilePosition { row, col, x, y }));
        }
    }
    Ok(kept)
}
