//! Raster data model, PNM I/O, Gaussian blur, Laplacian-variance sharpness and tiling.

mod blur;
mod laplacian;
mod pnm;
mod raster;
mod tiling;

pub use blur::{gaussian_blur, gaussian_kernel_1d, Kernel1D};
pub use laplacian::{laplacian, laplacian_variance};
pub use pnm::{decode_pnm, encode_pnm, read_pnm, write_pnm};
pub use raster::Raster;
pub use tiling::{tile_raster, TileFilter, TilePosition};

/// Reflect-101 index: `... c b | a b c ... | b a`, edge pixel not duplicated.
#[inline]
pub(crate) fn reflect101(i: isize, n: usize) -> usize {
    let n = n as isize;
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - m;
    }
    m as usize
}
