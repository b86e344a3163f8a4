//! Cut a flat slide raster into tiles and keep those that pass tissue and sharpness QC.
//!
//! The slide is a white canvas with a procedural tissue region; the right third
//! is left blank and the bottom-left tile is blurred out of focus.
//!
//! ```bash
//! cargo run --release --example tile_slide
//! ```

use blurmm::imgcore::{gaussian_blur, tile_raster, Raster, TileFilter};
use blurmm::rng::{Purpose, RngSpec};
use blurmm::synth::CorpusSpec;

fn main() -> blurmm::Result<()> {
    let spec = CorpusSpec::default();
    let size = spec.tile_size;
    let (cols, rows) = (3, 2);
    let mut pixels = vec![255.0; cols * size * rows * size];
    let rng = RngSpec::new(5);
    for row in 0..rows {
        for col in 0..cols - 1 {
            let mut stream = rng.tile_stream("slide", (row * cols + col) as u64, Purpose::Texture);
            let mut tile = spec.render(1, &mut stream);
            if (row, col) == (1, 0) {
                tile = gaussian_blur(&tile, 4.0)?;
            }
            for y in 0..size {
                for x in 0..size {
                    pixels[(row * size + y) * cols * size + col * size + x] = tile.get(x, y, 0);
                }
            }
        }
    }
    let slide = Raster::new(cols * size, rows * size, 1, pixels)?;
    let filter = TileFilter { tile_size: size, ..TileFilter::default() };
    let kept = tile_raster(&slide, &filter)?;
    println!("grid {rows}x{cols}, kept {} tiles:", kept.len());
    for (_, pos) in &kept {
        println!("  row {} col {} at ({}, {})", pos.row, pos.col, pos.x, pos.y);
    }
    Ok(())
}
