//! Blur one procedural tile at increasing σ and watch its Laplacian variance fall.
//!
//! ```bash
//! cargo run --release --example blur_and_sharpness -- /tmp/blurmm_tiles
//! ```

use std::path::PathBuf;

use blurmm::imgcore::{gaussian_blur, gaussian_kernel_1d, laplacian_variance, write_pnm};
use blurmm::rng::{Purpose, RngSpec};
use blurmm::synth::CorpusSpec;

fn main() -> blurmm::Result<()> {
    let out: Option<PathBuf> = std::env::args().nth(1).map(PathBuf::from);
    let spec = CorpusSpec::default();
    let mut stream = RngSpec::new(1).tile_stream("demo", 0, Purpose::Texture);
    let tile = spec.render(1, &mut stream);

    println!("{:>6} {:>7} {:>12}", "sigma", "radius", "LV");
    for sigma in [0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 6.0, 10.0] {
        let blurred = gaussian_blur(&tile, sigma)?;
        let radius = if sigma > 0.0 { gaussian_kernel_1d(sigma)?.radius() } else { 0 };
        println!("{sigma:>6} {radius:>7} {:>12.3}", laplacian_variance(&blurred)?);
        if let Some(dir) = &out {
            write_pnm(&dir.join(format!("sigma_{sigma}.pgm")), &blurred.quantized())?;
        }
    }
    Ok(())
}
