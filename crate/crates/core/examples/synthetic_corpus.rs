//! Generate the procedural two-class corpus and write it as PGM tiles plus a manifest.
//!
//! ```bash
//! cargo run --release --example synthetic_corpus -- /tmp/blurmm_corpus
//! ```

use std::path::PathBuf;

use blurmm::imgcore::laplacian_variance;
use blurmm::rng::RngSpec;
use blurmm::routeval::percentile_sorted;
use blurmm::synth::{synthetic_corpus, write_corpus, CorpusSpec};

fn main() -> blurmm::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from);
    let spec = CorpusSpec { n_slides: 20, tiles_per_slide: 10, ..CorpusSpec::default() };
    let corpus = synthetic_corpus(&spec, &RngSpec::new(42))?;

    let mut lv: Vec<f64> = (0..corpus.len())
        .map(|i| laplacian_variance(&corpus.load(i)?))
        .collect::<blurmm::Result<_>>()?;
    lv.sort_by(f64::total_cmp);
    let slides = corpus.slides();
    println!(
        "{} tiles over {} slides ({} class 0)",
        corpus.len(),
        slides.len(),
        slides.iter().filter(|s| s.1 == 0).count()
    );
    println!(
        "LV min {:.0}, median {:.0}, max {:.0}",
        lv[0],
        percentile_sorted(&lv, 0.5),
        lv[lv.len() - 1]
    );
    if let Some(dir) = out {
        write_corpus(&corpus, &dir)?;
        println!("wrote {}", dir.join("manifest.csv").display());
    }
    Ok(())
}
