//! Sweep the analytic roster over fixed blur levels and recover its designed cut-offs.
//!
//! Analytic predictors only need blur levels, so the corpus carries no pixels.
//!
//! ```bash
//! cargo run --release --example fixed_blur_sweep
//! ```

use blurmm::blursim::sigma_grid;
use blurmm::calib::{find_sigma_cutoffs, DEFAULT_CUTOFF_MARGIN};
use blurmm::corpus::{Corpus, TileRecord};
use blurmm::predict::default_analytic_roster;
use blurmm::rng::RngSpec;
use blurmm::routeval::{sweep_fixed_blur, Aggregation, EvalReport, Level};

fn main() -> blurmm::Result<()> {
    let records = (0..200)
        .flat_map(|s| {
            let label = u8::from(s >= 80);
            (0..50).map(move |t| TileRecord::new(format!("s{s:03}_t{t:02}"), format!("s{s:03}"), label, ""))
        })
        .collect();
    let corpus = Corpus::records_only(records)?;
    let roster = default_analytic_roster();
    let results = sweep_fixed_blur(&corpus, &roster, &sigma_grid(), &RngSpec::new(42), None)?;
    let report = EvalReport::from_results(&results)?;

    let curves = report.curves(Level::Slide, Aggregation::All)?;
    curves.write_csv(std::io::stdout()).expect("stdout");
    println!("cut-offs: {:?}", find_sigma_cutoffs(&curves, DEFAULT_CUTOFF_MARGIN)?);
    Ok(())
}
