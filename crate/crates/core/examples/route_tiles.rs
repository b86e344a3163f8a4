//! Route each tile of a mixed-blur corpus to a band model by its measured LV.
//!
//! ```bash
//! cargo run --release --example route_tiles
//! ```

use blurmm::blursim::{apply_scenario, default_groups, Scenario};
use blurmm::calib::ThresholdPolicy;
use blurmm::predict::default_analytic_roster;
use blurmm::rng::RngSpec;
use blurmm::routeval::{deepblurmm_predict, RoutingPolicy};
use blurmm::synth::{synthetic_corpus, CorpusSpec};

fn main() -> blurmm::Result<()> {
    let rng = RngSpec::new(42);
    let corpus = synthetic_corpus(&CorpusSpec { n_slides: 4, tiles_per_slide: 4, ..CorpusSpec::default() }, &rng)?;
    let blurred = apply_scenario(&corpus, &Scenario::new(4, 0.5, 0.25, 0.25)?, &default_groups(), &rng)?;
    let thresholds = ThresholdPolicy { theta_sharp: 500.0, theta_hi: 19.0, theta_lo: 0.09 };
    let policy = RoutingPolicy::from_thresholds(&thresholds, ["base", "m05", "m10"])?;

    let (scores, trace) = deepblurmm_predict(&blurred, &policy, &default_analytic_roster(), &rng, None)?;
    println!("{:<12} {:>6} {:>10} {:>6} {:>6}", "tile", "sigma", "LV", "model", "score");
    for ((rec, t), s) in blurred.records().iter().zip(&trace).zip(&scores) {
        println!(
            "{:<12} {:>6.2} {:>10.3} {:>6} {:>6.3}",
            t.tile_id,
            rec.blur_level(),
            t.theta,
            t.model_id,
            s.value
        );
    }
    Ok(())
}
