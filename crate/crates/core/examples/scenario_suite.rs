//! Run the eight blur scenarios: routed multi-model against the base model alone,
//! on identical blurred tiles.
//!
//! ```bash
//! cargo run --release --example scenario_suite
//! ```

use blurmm::blursim::{default_groups, scenario_table, sigma_grid};
use blurmm::calib::{derive_lv_thresholds, lv_sigma_curve};
use blurmm::predict::default_analytic_roster;
use blurmm::rng::RngSpec;
use blurmm::routeval::{run_scenarios, Aggregation, EvalReport, RoutingPolicy};
use blurmm::synth::{synthetic_corpus, CorpusSpec};

fn main() -> blurmm::Result<()> {
    let rng = RngSpec::new(42);
    let corpus = synthetic_corpus(&CorpusSpec { n_slides: 60, tiles_per_slide: 10, ..CorpusSpec::default() }, &rng)?;
    let mut sigmas = vec![0.0];
    sigmas.extend(sigma_grid());
    let thresholds = derive_lv_thresholds(&lv_sigma_curve(&corpus, &sigmas, 300, &rng)?, [1.5, 6.0], 500.0)?;
    let policy = RoutingPolicy::from_thresholds(&thresholds.policy, ["base", "m05", "m10"])?;

    let scenarios = scenario_table();
    let results = run_scenarios(&corpus, &scenarios, &default_groups(), &policy, &default_analytic_roster(), "base", &rng, None)?;
    let report = EvalReport::from_results(&results)?;
    report.write_scenario_csv(std::io::stdout(), &scenarios, "base", Aggregation::All)?;
    for r in &results {
        println!("scenario {:?}: {:?}", r.condition.label(), r.band_counts);
    }
    Ok(())
}
