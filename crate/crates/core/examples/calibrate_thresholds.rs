//! Turn σ cut-offs into LV routing thresholds.
//!
//! The cut-offs come from the shipped slide-level AUC table; the LV thresholds
//! come from the median LV-vs-σ curve of a synthetic sample.
//!
//! ```bash
//! cargo run --release --example calibrate_thresholds
//! ```

use blurmm::blursim::sigma_grid;
use blurmm::calib::{derive_lv_thresholds, find_sigma_cutoffs, lv_sigma_curve, AucCurveSet, DEFAULT_CUTOFF_MARGIN};
use blurmm::rng::RngSpec;
use blurmm::routeval::RoutingPolicy;
use blurmm::synth::{synthetic_corpus, CorpusSpec};

fn main() -> blurmm::Result<()> {
    let table = AucCurveSet::reference_slide();
    let cutoffs = find_sigma_cutoffs(&table, DEFAULT_CUTOFF_MARGIN)?;
    println!("cut-offs from {:?}: {:?}", table.models, cutoffs);

    let rng = RngSpec::new(42);
    let corpus = synthetic_corpus(&CorpusSpec { n_slides: 20, tiles_per_slide: 10, ..CorpusSpec::default() }, &rng)?;
    let mut sigmas = vec![0.0];
    sigmas.extend(sigma_grid());
    let curve = lv_sigma_curve(&corpus, &sigmas, 200, &rng)?;
    println!("{:>5} {:>10} {:>10} {:>10}", "sigma", "p25", "p50", "p75");
    for r in &curve.rows {
        println!("{:>5} {:>10.3} {:>10.3} {:>10.3}", r.sigma, r.p25, r.p50, r.p75);
    }

    let derived = derive_lv_thresholds(&curve, [cutoffs[0].unwrap(), cutoffs[1].unwrap()], 500.0)?;
    let p = derived.policy;
    println!("theta_hi {:.3}, theta_lo {:.4}", p.theta_hi, p.theta_lo);
    let policy = RoutingPolicy::from_thresholds(&p, ["base", "m05", "m10"])?;
    for theta in [800.0, p.theta_hi * 1.01, p.theta_hi, p.theta_lo, p.theta_lo * 0.99] {
        println!("  LV {theta:>10.4} -> {}", policy.route(theta)?);
    }
    Ok(())
}
