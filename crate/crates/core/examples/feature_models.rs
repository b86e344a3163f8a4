//! Train logistic feature models on sharp and on slightly blurred tiles, then
//! compare them on validation tiles at several blur levels.
//!
//! ```bash
//! cargo run --release --example feature_models
//! ```

use std::collections::HashSet;

use blurmm::blursim::apply_fixed_blur;
use blurmm::predict::{train_feature_model, PredictorSpec, TrainHyperparams};
use blurmm::rng::RngSpec;
use blurmm::routeval::{auc, cv_split, evaluate_tiles};
use blurmm::synth::{synthetic_corpus, CorpusSpec};

fn main() -> blurmm::Result<()> {
    let rng = RngSpec::new(42);
    let corpus = synthetic_corpus(&CorpusSpec { n_slides: 60, tiles_per_slide: 10, ..CorpusSpec::default() }, &rng)?;
    let fold = &cv_split(&corpus.slides(), 5, 42)?.folds[0];
    let train = corpus.subset_slides(&fold.train.iter().cloned().collect::<HashSet<_>>());
    let val = corpus.subset_slides(&fold.validation.iter().cloned().collect::<HashSet<_>>());

    let hp = TrainHyperparams::default();
    let models = vec![
        PredictorSpec::FeatureModel(train_feature_model("sharp", &train, 0.0, &hp)?),
        PredictorSpec::FeatureModel(train_feature_model("blur05", &train, 0.5, &hp)?),
    ];
    println!("{:>5} {:>8} {:>8}", "sigma", "sharp", "blur05");
    for sigma in [0.0, 0.5, 1.0, 2.0, 3.0] {
        let eval = evaluate_tiles(&apply_fixed_blur(&val, sigma)?, &models, None, &rng, None)?;
        let labels: Vec<u8> = eval.records.iter().map(|r| r.label).collect();
        println!(
            "{sigma:>5} {:>8.3} {:>8.3}",
            auc(&labels, &eval.scores[0])?,
            auc(&labels, &eval.scores[1])?
        );
    }
    Ok(())
}
