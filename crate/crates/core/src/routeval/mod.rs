//! Blur-aware routing, slide aggregation, AUC, cross-validation splits and the
//! fixed-σ and scenario experiment drivers.

mod cv;
mod experiments;
mod metrics;
mod report;
mod routing;

pub use cv::{cv_split, CvFold, CvSplit};
pub use experiments::{
    deepblurmm_predict, evaluate_tiles, run_scenarios, slide_scores, sweep_fixed_blur, ApproachResult,
    Condition, ConditionResult, TileEvaluation, TraceRow, DEEPBLURMM,
};
pub use metrics::{aggregate_slide, auc, percentile_sorted, SlideScore};
pub use report::{Aggregation, BandCountRow, EvalReport, Level, ReportRow};
pub use routing::{Band, RoutingPolicy};
