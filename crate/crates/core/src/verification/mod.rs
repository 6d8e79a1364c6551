//! Statistical and finite-difference oracles for compensators.

mod harness;
mod laplacian;
mod montecarlo;
mod report;
mod stats;

pub use harness::{check_settings, run_verification, simulate_outcomes, Scenario, VerifyOutcome, VerifySettings};
pub use laplacian::laplacian_intensity;
pub use montecarlo::{map_paths, mc_survival, path_rng, with_threads, SurvivalEstimate};
pub use report::{report_csv, report_json};
pub use stats::{
    adjusted_threshold, martingale_residual_test, orthogonality_test, Bucketing, MartingaleReport, MartingaleRow,
    ObservedState, PathOutcome, DEFAULT_Z_MAX, FORMAT_VERSION, MIN_BUCKET, MIN_PATHS,
};
