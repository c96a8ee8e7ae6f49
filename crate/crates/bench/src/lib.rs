//! Shared fixtures for the criterion microbenchmarks.
//!
//! The two-level estimator's headline claim is about throughput at matched
//! accuracy, so the benchmarks here pin one canonical problem per model
//! family and compare the plain and two-level methods on identical inputs.

use srmc::{CircleParams, DiffusionModel, GbmParams, TestFunction};

/// The at-the-money lognormal call used across the benchmark suite.
pub fn canonical_gbm() -> (DiffusionModel, TestFunction) {
    (
        DiffusionModel::Gbm(GbmParams {
            s0: 100.0,
            rate: 0.05,
            sigma: 0.2,
            horizon: 1.0,
        }),
        TestFunction::EuroCall { strike: 100.0 },
    )
}

/// The unit-circle rotation with the benchmark functional at exponent
/// `alpha`.
pub fn canonical_circle(alpha: f64) -> (DiffusionModel, TestFunction) {
    (
        DiffusionModel::Circle(CircleParams {
            theta0: 1.0,
            horizon: 1.0,
        }),
        TestFunction::GAlpha { alpha },
    )
}
