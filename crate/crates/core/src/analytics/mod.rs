pub mod expectation;
pub mod observables;
pub mod thresholds;

pub use expectation::{expected_next, expected_next_regime, ExpectedNext};
pub use observables::{
    below_threshold_entry, count_sign_switches, count_switches, metastable_entry, sqrt_n_log_n_scale, LogBase,
    TrajectoryStats,
};
pub use thresholds::{classify_regime, thresholds, Regime, ThresholdSet, CRITICAL_P};
