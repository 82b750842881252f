pub mod experiment;
pub mod spec;
pub mod sweep;

pub use experiment::{
    read_trajectories, read_trial_records, run_experiment, run_trial, Experiment, ExperimentOutcome, MetastableWindow,
    SummaryStats, TrialOutcome, TrialRecord, TrialStatus,
};
pub use spec::{
    parse_probability, probability_label, AnalyticsOptions, ExperimentSpec, InitialCondition, SwitchWindow,
};
pub use sweep::{persist_sweep, render_table, sweep, SweepCell};
