//! Binary Undecided-State dynamics on the complete graph with communication
//! noise, its stubborn-agent counterpart, closed-form expectations and
//! regime thresholds, and a seeded multi-trial experiment harness.
//!
//! Step engines are looked up by name in an [`EngineRegistry`]; the harness
//! never refers to a concrete engine type.

pub mod analytics;
pub mod dynamics;
pub mod error;
pub mod exact;
pub mod harness;
pub mod noise;
pub mod rng;
pub mod sampling;
pub mod state;
pub mod stats;
pub mod stubborn;
pub mod trajectory;

pub use dynamics::{step_aggregated, step_naive, Dynamics, EngineRegistry, Model};
pub use error::{Error, Result};
pub use exact::{exact_transition_distribution, TransitionLaw};
pub use noise::{observation_distribution, NoiseSpec, ObservationDistribution};
pub use state::{update_rule, Configuration, Opinion};
pub use stubborn::{equivalence_report, noise_to_stubborn, step_stubborn, EquivalenceReport, StubbornSetup};
pub use trajectory::Trajectory;
