//! Experiment description and its TOML file format.
//!
//! ```toml
//! n = 16384
//! rounds = 400
//! trials = 100
//! master_seed = 1
//! engine = "aggregated"          # optional, see EngineRegistry
//!
//! [init]
//! kind = "balanced"              # balanced | consensus_alpha | consensus_beta | explicit
//!
//! [model]
//! kind = "noise"                 # noise | oblivious | stubborn
//! p = "1/12"                     # decimal or exact fraction
//!
//! [analytics]                    # optional overrides
//! below_coefficient = 10.0
//! log_base = "e"
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytics::LogBase;
use crate::dynamics::{EngineRegistry, Model};
use crate::error::{Error, Result};
use crate::noise::NoiseSpec;
use crate::state::{Configuration, Opinion};
use crate::stubborn::StubbornSetup;

/// Parses a probability written as a decimal (`0.125`) or a fraction of
/// integers (`1/8`). Fractions are divided once, so `1/6` is the closest
/// double to one sixth.
pub fn parse_probability(text: &str) -> Result<f64> {
    let text = text.trim();
    let value = match text.split_once('/') {
        Some((num, den)) => {
            let num: u64 = num.trim().parse().map_err(|_| bad_probability(text))?;
            let den: u64 = den.trim().parse().map_err(|_| bad_probability(text))?;
            if den == 0 {
                return Err(bad_probability(text));
            }
            num as f64 / den as f64
        }
        None => text.parse::<f64>().map_err(|_| bad_probability(text))?,
    };
    if !(0.0..=1.0).contains(&value) {
        return Err(bad_probability(text));
    }
    Ok(value)
}

fn bad_probability(text: &str) -> Error {
    Error::Config(format!(
        "'{text}' is not a probability (use a decimal or a fraction like 1/12)"
    ))
}

/// Short label for a probability: `1/12` when it is the reciprocal of an
/// integer, otherwise the decimal.
pub fn probability_label(p: f64) -> String {
    if p > 0.0 {
        let d = (1.0 / p).round();
        if d >= 1.0 && (1.0 / d - p).abs() < 1e-12 {
            return format!("1/{}", d as u64);
        }
    }
    format!("{p}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InitialCondition {
    Balanced,
    ConsensusAlpha,
    ConsensusBeta,
    Explicit { a: u64, b: u64 },
}

impl InitialCondition {
    pub fn configuration(&self, n: u64) -> Result<Configuration> {
        match *self {
            InitialCondition::Balanced => Configuration::balanced(n),
            InitialCondition::ConsensusAlpha => Ok(Configuration::consensus(n, Opinion::Alpha)),
            InitialCondition::ConsensusBeta => Ok(Configuration::consensus(n, Opinion::Beta)),
            InitialCondition::Explicit { a, b } => Configuration::new(n, a, b),
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "balanced" => Ok(InitialCondition::Balanced),
            "consensus_alpha" | "consensus" | "alpha" => Ok(InitialCondition::ConsensusAlpha),
            "consensus_beta" | "beta" => Ok(InitialCondition::ConsensusBeta),
            other => Err(Error::Config(format!("unknown initial condition '{other}'"))),
        }
    }
}

/// Rounds over which majority switches and bias extremes are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum SwitchWindow {
    /// From the first round below `c * sqrt(n log n)` to the end; empty if
    /// that level is never reached.
    #[default]
    AfterBelowEntry,
    Full,
    Rounds {
        start: u64,
        end: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticsOptions {
    /// Replaces the lower edge of the metastable window (`delta_lo_frac`).
    pub metastable_coefficient: Option<f64>,
    pub below_coefficient: f64,
    pub log_base: LogBase,
    pub switch_window: SwitchWindow,
    /// A cell is reported as failed when the fraction of failed trials
    /// exceeds this value.
    pub max_failure_rate: f64,
}

impl Default for AnalyticsOptions {
    fn default() -> Self {
        Self {
            metastable_coefficient: None,
            below_coefficient: 10.0,
            log_base: LogBase::E,
            switch_window: SwitchWindow::AfterBelowEntry,
            max_failure_rate: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub n: u64,
    pub model: Model,
    pub engine: String,
    pub init: InitialCondition,
    pub rounds: u64,
    pub trials: u64,
    pub master_seed: u64,
    pub analytics: AnalyticsOptions,
}

impl ExperimentSpec {
    /// Uniform-noise experiment with default engine and analytics.
    pub fn uniform(n: u64, p: f64, init: InitialCondition, rounds: u64, trials: u64, master_seed: u64) -> Self {
        Self {
            n,
            model: Model::Noise(NoiseSpec::Uniform { p }),
            engine: EngineRegistry::DEFAULT_ENGINE.to_string(),
            init,
            rounds,
            trials,
            master_seed,
            analytics: AnalyticsOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::EmptyPopulation);
        }
        if self.rounds == 0 {
            return Err(Error::InvalidSpec("rounds must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidSpec("trials must be at least 1".into()));
        }
        self.init.configuration(self.n)?;
        match &self.model {
            Model::Noise(noise) => noise.validate()?,
            Model::Stubborn(setup) if setup.n() != self.n => {
                return Err(Error::InvalidSpec(format!(
                    "stubborn setup is for {} agents, experiment has n = {}",
                    setup.n(),
                    self.n
                )))
            }
            Model::Stubborn(_) => {}
        }
        let a = &self.analytics;
        if a.below_coefficient.is_nan() || a.below_coefficient <= 0.0 {
            return Err(Error::InvalidSpec("below_coefficient must be positive".into()));
        }
        if let Some(c) = a.metastable_coefficient {
            if !(c > 0.0 && c <= 1.0) {
                return Err(Error::InvalidSpec("metastable_coefficient must lie in (0, 1]".into()));
            }
        }
        if !(0.0..=1.0).contains(&a.max_failure_rate) {
            return Err(Error::InvalidSpec("max_failure_rate must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        raw.into_spec()
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&RawSpec::from_spec(self)).expect("spec serialises to TOML")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum RawProbability {
    Number(f64),
    Text(String),
}

impl RawProbability {
    fn value(&self) -> Result<f64> {
        match self {
            RawProbability::Number(x) => Ok(*x),
            RawProbability::Text(s) => parse_probability(s),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawInit {
    Balanced,
    ConsensusAlpha,
    ConsensusBeta,
    Explicit { a: u64, b: u64 },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawModel {
    Noise {
        p: RawProbability,
    },
    Oblivious {
        p_noise: RawProbability,
        dist: [RawProbability; 3],
    },
    Stubborn {
        stub_alpha: u64,
        stub_beta: u64,
        stub_undecided: u64,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum RawWindow {
    Named(String),
    Rounds { start: u64, end: u64 },
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnalytics {
    #[serde(skip_serializing_if = "Option::is_none")]
    metastable_coefficient: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    below_coefficient: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    log_base: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    switch_window: Option<RawWindow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_failure_rate: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    n: u64,
    rounds: u64,
    trials: u64,
    master_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    engine: Option<String>,
    init: RawInit,
    model: RawModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    analytics: Option<RawAnalytics>,
}

impl RawSpec {
    fn into_spec(self) -> Result<ExperimentSpec> {
        let init = match self.init {
            RawInit::Balanced => InitialCondition::Balanced,
            RawInit::ConsensusAlpha => InitialCondition::ConsensusAlpha,
            RawInit::ConsensusBeta => InitialCondition::ConsensusBeta,
            RawInit::Explicit { a, b } => InitialCondition::Explicit { a, b },
        };
        let model = match self.model {
            RawModel::Noise { p } => Model::Noise(NoiseSpec::uniform(p.value()?)?),
            RawModel::Oblivious { p_noise, dist } => {
                let [x, y, z] = &dist;
                Model::Noise(NoiseSpec::oblivious(
                    p_noise.value()?,
                    [x.value()?, y.value()?, z.value()?],
                )?)
            }
            RawModel::Stubborn {
                stub_alpha,
                stub_beta,
                stub_undecided,
            } => Model::Stubborn(StubbornSetup::new(self.n, stub_alpha, stub_beta, stub_undecided)?),
        };
        let raw = self.analytics.unwrap_or_default();
        let defaults = AnalyticsOptions::default();
        let switch_window = match raw.switch_window {
            None => defaults.switch_window,
            Some(RawWindow::Named(name)) => match name.as_str() {
                "after_below_entry" => SwitchWindow::AfterBelowEntry,
                "full" => SwitchWindow::Full,
                other => return Err(Error::Config(format!("unknown switch_window '{other}'"))),
            },
            Some(RawWindow::Rounds { start, end }) => SwitchWindow::Rounds { start, end },
        };
        let log_base = match raw.log_base {
            None => defaults.log_base,
            Some(s) => LogBase::parse(&s).ok_or_else(|| Error::Config(format!("unknown log_base '{s}'")))?,
        };
        let spec = ExperimentSpec {
            n: self.n,
            model,
            engine: self
                .engine
                .unwrap_or_else(|| EngineRegistry::DEFAULT_ENGINE.to_string()),
            init,
            rounds: self.rounds,
            trials: self.trials,
            master_seed: self.master_seed,
            analytics: AnalyticsOptions {
                metastable_coefficient: raw.metastable_coefficient,
                below_coefficient: raw.below_coefficient.unwrap_or(defaults.below_coefficient),
                log_base,
                switch_window,
                max_failure_rate: raw.max_failure_rate.unwrap_or(defaults.max_failure_rate),
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    fn from_spec(spec: &ExperimentSpec) -> Self {
        let init = match spec.init {
            InitialCondition::Balanced => RawInit::Balanced,
            InitialCondition::ConsensusAlpha => RawInit::ConsensusAlpha,
            InitialCondition::ConsensusBeta => RawInit::ConsensusBeta,
            InitialCondition::Explicit { a, b } => RawInit::Explicit { a, b },
        };
        let model = match spec.model {
            Model::Noise(NoiseSpec::Uniform { p }) => RawModel::Noise {
                p: RawProbability::Number(p),
            },
            Model::Noise(NoiseSpec::Oblivious { p_noise, dist }) => RawModel::Oblivious {
                p_noise: RawProbability::Number(p_noise),
                dist: dist.map(RawProbability::Number),
            },
            Model::Stubborn(setup) => RawModel::Stubborn {
                stub_alpha: setup.stub_alpha(),
                stub_beta: setup.stub_beta(),
                stub_undecided: setup.stub_undecided(),
            },
        };
        let a = &spec.analytics;
        let window = match a.switch_window {
            SwitchWindow::AfterBelowEntry => RawWindow::Named("after_below_entry".into()),
            SwitchWindow::Full => RawWindow::Named("full".into()),
            SwitchWindow::Rounds { start, end } => RawWindow::Rounds { start, end },
        };
        RawSpec {
            n: spec.n,
            rounds: spec.rounds,
            trials: spec.trials,
            master_seed: spec.master_seed,
            engine: Some(spec.engine.clone()),
            init,
            model,
            analytics: Some(RawAnalytics {
                metastable_coefficient: a.metastable_coefficient,
                below_coefficient: Some(a.below_coefficient),
                log_base: Some(a.log_base.name().to_string()),
                switch_window: Some(window),
                max_failure_rate: Some(a.max_failure_rate),
            }),
        }
    }
}
