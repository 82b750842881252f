//! One-round transitions of the dynamics and the engine registry.
//!
//! Three interchangeable engines advance a [`Configuration`] by one
//! synchronous round:
//!
//! * `aggregated` draws the whole round from two binomials and one
//!   multinomial, so its cost does not depend on `n`;
//! * `naive` simulates every agent's pull individually and is kept as an
//!   oracle for small populations;
//! * `stubborn` runs the noiseless dynamics next to a fixed population of
//!   stubborn agents.
//!
//! Every engine accepts either model description: noise is mapped to its
//! stubborn realization and back when needed. Engines are looked up by name in
//! an [`EngineRegistry`], which is how the harness and the CLI select them.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{observation_distribution, NoiseSpec, ObservationDistribution};
use crate::sampling::{binomial, multinomial3};
use crate::state::{update_rule, Configuration, Opinion};
use crate::stubborn::{noise_to_stubborn, step_stubborn, StubbornSetup};

/// Advances `config` one round given the law of a single observation.
///
/// Alpha agents turn undecided when they see Beta and vice versa; undecided
/// agents take whatever they see. Pulls are independent, so each class moves
/// as a binomial (or multinomial) block.
pub fn step_with_observation<R: Rng + ?Sized>(
    config: &Configuration,
    obs: &ObservationDistribution,
    rng: &mut R,
) -> Configuration {
    let lost_alpha = binomial(config.a(), obs.p_see_beta, rng);
    let lost_beta = binomial(config.b(), obs.p_see_alpha, rng);
    let [gain_alpha, gain_beta, _] = multinomial3(config.q(), obs.as_array(), rng);
    Configuration::new(
        config.n(),
        config.a() - lost_alpha + gain_alpha,
        config.b() - lost_beta + gain_beta,
    )
    .expect("class moves conserve the population")
}

pub fn step_aggregated<R: Rng + ?Sized>(config: &Configuration, noise: &NoiseSpec, rng: &mut R) -> Configuration {
    match observation_distribution(config, noise) {
        Ok(obs) => step_with_observation(config, &obs, rng),
        Err(_) => *config,
    }
}

/// Per-agent simulation: each agent pulls a uniformly random agent (itself
/// included), the message passes through the noise channel and the update
/// rule is applied.
pub fn step_naive<R: Rng + ?Sized>(config: &Configuration, noise: &NoiseSpec, rng: &mut R) -> Configuration {
    let n = config.n();
    if n == 0 {
        return *config;
    }
    let (a, b) = (config.a(), config.b());
    let state_of = |index: u64| {
        if index < a {
            Opinion::Alpha
        } else if index < a + b {
            Opinion::Beta
        } else {
            Opinion::Undecided
        }
    };
    let mut next = [0u64; 3];
    for agent in 0..n {
        let seen = noise.corrupt(state_of(rng.random_range(0..n)), rng);
        next[update_rule(state_of(agent), seen).index()] += 1;
    }
    Configuration::new(n, next[0], next[1]).expect("one new state per agent")
}

/// What drives the updating agents: noisy communication or stubborn agents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Model {
    Noise(NoiseSpec),
    Stubborn(StubbornSetup),
}

impl Model {
    /// Noise description of the model. A stubborn population always has one.
    pub fn as_noise(&self) -> NoiseSpec {
        match self {
            Model::Noise(noise) => *noise,
            Model::Stubborn(setup) => setup.to_noise(),
        }
    }

    /// Stubborn description for `n` updating agents, if one exists exactly.
    pub fn as_stubborn(&self, n: u64) -> Result<StubbornSetup> {
        match self {
            Model::Noise(noise) => noise_to_stubborn(n, noise),
            Model::Stubborn(setup) => Ok(*setup),
        }
    }

    /// Uniform noise probability of the model, when the model has one.
    pub fn uniform_p(&self) -> Option<f64> {
        self.as_noise().uniform_p()
    }
}

/// A one-round transition engine.
pub trait Dynamics: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn step(&self, config: &Configuration, rng: &mut dyn RngCore) -> Configuration;
}

#[derive(Debug, Clone)]
pub struct AggregatedEngine {
    noise: NoiseSpec,
}

impl AggregatedEngine {
    pub fn new(noise: NoiseSpec) -> Self {
        Self { noise }
    }
}

impl Dynamics for AggregatedEngine {
    fn name(&self) -> &'static str {
        "aggregated"
    }

    fn step(&self, config: &Configuration, rng: &mut dyn RngCore) -> Configuration {
        step_aggregated(config, &self.noise, rng)
    }
}

#[derive(Debug, Clone)]
pub struct NaiveEngine {
    noise: NoiseSpec,
}

impl NaiveEngine {
    pub fn new(noise: NoiseSpec) -> Self {
        Self { noise }
    }
}

impl Dynamics for NaiveEngine {
    fn name(&self) -> &'static str {
        "naive"
    }

    fn step(&self, config: &Configuration, rng: &mut dyn RngCore) -> Configuration {
        step_naive(config, &self.noise, rng)
    }
}

#[derive(Debug, Clone)]
pub struct StubbornEngine {
    setup: StubbornSetup,
}

impl StubbornEngine {
    pub fn new(setup: StubbornSetup) -> Self {
        Self { setup }
    }

    pub fn setup(&self) -> &StubbornSetup {
        &self.setup
    }
}

impl Dynamics for StubbornEngine {
    fn name(&self) -> &'static str {
        "stubborn"
    }

    fn step(&self, config: &Configuration, rng: &mut dyn RngCore) -> Configuration {
        step_stubborn(config, &self.setup, rng).expect("engine population checked when the engine was built")
    }
}

pub type EngineBuilder = fn(n: u64, model: &Model) -> Result<Box<dyn Dynamics>>;

struct EngineEntry {
    description: &'static str,
    build: EngineBuilder,
}

/// Named engine constructors.
pub struct EngineRegistry {
    entries: BTreeMap<&'static str, EngineEntry>,
}

impl EngineRegistry {
    pub const DEFAULT_ENGINE: &'static str = "aggregated";

    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &'static str, description: &'static str, build: EngineBuilder) {
        self.entries.insert(name, EngineEntry { description, build });
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn describe(&self) -> Vec<(&'static str, &'static str)> {
        self.entries.iter().map(|(name, e)| (*name, e.description)).collect()
    }

    pub fn build(&self, name: &str, n: u64, model: &Model) -> Result<Box<dyn Dynamics>> {
        let entry = self
            .entries
            .get(name)
            .ok_or_else(|| Error::UnknownEngine(name.to_string()))?;
        (entry.build)(n, model)
    }
}

impl Default for EngineRegistry {
    fn default() -> Self {
        let mut registry = Self::empty();
        registry.register(
            "aggregated",
            "class-aggregated exact sampler (two binomials and a multinomial per round)",
            |_, model| {
                let noise = model.as_noise();
                noise.validate()?;
                Ok(Box::new(AggregatedEngine::new(noise)))
            },
        );
        registry.register("naive", "per-agent pull simulation (oracle, small n)", |_, model| {
            let noise = model.as_noise();
            noise.validate()?;
            Ok(Box::new(NaiveEngine::new(noise)))
        });
        registry.register(
            "stubborn",
            "noiseless dynamics with a fixed stubborn population",
            |n, model| {
                let setup = model.as_stubborn(n)?;
                if setup.n() != n {
                    return Err(Error::InvalidSpec(format!(
                        "stubborn setup is for {} updating agents, population has {n}",
                        setup.n()
                    )));
                }
                Ok(Box::new(StubbornEngine::new(setup)))
            },
        );
        registry
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn noiseless() -> NoiseSpec {
        NoiseSpec::noiseless()
    }

    #[test]
    fn noiseless_absorbing_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1, 7, 1000] {
            for c in [
                Configuration::consensus(n, Opinion::Alpha),
                Configuration::consensus(n, Opinion::Beta),
                Configuration::all_undecided(n),
            ] {
                for _ in 0..20 {
                    assert_eq!(step_aggregated(&c, &noiseless(), &mut rng), c);
                    assert_eq!(step_naive(&c, &noiseless(), &mut rng), c);
                }
            }
        }
    }

    #[test]
    fn single_agent_sees_itself() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = Configuration::new(1, 1, 0).unwrap();
        assert_eq!(step_naive(&c, &noiseless(), &mut rng), c);
    }

    #[test]
    fn same_seed_same_step() {
        let c = Configuration::new(5000, 2000, 1500).unwrap();
        let noise = NoiseSpec::uniform(0.1).unwrap();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (step_aggregated(&c, &noise, &mut rng), step_naive(&c, &noise, &mut rng))
        };
        assert_eq!(run(11), run(11));
    }

    #[test]
    fn registry_lookup() {
        let registry = EngineRegistry::default();
        assert_eq!(
            registry.names().collect::<Vec<_>>(),
            ["aggregated", "naive", "stubborn"]
        );
        let model = Model::Noise(NoiseSpec::uniform(0.1).unwrap());
        assert_eq!(registry.build("naive", 700, &model).unwrap().name(), "naive");
        assert_eq!(registry.build("stubborn", 700, &model).unwrap().name(), "stubborn");
        assert!(matches!(
            registry.build("stubborn", 100, &model),
            Err(Error::NonIntegerStubbornCount { .. })
        ));
        assert_eq!(
            registry.build("gossip", 100, &model).unwrap_err(),
            Error::UnknownEngine("gossip".into())
        );
    }

    #[test]
    fn engines_drive_through_trait_objects() {
        let registry = EngineRegistry::default();
        let model = Model::Noise(NoiseSpec::uniform(0.1).unwrap());
        let start = Configuration::new(700, 350, 350).unwrap();
        for name in ["aggregated", "naive", "stubborn"] {
            let engine = registry.build(name, 700, &model).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let mut c = start;
            for _ in 0..10 {
                c = engine.step(&c, &mut rng);
                assert_eq!(c.a() + c.b() + c.q(), 700);
            }
        }
    }
}
