use serde::Serialize;

use crate::error::{Error, Result};
use crate::state::Configuration;

/// Per-round census of one trial. Entry `t` is the configuration after `t`
/// rounds; entry 0 is the initial configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Trajectory {
    states: Vec<Configuration>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrajectoryRecord {
    pub round: u64,
    pub a: u64,
    pub b: u64,
    pub q: u64,
    pub s: i64,
}

impl Trajectory {
    pub fn new(initial: Configuration) -> Self {
        Self { states: vec![initial] }
    }

    pub fn from_states(states: Vec<Configuration>) -> Result<Self> {
        let Some(first) = states.first() else {
            return Err(Error::InvalidConfiguration("trajectory needs an initial state".into()));
        };
        if states.iter().any(|c| c.n() != first.n()) {
            return Err(Error::InvalidConfiguration(
                "population size changes along trajectory".into(),
            ));
        }
        Ok(Self { states })
    }

    /// Builds a trajectory of a population of `n` agents from bias values
    /// alone, placing the minority at zero. Mostly useful in tests.
    pub fn from_biases(n: u64, biases: &[i64]) -> Result<Self> {
        let states = biases
            .iter()
            .map(|&s| {
                let (a, b) = if s >= 0 { (s as u64, 0) } else { (0, s.unsigned_abs()) };
                Configuration::new(n, a, b)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_states(states)
    }

    pub fn push(&mut self, next: Configuration) {
        debug_assert_eq!(next.n(), self.n());
        self.states.push(next);
    }

    pub fn n(&self) -> u64 {
        self.states[0].n()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn states(&self) -> &[Configuration] {
        &self.states
    }

    pub fn last(&self) -> &Configuration {
        self.states.last().expect("never empty")
    }

    pub fn biases(&self) -> impl Iterator<Item = i64> + '_ {
        self.states.iter().map(|c| c.s())
    }

    pub fn records(&self) -> impl Iterator<Item = TrajectoryRecord> + '_ {
        self.states.iter().enumerate().map(|(t, c)| TrajectoryRecord {
            round: t as u64,
            a: c.a(),
            b: c.b(),
            q: c.q(),
            s: c.s(),
        })
    }

    /// The same trajectory with the two opinions relabelled.
    pub fn mirrored(&self) -> Self {
        Self {
            states: self.states.iter().map(Configuration::swapped).collect(),
        }
    }
}
