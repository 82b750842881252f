//! Agent states, the population census and the deterministic update rule.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Opinion {
    Alpha,
    Beta,
    Undecided,
}

impl Opinion {
    pub const ALL: [Opinion; 3] = [Opinion::Alpha, Opinion::Beta, Opinion::Undecided];

    /// Position of the state in `(alpha, beta, undecided)` ordered triples.
    pub fn index(self) -> usize {
        match self {
            Opinion::Alpha => 0,
            Opinion::Beta => 1,
            Opinion::Undecided => 2,
        }
    }
}

/// New state of an agent holding `own` after it observed `observed`.
///
/// Conflicting opinions make the agent undecided; an undecided agent adopts
/// whatever it sees; everything else leaves the agent unchanged.
pub fn update_rule(own: Opinion, observed: Opinion) -> Opinion {
    use Opinion::*;
    match (own, observed) {
        (Undecided, seen) => seen,
        (Alpha, Beta) | (Beta, Alpha) => Undecided,
        (decided, _) => decided,
    }
}

/// Census of a complete-graph population: how many agents support each
/// opinion. The undecided count and the bias are derived, so `q = n - a - b`
/// and `s = a - b` cannot drift out of sync.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Configuration {
    n: u64,
    a: u64,
    b: u64,
}

impl Configuration {
    pub fn new(n: u64, a: u64, b: u64) -> Result<Self> {
        match a.checked_add(b) {
            Some(decided) if decided <= n => Ok(Self { n, a, b }),
            _ => Err(Error::InvalidConfiguration(format!(
                "a + b must not exceed n (n = {n}, a = {a}, b = {b})"
            ))),
        }
    }

    pub fn all_undecided(n: u64) -> Self {
        Self { n, a: 0, b: 0 }
    }

    pub fn consensus(n: u64, opinion: Opinion) -> Self {
        match opinion {
            Opinion::Alpha => Self { n, a: n, b: 0 },
            Opinion::Beta => Self { n, a: 0, b: n },
            Opinion::Undecided => Self::all_undecided(n),
        }
    }

    pub fn balanced(n: u64) -> Result<Self> {
        if !n.is_multiple_of(2) {
            return Err(Error::OddBalancedInit(n));
        }
        Ok(Self { n, a: n / 2, b: n / 2 })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn a(&self) -> u64 {
        self.a
    }

    pub fn b(&self) -> u64 {
        self.b
    }

    pub fn q(&self) -> u64 {
        self.n - self.a - self.b
    }

    pub fn s(&self) -> i64 {
        self.a as i64 - self.b as i64
    }

    pub fn count(&self, opinion: Opinion) -> u64 {
        match opinion {
            Opinion::Alpha => self.a,
            Opinion::Beta => self.b,
            Opinion::Undecided => self.q(),
        }
    }

    /// The configuration with the two opinions relabelled.
    pub fn swapped(&self) -> Self {
        Self {
            n: self.n,
            a: self.b,
            b: self.a,
        }
    }

    /// Every configuration of a population of `n` agents, ordered by `(a, b)`.
    pub fn enumerate(n: u64) -> impl Iterator<Item = Configuration> {
        (0..=n).flat_map(move |a| (0..=n - a).map(move |b| Configuration { n, a, b }))
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(a={}, b={}, q={})", self.a, self.b, self.q())
    }
}
