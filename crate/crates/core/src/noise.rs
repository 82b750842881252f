//! Communication noise and the law of what a pulling agent observes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{Configuration, Opinion};

const SUM_TOLERANCE: f64 = 1e-12;

/// Noise acting on every pulled message.
///
/// `Uniform { p }` keeps the message with probability `1 - 2p` and replaces it
/// by each of the two other states with probability `p`. `Oblivious` keeps the
/// message with probability `1 - p_noise` and otherwise redraws it from `dist`
/// (ordered alpha, beta, undecided) regardless of what was sent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NoiseSpec {
    Uniform { p: f64 },
    Oblivious { p_noise: f64, dist: [f64; 3] },
}

impl NoiseSpec {
    pub fn uniform(p: f64) -> Result<Self> {
        let noise = NoiseSpec::Uniform { p };
        noise.validate()?;
        Ok(noise)
    }

    pub fn oblivious(p_noise: f64, dist: [f64; 3]) -> Result<Self> {
        let noise = NoiseSpec::Oblivious { p_noise, dist };
        noise.validate()?;
        Ok(noise)
    }

    pub fn noiseless() -> Self {
        NoiseSpec::Uniform { p: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseSpec::Uniform { p } => {
                // p = 0 is accepted as the noiseless limit.
                if !(0.0..=0.5).contains(&p) {
                    return Err(Error::InvalidNoise(format!("uniform p = {p} outside [0, 1/2]")));
                }
            }
            NoiseSpec::Oblivious { p_noise, dist } => {
                if !(0.0..1.0).contains(&p_noise) {
                    return Err(Error::InvalidNoise(format!("p_noise = {p_noise} outside [0, 1)")));
                }
                if dist.iter().any(|x| x.is_nan() || *x < 0.0) {
                    return Err(Error::InvalidNoise(format!("negative component in {dist:?}")));
                }
                let total: f64 = dist.iter().sum();
                if (total - 1.0).abs() > SUM_TOLERANCE {
                    return Err(Error::InvalidNoise(format!("distribution sums to {total}")));
                }
            }
        }
        Ok(())
    }

    /// The equivalent oblivious parametrisation: uniform `p` is oblivious noise
    /// with `p_noise = 3p` and a uniform redraw over the three states.
    pub fn to_oblivious(&self) -> (f64, [f64; 3]) {
        match *self {
            NoiseSpec::Uniform { p } => (3.0 * p, [1.0 / 3.0; 3]),
            NoiseSpec::Oblivious { p_noise, dist } => (p_noise, dist),
        }
    }

    /// `Some(p)` when the noise is uniform in the sense of the three-way
    /// symmetric channel.
    pub fn uniform_p(&self) -> Option<f64> {
        match *self {
            NoiseSpec::Uniform { p } => Some(p),
            NoiseSpec::Oblivious { p_noise, dist } => {
                let symmetric = dist.iter().all(|x| (x - 1.0 / 3.0).abs() <= SUM_TOLERANCE);
                symmetric.then_some(p_noise / 3.0)
            }
        }
    }

    /// Passes a single message through the channel.
    pub fn corrupt<R: Rng + ?Sized>(&self, sent: Opinion, rng: &mut R) -> Opinion {
        match *self {
            NoiseSpec::Uniform { p } => {
                let u: f64 = rng.random();
                if u < 1.0 - 2.0 * p {
                    sent
                } else {
                    let others = match sent {
                        Opinion::Alpha => [Opinion::Beta, Opinion::Undecided],
                        Opinion::Beta => [Opinion::Alpha, Opinion::Undecided],
                        Opinion::Undecided => [Opinion::Alpha, Opinion::Beta],
                    };
                    others[rng.random_range(0..2)]
                }
            }
            NoiseSpec::Oblivious { p_noise, dist } => {
                let u: f64 = rng.random();
                if u >= p_noise {
                    return sent;
                }
                let v: f64 = rng.random();
                if v < dist[0] {
                    Opinion::Alpha
                } else if v < dist[0] + dist[1] {
                    Opinion::Beta
                } else {
                    Opinion::Undecided
                }
            }
        }
    }
}

/// Probability that one pull, after noise, shows each state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationDistribution {
    pub p_see_alpha: f64,
    pub p_see_beta: f64,
    pub p_see_undecided: f64,
}

impl ObservationDistribution {
    pub fn as_array(&self) -> [f64; 3] {
        [self.p_see_alpha, self.p_see_beta, self.p_see_undecided]
    }

    pub fn get(&self, opinion: Opinion) -> f64 {
        self.as_array()[opinion.index()]
    }

    pub fn total(&self) -> f64 {
        self.p_see_alpha + self.p_see_beta + self.p_see_undecided
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn from_weights(w: [f64; 3]) -> Self {
        // The last component absorbs rounding so the triple sums to one.
        let alpha = w[0].clamp(0.0, 1.0);
        let beta = w[1].clamp(0.0, 1.0 - alpha);
        Self {
            p_see_alpha: alpha,
            p_see_beta: beta,
            p_see_undecided: (1.0 - alpha - beta).max(0.0),
        }
    }
}

/// Law of the state seen by a single pull: uniform choice among all `n`
/// agents (including the puller) followed by the noise channel.
pub fn observation_distribution(config: &Configuration, noise: &NoiseSpec) -> Result<ObservationDistribution> {
    let n = config.n();
    if n == 0 {
        return Err(Error::EmptyPopulation);
    }
    let n = n as f64;
    let share = [config.a() as f64 / n, config.b() as f64 / n, config.q() as f64 / n];
    let weights = match *noise {
        NoiseSpec::Uniform { p } => share.map(|c| (1.0 - 3.0 * p) * c + p),
        NoiseSpec::Oblivious { p_noise, dist } => [0, 1, 2].map(|j| (1.0 - p_noise) * share[j] + p_noise * dist[j]),
    };
    Ok(ObservationDistribution::from_weights(weights))
}
