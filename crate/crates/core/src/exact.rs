//! Exact one-round transition law by enumeration, for small populations.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::noise::{observation_distribution, NoiseSpec};
use crate::sampling::{binomial_pmf, multinomial3_pmf};
use crate::state::Configuration;

pub const ENUMERATION_LIMIT: u64 = 12;

pub type TransitionLaw = BTreeMap<Configuration, f64>;

/// Next-round law of the noisy dynamics from `config`, as a map from each
/// reachable configuration to its probability.
///
/// The law is the convolution of the Alpha losses `Bin(a, p_see_beta)`, the
/// Beta losses `Bin(b, p_see_alpha)` and the undecided moves
/// `Mult(q, observation)`.
pub fn exact_transition_distribution(config: &Configuration, noise: &NoiseSpec) -> Result<TransitionLaw> {
    if config.n() > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge {
            n: config.n(),
            limit: ENUMERATION_LIMIT,
        });
    }
    noise.validate()?;
    let obs = observation_distribution(config, noise)?;
    let (a, b, q) = (config.a(), config.b(), config.q());
    let alpha_losses = binomial_pmf(a, obs.p_see_beta);
    let beta_losses = binomial_pmf(b, obs.p_see_alpha);
    let probs = obs.as_array();

    let mut undecided_moves = Vec::new();
    for gain_a in 0..=q {
        for gain_b in 0..=q - gain_a {
            let mass = multinomial3_pmf([gain_a, gain_b, q - gain_a - gain_b], probs);
            if mass > 0.0 {
                undecided_moves.push((gain_a, gain_b, mass));
            }
        }
    }

    let mut law = TransitionLaw::new();
    for (lost_a, &pa) in alpha_losses.iter().enumerate().filter(|(_, &m)| m > 0.0) {
        for (lost_b, &pb) in beta_losses.iter().enumerate().filter(|(_, &m)| m > 0.0) {
            for &(gain_a, gain_b, pu) in &undecided_moves {
                let next = Configuration::new(config.n(), a - lost_a as u64 + gain_a, b - lost_b as u64 + gain_b)?;
                *law.entry(next).or_insert(0.0) += pa * pb * pu;
            }
        }
    }
    Ok(law)
}
