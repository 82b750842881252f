//! Noiseless dynamics with stubborn agents, and its exact correspondence with
//! oblivious noise.
//!
//! `n` updating agents share the complete graph with `n_stub` agents that
//! never change state. An updating agent that pulls uniformly from all
//! `n + n_stub` agents sees state `j` with probability
//! `(c_j + stub_j) / (n + n_stub)`. Choosing `n_stub = p_noise / (1 - p_noise) * n`
//! split according to the noise distribution makes this equal to the noisy
//! observation law `(1 - p_noise) c_j / n + p_noise p_j`, so the census of the
//! updating agents follows the same Markov chain in both models. Only the
//! updating agents are tracked; the stubborn census is a constant.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{step_aggregated, step_with_observation};
use crate::error::{Error, Result};
use crate::noise::{observation_distribution, NoiseSpec, ObservationDistribution};
use crate::state::Configuration;
use crate::stats::{chi_square_homogeneity, ChiSquareOutcome};

const INTEGRALITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StubbornSetup {
    n: u64,
    stub: [u64; 3],
}

impl StubbornSetup {
    pub fn new(n: u64, stub_alpha: u64, stub_beta: u64, stub_undecided: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyPopulation);
        }
        Ok(Self {
            n,
            stub: [stub_alpha, stub_beta, stub_undecided],
        })
    }

    /// Number of updating agents.
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn stub_alpha(&self) -> u64 {
        self.stub[0]
    }

    pub fn stub_beta(&self) -> u64 {
        self.stub[1]
    }

    pub fn stub_undecided(&self) -> u64 {
        self.stub[2]
    }

    pub fn stub_counts(&self) -> [u64; 3] {
        self.stub
    }

    pub fn n_stub(&self) -> u64 {
        self.stub.iter().sum()
    }

    /// Oblivious noise realised by this stubborn population.
    pub fn to_noise(&self) -> NoiseSpec {
        let n_stub = self.n_stub();
        if n_stub == 0 {
            return NoiseSpec::Oblivious {
                p_noise: 0.0,
                dist: [1.0 / 3.0; 3],
            };
        }
        let p_noise = n_stub as f64 / (self.n + n_stub) as f64;
        let dist = self.stub.map(|x| x as f64 / n_stub as f64);
        NoiseSpec::Oblivious { p_noise, dist }
    }
}

fn integral(x: f64) -> Option<u64> {
    let r = x.round();
    ((x - r).abs() <= INTEGRALITY_TOLERANCE * r.abs().max(1.0) && r >= 0.0).then_some(r as u64)
}

fn stubborn_counts(n: u64, p_noise: f64, dist: [f64; 3]) -> std::result::Result<[u64; 3], f64> {
    let n_stub = p_noise / (1.0 - p_noise) * n as f64;
    let mut counts = [0u64; 3];
    for j in 0..3 {
        let x = n_stub * dist[j];
        counts[j] = integral(x).ok_or(x)?;
    }
    if integral(n_stub) != Some(counts.iter().sum()) {
        return Err(n_stub);
    }
    Ok(counts)
}

/// Smallest-distance population size (ties towards smaller `n`) within
/// `radius` of `n` that admits an exact stubborn realization.
pub fn nearest_admissible_n(n: u64, noise: &NoiseSpec, radius: u64) -> Option<u64> {
    let (p_noise, dist) = noise.to_oblivious();
    if !(0.0..1.0).contains(&p_noise) {
        return None;
    }
    let ok = |m: u64| m > 0 && stubborn_counts(m, p_noise, dist).is_ok();
    (0..=radius).find_map(|d| {
        [n.checked_sub(d), n.checked_add(d)]
            .into_iter()
            .flatten()
            .find(|&m| ok(m))
    })
}

/// Stubborn population equivalent to `noise` for `n` updating agents.
///
/// Uniform noise `p` is first rewritten as oblivious noise with
/// `p_noise = 3p` over a uniform redraw. Counts must come out integral.
pub fn noise_to_stubborn(n: u64, noise: &NoiseSpec) -> Result<StubbornSetup> {
    noise.validate()?;
    if n == 0 {
        return Err(Error::EmptyPopulation);
    }
    let (p_noise, dist) = noise.to_oblivious();
    if p_noise >= 1.0 {
        return Err(Error::UnrealizableNoise(p_noise));
    }
    match stubborn_counts(n, p_noise, dist) {
        Ok([x, y, z]) => StubbornSetup::new(n, x, y, z),
        Err(value) => Err(Error::NonIntegerStubbornCount {
            n,
            value,
            nearest_n: nearest_admissible_n(n, noise, 10_000),
        }),
    }
}

fn check_population(config: &Configuration, setup: &StubbornSetup) -> Result<()> {
    if config.n() != setup.n() {
        return Err(Error::InvalidConfiguration(format!(
            "configuration has {} agents, stubborn setup expects {}",
            config.n(),
            setup.n()
        )));
    }
    Ok(())
}

/// Law of one noiseless pull by an updating agent over the enlarged graph.
pub fn stubborn_observation_distribution(
    config: &Configuration,
    setup: &StubbornSetup,
) -> Result<ObservationDistribution> {
    check_population(config, setup)?;
    let total = (setup.n() + setup.n_stub()) as f64;
    let weights = [
        (config.a() + setup.stub_alpha()) as f64 / total,
        (config.b() + setup.stub_beta()) as f64 / total,
        (config.q() + setup.stub_undecided()) as f64 / total,
    ];
    Ok(ObservationDistribution::from_weights(weights))
}

/// One round of the updating agents; the stubborn census never moves.
pub fn step_stubborn<R: Rng + ?Sized>(
    config: &Configuration,
    setup: &StubbornSetup,
    rng: &mut R,
) -> Result<Configuration> {
    let obs = stubborn_observation_distribution(config, setup)?;
    Ok(step_with_observation(config, &obs, rng))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub n: u64,
    pub setup: StubbornSetup,
    pub grid_points: usize,
    pub analytic_max_diff: f64,
    pub start: Configuration,
    pub samples: u64,
    pub chi_square: ChiSquareOutcome,
    pub significance: f64,
}

impl EquivalenceReport {
    pub const ANALYTIC_TOLERANCE: f64 = 1e-12;

    pub fn analytic_pass(&self) -> bool {
        self.analytic_max_diff <= Self::ANALYTIC_TOLERANCE
    }

    pub fn statistical_pass(&self) -> bool {
        self.chi_square.passes(self.significance)
    }

    pub fn passed(&self) -> bool {
        self.analytic_pass() && self.statistical_pass()
    }
}

/// Configurations with `a + b <= n`, both counts on a grid of step
/// `max(1, n / 10)`.
pub fn configuration_grid(n: u64) -> Vec<Configuration> {
    let step = (n / 10).max(1) as usize;
    (0..=n)
        .step_by(step)
        .flat_map(|a| {
            (0..=n - a)
                .step_by(step)
                .map(move |b| Configuration::new(n, a, b).unwrap())
        })
        .collect()
}

/// Two-tier check that noisy and stubborn models coincide.
///
/// The analytic tier compares the two observation laws over
/// [`configuration_grid`]. The statistical tier draws `samples` one-round
/// transitions from `start` under each model and runs a two-sample
/// chi-square test on the resulting `(a, b)` tallies.
pub fn equivalence_report<R: Rng + ?Sized>(
    n: u64,
    noise: &NoiseSpec,
    start: Option<Configuration>,
    samples: u64,
    significance: f64,
    rng: &mut R,
) -> Result<EquivalenceReport> {
    let setup = noise_to_stubborn(n, noise)?;
    let grid = configuration_grid(n);
    let mut analytic_max_diff: f64 = 0.0;
    for c in &grid {
        let noisy = observation_distribution(c, noise)?;
        let stubborn = stubborn_observation_distribution(c, &setup)?;
        analytic_max_diff = analytic_max_diff.max(noisy.max_abs_diff(&stubborn));
    }

    let start = match start {
        Some(c) => {
            check_population(&c, &setup)?;
            c
        }
        None => Configuration::new(n, n / 2, n - n / 2)?,
    };
    let mut noisy_tally = BTreeMap::new();
    let mut stubborn_tally = BTreeMap::new();
    for _ in 0..samples {
        *noisy_tally.entry(step_aggregated(&start, noise, rng)).or_insert(0u64) += 1;
        *stubborn_tally
            .entry(step_stubborn(&start, &setup, rng)?)
            .or_insert(0u64) += 1;
    }
    Ok(EquivalenceReport {
        n,
        setup,
        grid_points: grid.len(),
        analytic_max_diff,
        start,
        samples,
        chi_square: chi_square_homogeneity(&noisy_tally, &stubborn_tally),
        significance,
    })
}
