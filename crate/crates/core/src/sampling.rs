//! Exact binomial / multinomial draws and their probability masses.
//!
//! Binomial variates come from `rand_distr::Binomial`, which uses inversion for
//! small means and the BTPE rejection sampler otherwise; both are exact.
//! A three-way multinomial is drawn as a chain of conditional binomials,
//! which is also exact.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

pub fn binomial<R: Rng + ?Sized>(trials: u64, p: f64, rng: &mut R) -> u64 {
    if trials == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return trials;
    }
    Binomial::new(trials, p)
        .expect("probability checked to lie in (0, 1)")
        .sample(rng)
}

pub fn multinomial3<R: Rng + ?Sized>(trials: u64, probs: [f64; 3], rng: &mut R) -> [u64; 3] {
    let first = binomial(trials, probs[0], rng);
    let rest = 1.0 - probs[0];
    let second = if rest > 0.0 {
        binomial(trials - first, (probs[1] / rest).min(1.0), rng)
    } else {
        0
    };
    [first, second, trials - first - second]
}

fn ln_choose(n: u64, k: u64) -> f64 {
    use statrs::function::factorial::ln_factorial;
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

fn ln_pow(p: f64, k: u64) -> Option<f64> {
    // 0^0 = 1; 0^k = 0 for k > 0.
    match (p == 0.0, k) {
        (true, 0) => Some(0.0),
        (true, _) => None,
        _ => Some(k as f64 * p.ln()),
    }
}

/// Probability mass of every outcome `0..=trials` of a binomial.
pub fn binomial_pmf(trials: u64, p: f64) -> Vec<f64> {
    (0..=trials)
        .map(|k| match (ln_pow(p, k), ln_pow(1.0 - p, trials - k)) {
            (Some(x), Some(y)) => (ln_choose(trials, k) + x + y).exp(),
            _ => 0.0,
        })
        .collect()
}

/// Probability of the outcome `counts` of a three-way multinomial.
pub fn multinomial3_pmf(counts: [u64; 3], probs: [f64; 3]) -> f64 {
    use statrs::function::factorial::ln_factorial;
    let trials: u64 = counts.iter().sum();
    let mut ln = ln_factorial(trials);
    for j in 0..3 {
        match ln_pow(probs[j], counts[j]) {
            Some(x) => ln += x - ln_factorial(counts[j]),
            None => return 0.0,
        }
    }
    ln.exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn degenerate_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(binomial(10, 0.0, &mut rng), 0);
        assert_eq!(binomial(10, 1.0, &mut rng), 10);
        assert_eq!(binomial(0, 0.5, &mut rng), 0);
        assert_eq!(multinomial3(7, [1.0, 0.0, 0.0], &mut rng), [7, 0, 0]);
        assert_eq!(multinomial3(7, [0.0, 0.0, 1.0], &mut rng), [0, 0, 7]);
    }

    #[test]
    fn pmfs_normalise() {
        let total: f64 = binomial_pmf(12, 0.3).iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(binomial_pmf(3, 0.0), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(binomial_pmf(2, 1.0), vec![0.0, 0.0, 1.0]);

        let probs = [0.2, 0.5, 0.3];
        let mut total = 0.0;
        for x in 0..=6u64 {
            for y in 0..=6 - x {
                total += multinomial3_pmf([x, y, 6 - x - y], probs);
            }
        }
        assert!((total - 1.0).abs() < 1e-12);
        // 2!/(1!1!0!) * 0.2 * 0.5
        assert!((multinomial3_pmf([1, 1, 0], probs) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn multinomial_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let probs = [0.2, 0.5, 0.3];
        let reps = 20_000;
        let mut sums = [0u64; 3];
        for _ in 0..reps {
            let draw = multinomial3(50, probs, &mut rng);
            assert_eq!(draw.iter().sum::<u64>(), 50);
            for j in 0..3 {
                sums[j] += draw[j];
            }
        }
        for j in 0..3 {
            let mean = sums[j] as f64 / reps as f64;
            let se = (50.0 * probs[j] * (1.0 - probs[j]) / reps as f64).sqrt();
            assert!((mean - 50.0 * probs[j]).abs() < 4.0 * se);
        }
    }
}
