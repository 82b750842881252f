//! Closed-form one-round expectations of the census.

use serde::Serialize;

use crate::analytics::thresholds::Regime;
use crate::error::{Error, Result};
use crate::state::Configuration;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectedNext {
    pub e_a: f64,
    pub e_b: f64,
    pub e_s: f64,
    pub e_q: f64,
}

fn check(config: &Configuration) -> Result<(f64, f64, f64, f64, f64)> {
    if config.n() == 0 {
        return Err(Error::EmptyPopulation);
    }
    Ok((
        config.n() as f64,
        config.a() as f64,
        config.b() as f64,
        config.q() as f64,
        config.s() as f64,
    ))
}

/// Expected next-round census under uniform noise `p`.
pub fn expected_next(config: &Configuration, p: f64) -> Result<ExpectedNext> {
    if !(0.0..=0.5).contains(&p) {
        return Err(Error::InvalidNoise(format!("uniform p = {p} outside [0, 1/2]")));
    }
    let (n, a, b, q, s) = check(config)?;
    let cross = (a + q) * (b + q);
    let e_a = a / n * (a + 2.0 * q) * (1.0 - 2.0 * p) + (a * (a + b) + cross) * p / n;
    let e_b = b / n * (b + 2.0 * q) * (1.0 - 2.0 * p) + (b * (a + b) + cross) * p / n;
    let e_s = s * (1.0 - p + (1.0 - 3.0 * p) * q / n);
    let e_q = p * n + (1.0 - 3.0 * p) / (2.0 * n) * (2.0 * q * q + (n - q).powi(2) - s * s);
    Ok(ExpectedNext { e_a, e_b, e_s, e_q })
}

/// The same expectations written around the critical point, with
/// `p = 1/6 - epsilon` (subcritical) or `p = 1/6 + epsilon` (supercritical).
/// Alpha and Beta expectations follow from `e_a + e_b = n - e_q` and
/// `e_a - e_b = e_s`.
pub fn expected_next_regime(config: &Configuration, epsilon: f64, regime: Regime) -> Result<ExpectedNext> {
    regime.check_epsilon(epsilon)?;
    let (n, _, _, q, s) = check(config)?;
    // sign = +1 below the critical point, -1 above it.
    let sign = match regime {
        Regime::Subcritical => 1.0,
        Regime::Supercritical => -1.0,
        Regime::Critical => unreachable!("check_epsilon rejects the critical regime"),
    };
    let e6 = sign * 6.0 * epsilon;
    let e_s = s * (5.0 / 6.0 + sign * epsilon + 0.5 * (1.0 + e6) * q / n);
    let e_q = 0.75 * (1.0 + e6) / n * q * q - (1.0 + e6) / 2.0 * q + (5.0 + e6) / 12.0 * n
        - (1.0 + e6) / n * (s / 2.0).powi(2);
    Ok(ExpectedNext {
        e_a: (n - e_q + e_s) / 2.0,
        e_b: (n - e_q - e_s) / 2.0,
        e_s,
        e_q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: u64, a: u64, b: u64) -> Configuration {
        Configuration::new(n, a, b).unwrap()
    }

    fn close(x: f64, y: f64) -> bool {
        (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0)
    }

    #[test]
    fn hand_evaluated_example() {
        let e = expected_next(&cfg(100, 60, 40), 0.1).unwrap();
        assert!(close(e.e_a, 37.2));
        assert!(close(e.e_b, 19.2));
        assert!(close(e.e_s, 18.0));
        assert!(close(e.e_q, 43.6));
        assert!(close(e.e_a + e.e_b + e.e_q, 100.0));

        let e = expected_next(&cfg(100, 50, 30), 0.1).unwrap();
        assert!(close(e.e_q, 33.8));
    }

    #[test]
    fn no_bias_no_drift() {
        for q in [0, 10, 50] {
            for p in [0.0, 0.1, 0.3] {
                let a = (100 - q) / 2;
                assert_eq!(expected_next(&cfg(100, a, a), p).unwrap().e_s, 0.0);
            }
        }
    }

    #[test]
    fn one_third_drift_ignores_undecided() {
        // s = 30 with q = 50 and with q = 0
        for (a, b) in [(40, 10), (65, 35)] {
            let e = expected_next(&cfg(100, a, b), 1.0 / 3.0).unwrap();
            assert!(close(e.e_s, 20.0));
        }
    }

    #[test]
    fn subcritical_form_example() {
        // s = 100, q = 400
        let e = expected_next_regime(&cfg(1000, 350, 250), 0.05, Regime::Subcritical).unwrap();
        assert!(close(e.e_s, 100.0 * (5.0 / 6.0 + 0.05 + 0.5 * 1.3 * 0.4)));
        assert!(close(e.e_s, 114.33333333333333));
        let direct = expected_next(&cfg(1000, 350, 250), 1.0 / 6.0 - 0.05).unwrap();
        assert!(close(e.e_s, direct.e_s));
        assert!(close(e.e_q, direct.e_q));
    }

    #[test]
    fn substitution_identity_twelfth() {
        // n = 100, s = 20, q = 30
        let c = cfg(100, 45, 25);
        let r = expected_next_regime(&c, 1.0 / 12.0, Regime::Subcritical).unwrap();
        let d = expected_next(&c, 1.0 / 12.0).unwrap();
        for (x, y) in [(r.e_a, d.e_a), (r.e_b, d.e_b), (r.e_s, d.e_s), (r.e_q, d.e_q)] {
            assert!(close(x, y), "{x} vs {y}");
        }
    }

    #[test]
    fn supercritical_balanced() {
        let e = expected_next_regime(&cfg(90, 30, 30), 1.0 / 30.0, Regime::Supercritical).unwrap();
        assert_eq!(e.e_s, 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(expected_next(&cfg(0, 0, 0), 0.1).is_err());
        assert!(expected_next(&cfg(10, 0, 0), 0.6).is_err());
        assert!(expected_next_regime(&cfg(10, 1, 1), 1.0 / 6.0, Regime::Subcritical).is_err());
        assert!(expected_next_regime(&cfg(10, 1, 1), 0.0, Regime::Subcritical).is_err());
        assert!(expected_next_regime(&cfg(10, 1, 1), 0.34, Regime::Supercritical).is_err());
        assert!(expected_next_regime(&cfg(10, 1, 1), 0.1, Regime::Critical).is_err());
    }
}
