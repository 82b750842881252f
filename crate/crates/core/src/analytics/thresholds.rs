//! Analytic constants of the two regimes around the critical noise `p = 1/6`.
//!
//! All bounds are stored as fractions of `n` so one set serves every
//! population size of a sweep.

use serde::Serialize;

use crate::error::{Error, Result};

pub const CRITICAL_P: f64 = 1.0 / 6.0;
pub const CRITICAL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Subcritical => "subcritical",
            Regime::Critical => "critical",
            Regime::Supercritical => "supercritical",
        }
    }

    /// Subcritical admits `epsilon` in (0, 1/6), supercritical in (0, 1/3].
    pub fn check_epsilon(self, epsilon: f64) -> Result<()> {
        let ok = match self {
            Regime::Subcritical => epsilon > 0.0 && epsilon < 1.0 / 6.0,
            Regime::Supercritical => epsilon > 0.0 && epsilon <= 1.0 / 3.0,
            Regime::Critical => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::EpsilonOutOfRange {
                epsilon,
                regime: self.name(),
            })
        }
    }

    /// Noise probability at distance `epsilon` from the critical point.
    pub fn noise_probability(self, epsilon: f64) -> f64 {
        match self {
            Regime::Subcritical => CRITICAL_P - epsilon,
            Regime::Supercritical => CRITICAL_P + epsilon,
            Regime::Critical => CRITICAL_P,
        }
    }
}

pub fn classify_regime(p: f64) -> Regime {
    if p < CRITICAL_P - CRITICAL_TOLERANCE {
        Regime::Subcritical
    } else if p > CRITICAL_P + CRITICAL_TOLERANCE {
        Regime::Supercritical
    } else {
        Regime::Critical
    }
}

/// Threshold constants for one `(epsilon, regime)` pair.
///
/// Subcritical fields (`Some` only below the critical point):
/// `delta_lo_frac`/`delta_hi_frac` bound the metastable bias window,
/// `beta_sub_frac` is the bias level after which the bias stops growing
/// geometrically, `q_lo_frac` the undecided level that guarantees growth,
/// `q_floor_frac` and `b_floor_frac` the persistent undecided and minority
/// floors.
///
/// Supercritical fields: `beta_super_frac` and `q_cap_super_frac` exist for
/// `epsilon < 1/6`; the interval count `k` and the undecided ladder `qbar`
/// (stored as `qbar[i + 1] = q̄_i` for `i = -1..=k`) only for
/// `epsilon <= 1/12`, the range where the bias interval partition is used.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdSet {
    pub epsilon: f64,
    pub regime: Regime,
    pub delta_lo_frac: Option<f64>,
    pub delta_hi_frac: Option<f64>,
    pub beta_sub_frac: Option<f64>,
    pub q_lo_frac: Option<f64>,
    pub q_floor_frac: Option<f64>,
    pub b_floor_frac: Option<f64>,
    pub beta_super_frac: Option<f64>,
    pub q_cap_super_frac: Option<f64>,
    pub k: Option<i64>,
    pub qbar: Vec<f64>,
}

pub fn thresholds(epsilon: f64, regime: Regime) -> Result<ThresholdSet> {
    regime.check_epsilon(epsilon)?;
    let mut set = ThresholdSet {
        epsilon,
        regime,
        delta_lo_frac: None,
        delta_hi_frac: None,
        beta_sub_frac: None,
        q_lo_frac: None,
        q_floor_frac: None,
        b_floor_frac: None,
        beta_super_frac: None,
        q_cap_super_frac: None,
        k: None,
        qbar: Vec::new(),
    };
    let up = 1.0 + 6.0 * epsilon;
    let down = 1.0 - 6.0 * epsilon;
    match regime {
        Regime::Subcritical => {
            let floor = down / 12.0;
            set.delta_lo_frac = Some(2.0 * epsilon.sqrt() / up);
            set.delta_hi_frac = Some(1.0 - 2.0 * floor.powi(3));
            set.beta_sub_frac = Some(2.0 * (3.0 * epsilon).sqrt() / up);
            set.q_lo_frac = Some((1.0 - 4.0 * epsilon) / (3.0 * up));
            set.q_floor_frac = Some(floor);
            set.b_floor_frac = Some(floor.powi(3));
        }
        Regime::Supercritical => {
            if down > 0.0 {
                let beta = 2.0 * (2.0 * epsilon).sqrt() / (up * down).sqrt();
                set.beta_super_frac = Some(beta);
                set.q_cap_super_frac = Some((1.0 + 3.0 * epsilon) / (3.0 * down));
                if epsilon <= 1.0 / 12.0 {
                    let k = (beta.ln() / (2.0f64 / 3.0).ln() - 1.0).ceil() as i64;
                    set.k = Some(k);
                    set.qbar = (-1..=k - 2)
                        .map(|i| 1.0 / 3.0 - 2.0 * epsilon / up * 1.5f64.powi(2 * i as i32 + 3))
                        .chain([2.0 / 9.0 + epsilon / 3.0, 1.0 / 12.0 + epsilon])
                        .collect();
                }
            }
        }
        Regime::Critical => unreachable!(),
    }
    Ok(set)
}

impl ThresholdSet {
    /// Constants for noise probability `p`, or `None` at the critical point.
    pub fn for_noise(p: f64) -> Option<Self> {
        let regime = classify_regime(p);
        thresholds((p - CRITICAL_P).abs(), regime).ok()
    }

    /// `q̄_i` as a fraction of `n`, for `i` in `-1..=k`.
    pub fn qbar_at(&self, i: i64) -> Option<f64> {
        usize::try_from(i + 1).ok().and_then(|j| self.qbar.get(j).copied())
    }

    /// Whether the `q̄` ladder strictly decreases. It does not for every
    /// `epsilon`: within each band of constant `k` there is a range where
    /// `q̄_{k-2} < q̄_{k-1}`.
    pub fn qbar_is_decreasing(&self) -> bool {
        self.qbar.windows(2).all(|w| w[0] > w[1])
    }

    /// Bias intervals `S_{-1}, ..., S_k` as `(index, lower, upper]` fractions.
    pub fn bias_partition(&self) -> Vec<(i64, f64, f64)> {
        let (Some(beta), Some(k)) = (self.beta_super_frac, self.k) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        if k >= 1 {
            out.push((-1, 0.0, beta));
        }
        for i in 0..=k - 2 {
            out.push((i, 1.5f64.powi(i as i32) * beta, 1.5f64.powi(i as i32 + 1) * beta));
        }
        let lower = if k >= 1 { 1.5f64.powi(k as i32 - 1) * beta } else { 0.0 };
        out.push((k - 1, lower, 2.0 / 3.0));
        out.push((k, 2.0 / 3.0, 1.0));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification() {
        assert_eq!(classify_regime(1.0 / 12.0), Regime::Subcritical);
        assert_eq!(classify_regime(1.0 / 6.0), Regime::Critical);
        assert_eq!(classify_regime(1.0 / 6.0 + 1e-13), Regime::Critical);
        assert_eq!(classify_regime(1.0 / 5.0), Regime::Supercritical);
    }

    #[test]
    fn subcritical_twelfth() {
        let t = thresholds(1.0 / 12.0, Regime::Subcritical).unwrap();
        assert!((t.delta_lo_frac.unwrap() - 0.384900179459750).abs() < 1e-9);
        assert!((t.delta_hi_frac.unwrap() - 0.999855324074074).abs() < 1e-9);
        assert!((t.beta_sub_frac.unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((t.q_lo_frac.unwrap() - 0.148148148148148).abs() < 1e-9);
        assert!(t.k.is_none() && t.qbar.is_empty());
    }

    #[test]
    fn subcritical_limit() {
        let t = thresholds(1e-12, Regime::Subcritical).unwrap();
        assert!(t.delta_lo_frac.unwrap() < 1e-5);
        assert!((t.delta_hi_frac.unwrap() - (1.0 - 2.0 / 1728.0)).abs() < 1e-9);
    }

    #[test]
    fn supercritical_thirtieth() {
        let t = thresholds(1.0 / 30.0, Regime::Supercritical).unwrap();
        assert!((t.beta_super_frac.unwrap() - 0.527046276694730).abs() < 1e-9);
        assert_eq!(t.k, Some(1));
        assert_eq!(t.qbar.len(), 3);
        assert!((t.qbar_at(-1).unwrap() - 0.25).abs() < 1e-12);
        assert!((t.qbar_at(0).unwrap() - (2.0 / 9.0 + 1.0 / 90.0)).abs() < 1e-12);
        assert!((t.qbar_at(1).unwrap() - (1.0 / 12.0 + 1.0 / 30.0)).abs() < 1e-12);
        assert!(t.qbar_is_decreasing());
        assert!(t.delta_lo_frac.is_none());
        let parts = t.bias_partition();
        assert_eq!(parts.first().unwrap().0, -1);
        assert_eq!(parts.last().unwrap(), &(1, 2.0 / 3.0, 1.0));
    }

    #[test]
    fn ladder_is_not_always_decreasing() {
        // k = 1 band: q̄_{-1} = 1/3 - 0.135/1.27 < q̄_0 = 2/9 + 0.015
        let t = thresholds(0.045, Regime::Supercritical).unwrap();
        assert_eq!(t.k, Some(1));
        assert!(t.qbar_at(-1).unwrap() < t.qbar_at(0).unwrap());
        assert!(!t.qbar_is_decreasing());
    }

    #[test]
    fn large_supercritical_epsilon_has_no_ladder() {
        let t = thresholds(1.0 / 3.0, Regime::Supercritical).unwrap();
        assert!(t.beta_super_frac.is_none() && t.k.is_none());
        let t = thresholds(0.1, Regime::Supercritical).unwrap();
        assert!(t.beta_super_frac.is_some() && t.k.is_none());
    }

    #[test]
    fn out_of_range() {
        assert!(thresholds(1.0 / 6.0, Regime::Subcritical).is_err());
        assert!(thresholds(0.4, Regime::Supercritical).is_err());
        assert!(thresholds(0.1, Regime::Critical).is_err());
        assert!(ThresholdSet::for_noise(1.0 / 6.0).is_none());
        assert_eq!(ThresholdSet::for_noise(0.2).unwrap().regime, Regime::Supercritical);
    }
}
