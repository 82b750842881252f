//! Entry times and majority switches read off a trajectory.

use serde::{Deserialize, Serialize};

use crate::analytics::thresholds::ThresholdSet;
use crate::trajectory::Trajectory;

/// Logarithm used in the `c * sqrt(n log n)` bias scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    E,
    Two,
    Ten,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::E => x.ln(),
            LogBase::Two => x.log2(),
            LogBase::Ten => x.log10(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LogBase::E => "e",
            LogBase::Two => "2",
            LogBase::Ten => "10",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "e" | "ln" | "natural" => Some(LogBase::E),
            "2" | "two" => Some(LogBase::Two),
            "10" | "ten" => Some(LogBase::Ten),
            _ => None,
        }
    }
}

/// `c * sqrt(n log n)`.
pub fn sqrt_n_log_n_scale(n: u64, coefficient: f64, base: LogBase) -> f64 {
    let n = n as f64;
    coefficient * (n * base.log(n)).sqrt()
}

/// First round whose bias reaches `coefficient * n` in absolute value.
pub fn entry_at_fraction(traj: &Trajectory, coefficient: f64) -> Option<u64> {
    let level = coefficient * traj.n() as f64;
    traj.biases()
        .position(|s| s.unsigned_abs() as f64 >= level)
        .map(|t| t as u64)
}

/// First round with `|s| >= delta_lo_frac * n`. `None` if the set carries
/// no subcritical window or the level is never reached.
pub fn metastable_entry(traj: &Trajectory, ts: &ThresholdSet) -> Option<u64> {
    entry_at_fraction(traj, ts.delta_lo_frac?)
}

/// First round with `|s| < c * sqrt(n log n)`.
pub fn below_threshold_entry(traj: &Trajectory, coefficient: f64, base: LogBase) -> Option<u64> {
    let level = sqrt_n_log_n_scale(traj.n(), coefficient, base);
    traj.biases()
        .position(|s| (s.unsigned_abs() as f64) < level)
        .map(|t| t as u64)
}

/// Number of majority changes along a bias sequence. A zero bias keeps the
/// previous sign; leading zeros carry no sign at all.
pub fn count_sign_switches(biases: impl IntoIterator<Item = i64>) -> u64 {
    let mut current = 0i64;
    let mut switches = 0;
    for s in biases {
        let sign = s.signum();
        if sign == 0 {
            continue;
        }
        if current != 0 && sign != current {
            switches += 1;
        }
        current = sign;
    }
    switches
}

pub fn count_switches(traj: &Trajectory) -> u64 {
    count_sign_switches(traj.biases())
}

/// Summary of one trajectory over a window of rounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryStats {
    pub entry_round_metastable: Option<u64>,
    pub entry_round_below_threshold: Option<u64>,
    pub switch_count: u64,
    pub min_abs_bias: u64,
    pub max_abs_bias: u64,
}

impl TrajectoryStats {
    /// Switches and bias extremes are taken over rounds `window.0..=window.1`
    /// (clamped to the trajectory); entry times over the whole trajectory.
    pub fn compute(
        traj: &Trajectory,
        ts: Option<&ThresholdSet>,
        metastable_coefficient: Option<f64>,
        below_coefficient: f64,
        base: LogBase,
        window: (u64, u64),
    ) -> Self {
        let coefficient = metastable_coefficient.or_else(|| ts.and_then(|t| t.delta_lo_frac));
        let last = traj.len() as u64 - 1;
        let (from, to) = (window.0.min(last + 1), window.1.min(last));
        let slice: Vec<i64> = traj
            .biases()
            .skip(from as usize)
            .take((to + 1).saturating_sub(from) as usize)
            .collect();
        Self {
            entry_round_metastable: coefficient.and_then(|c| entry_at_fraction(traj, c)),
            entry_round_below_threshold: below_threshold_entry(traj, below_coefficient, base),
            switch_count: count_sign_switches(slice.iter().copied()),
            min_abs_bias: slice.iter().map(|s| s.unsigned_abs()).min().unwrap_or(0),
            max_abs_bias: slice.iter().map(|s| s.unsigned_abs()).max().unwrap_or(0),
        }
    }
}
