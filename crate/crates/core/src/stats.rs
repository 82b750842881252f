//! Pearson chi-square tests over discrete outcome tallies.
//!
//! Cells whose expected count falls below [`MIN_EXPECTED`] are pooled into a
//! single bin before the statistic is computed; if the pooled bin is still
//! too small it is merged with the smallest regular cell.

use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareOutcome {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

impl ChiSquareOutcome {
    pub fn passes(&self, significance: f64) -> bool {
        self.p_value >= significance
    }
}

fn upper_tail(statistic: f64, df: usize) -> f64 {
    if !statistic.is_finite() {
        return 0.0;
    }
    if df == 0 {
        return 1.0;
    }
    let dist = ChiSquared::new(df as f64).expect("positive degrees of freedom");
    dist.sf(statistic)
}

/// Groups cell indices so that every group has expected weight >= `min`.
fn pool_cells(expected: &[f64], min: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut pooled = Vec::new();
    let mut pooled_weight = 0.0;
    for (i, &e) in expected.iter().enumerate() {
        if e >= min {
            groups.push(vec![i]);
        } else {
            pooled.push(i);
            pooled_weight += e;
        }
    }
    if pooled.is_empty() {
        return groups;
    }
    if pooled_weight < min && !groups.is_empty() {
        let smallest = (0..groups.len())
            .min_by(|&x, &y| expected[groups[x][0]].total_cmp(&expected[groups[y][0]]))
            .unwrap();
        groups[smallest].extend(pooled);
    } else {
        groups.push(pooled);
    }
    groups
}

/// Goodness of fit of observed tallies against a probability law.
///
/// Any observation outside the support of `law` yields an infinite statistic.
pub fn chi_square_gof<K: Ord>(observed: &BTreeMap<K, u64>, law: &BTreeMap<K, f64>) -> ChiSquareOutcome {
    let total: u64 = observed.values().sum();
    let off_support = observed
        .iter()
        .any(|(k, &count)| count > 0 && law.get(k).is_none_or(|&p| p <= 0.0));
    if off_support {
        return ChiSquareOutcome {
            statistic: f64::INFINITY,
            degrees_of_freedom: law.len().saturating_sub(1),
            p_value: 0.0,
        };
    }
    let cells: Vec<(f64, f64)> = law
        .iter()
        .filter(|(_, &p)| p > 0.0)
        .map(|(k, &p)| (observed.get(k).copied().unwrap_or(0) as f64, p * total as f64))
        .collect();
    let expected: Vec<f64> = cells.iter().map(|c| c.1).collect();
    let groups = pool_cells(&expected, MIN_EXPECTED);
    let statistic: f64 = groups
        .iter()
        .map(|g| {
            let o: f64 = g.iter().map(|&i| cells[i].0).sum();
            let e: f64 = g.iter().map(|&i| cells[i].1).sum();
            (o - e).powi(2) / e
        })
        .sum();
    let df = groups.len().saturating_sub(1);
    ChiSquareOutcome {
        statistic,
        degrees_of_freedom: df,
        p_value: upper_tail(statistic, df),
    }
}

/// Two-sample homogeneity test: were both tallies drawn from the same law?
pub fn chi_square_homogeneity<K: Ord + Clone>(first: &BTreeMap<K, u64>, second: &BTreeMap<K, u64>) -> ChiSquareOutcome {
    let n1: u64 = first.values().sum();
    let n2: u64 = second.values().sum();
    let total = (n1 + n2) as f64;
    let mut keys: Vec<&K> = first.keys().chain(second.keys()).collect();
    keys.sort();
    keys.dedup();
    let rows: Vec<(f64, f64)> = keys
        .iter()
        .map(|k| {
            (
                first.get(*k).copied().unwrap_or(0) as f64,
                second.get(*k).copied().unwrap_or(0) as f64,
            )
        })
        .collect();
    // The smaller expected count of a cell is attained in the smaller sample.
    let share = n1.min(n2) as f64 / total;
    let expected_min: Vec<f64> = rows.iter().map(|(x, y)| (x + y) * share).collect();
    let groups = pool_cells(&expected_min, MIN_EXPECTED);
    let statistic: f64 = groups
        .iter()
        .map(|g| {
            let o1: f64 = g.iter().map(|&i| rows[i].0).sum();
            let o2: f64 = g.iter().map(|&i| rows[i].1).sum();
            let e1 = (o1 + o2) * n1 as f64 / total;
            let e2 = (o1 + o2) * n2 as f64 / total;
            (o1 - e1).powi(2) / e1 + (o2 - e2).powi(2) / e2
        })
        .sum();
    let df = groups.len().saturating_sub(1);
    ChiSquareOutcome {
        statistic,
        degrees_of_freedom: df,
        p_value: upper_tail(statistic, df),
    }
}

/// Mean and sample standard deviation; `None` for an empty slice.
pub fn mean_sd(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Some((mean, sd))
}
