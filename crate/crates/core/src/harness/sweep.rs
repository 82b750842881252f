//! Grid runs over (n, p) and the combined text table.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::dynamics::Model;
use crate::error::{Error, Result};
use crate::harness::experiment::{Experiment, ExperimentOutcome, SummaryStats};
use crate::harness::spec::{probability_label, ExperimentSpec};
use crate::noise::NoiseSpec;

pub const TABLE_FILE: &str = "table.txt";

#[derive(Debug)]
pub struct SweepCell {
    pub n: u64,
    pub p: f64,
    pub result: Result<ExperimentOutcome>,
}

impl SweepCell {
    pub fn summary(&self) -> Option<&SummaryStats> {
        self.result.as_ref().ok().map(|o| &o.summary)
    }

    pub fn dir_name(&self) -> String {
        format!("n{}_p{}", self.n, probability_label(self.p).replace('/', "over"))
    }
}

/// Runs `base` once per (n, p) pair, rows in `n_values` order. The model of
/// `base` is replaced by uniform noise `p`. Cell errors are kept in the cell.
pub fn sweep(base: &ExperimentSpec, n_values: &[u64], p_values: &[f64]) -> Vec<SweepCell> {
    let mut cells = Vec::with_capacity(n_values.len() * p_values.len());
    for &n in n_values {
        for &p in p_values {
            let result = NoiseSpec::uniform(p).and_then(|noise| {
                let spec = ExperimentSpec {
                    n,
                    model: Model::Noise(noise),
                    ..base.clone()
                };
                Experiment::new(spec)?.run()
            });
            cells.push(SweepCell { n, p, result });
        }
    }
    cells
}

fn n_label(n: u64) -> String {
    if n.is_power_of_two() && n > 1 {
        format!("2^{}", n.trailing_zeros())
    } else {
        n.to_string()
    }
}

/// Text of one cell: the rounded mean entry time or `Failed` when a
/// metastable window exists, otherwise `time / switches` with the
/// below-threshold entry time.
pub fn cell_text(cell: &SweepCell) -> String {
    let Some(s) = cell.summary() else {
        return "error".to_string();
    };
    let round = |x: Option<f64>| x.map(|v| format!("{}", v.round() as i64)).unwrap_or_else(|| "-".into());
    match s.failed {
        Some(true) => "Failed".to_string(),
        Some(false) => round(s.mean_entry_metastable),
        None => format!("{} / {}", round(s.mean_entry_below), s.mean_switches.round() as i64),
    }
}

/// Aligned grid with one row per n and one column per p.
pub fn render_table(cells: &[SweepCell]) -> String {
    let mut ns: Vec<u64> = Vec::new();
    let mut ps: Vec<f64> = Vec::new();
    for c in cells {
        if !ns.contains(&c.n) {
            ns.push(c.n);
        }
        if !ps.contains(&c.p) {
            ps.push(c.p);
        }
    }
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut header = vec!["n".to_string()];
    header.extend(ps.iter().map(|&p| format!("p={}", probability_label(p))));
    rows.push(header);
    for &n in &ns {
        let mut row = vec![n_label(n)];
        for &p in &ps {
            let text = cells
                .iter()
                .find(|c| c.n == n && c.p == p)
                .map(cell_text)
                .unwrap_or_else(|| "-".into());
            row.push(text);
        }
        rows.push(row);
    }
    let columns = rows.first().map_or(0, Vec::len);
    let widths: Vec<usize> = (0..columns)
        .map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let line: Vec<String> = row.iter().zip(&widths).map(|(t, &w)| format!("{t:>w$}")).collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
        if i == 0 {
            let _ = writeln!(
                out,
                "{}",
                "-".repeat(widths.iter().sum::<usize>() + 2 * (columns.saturating_sub(1)))
            );
        }
    }
    out
}

/// Persists each successful cell under `dir/<cell>/` and writes the table.
/// Cell errors are listed at the end of the table file.
pub fn persist_sweep(cells: &[SweepCell], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut table = render_table(cells);
    for cell in cells {
        match &cell.result {
            Ok(outcome) => {
                outcome.persist(&dir.join(cell.dir_name()))?;
            }
            Err(e) => {
                let _ = writeln!(table, "error at n={} p={}: {e}", cell.n, probability_label(cell.p));
            }
        }
    }
    fs::write(dir.join(TABLE_FILE), table)?;
    Ok(())
}

/// First error among the cells, if any.
pub fn first_error(cells: &[SweepCell]) -> Option<&Error> {
    cells.iter().find_map(|c| c.result.as_ref().err())
}
