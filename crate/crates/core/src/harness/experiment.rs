//! Multi-trial experiments: execution, per-trial analytics, aggregation and
//! persistence.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{classify_regime, Regime, ThresholdSet, TrajectoryStats};
use crate::dynamics::{Dynamics, EngineRegistry};
use crate::error::{Error, Result};
use crate::harness::spec::{ExperimentSpec, SwitchWindow};
use crate::rng::{round_rng, trial_seed};
use crate::stats::mean_sd;
use crate::trajectory::Trajectory;

pub const TRAJECTORY_FILE: &str = "trajectories.csv";
pub const TRIALS_FILE: &str = "trials.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SPEC_FILE: &str = "spec.toml";

/// How one trial relates to the metastable window `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    /// Entered the window and stayed inside it until the last round.
    Sustained,
    /// Entered the window and left it later.
    Broke,
    /// Never reached the lower edge.
    NeverEntered,
    /// No metastable window is defined for this noise level.
    NotApplicable,
}

impl TrialStatus {
    pub fn is_failure(self) -> bool {
        matches!(self, TrialStatus::Broke | TrialStatus::NeverEntered)
    }

    pub fn name(self) -> &'static str {
        match self {
            TrialStatus::Sustained => "sustained",
            TrialStatus::Broke => "broke",
            TrialStatus::NeverEntered => "never_entered",
            TrialStatus::NotApplicable => "not_applicable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub entry_metastable: Option<u64>,
    pub entry_below: Option<u64>,
    pub switches: u64,
    /// Majority changes after the metastable entry.
    pub switches_after_entry: u64,
    pub min_abs_bias: u64,
    pub max_abs_bias: u64,
    pub status: TrialStatus,
}

/// Metastable window used for entry and failure decisions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetastableWindow {
    pub lo_frac: f64,
    pub hi_frac: f64,
}

impl MetastableWindow {
    fn contains(&self, n: u64, s: i64) -> bool {
        let x = s.unsigned_abs() as f64;
        x >= self.lo_frac * n as f64 && x <= self.hi_frac * n as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryStats {
    pub n: u64,
    pub p: Option<f64>,
    pub engine: String,
    pub regime: Option<Regime>,
    pub trials: u64,
    pub rounds: u64,
    pub seed: u64,
    pub entry_criterion: String,
    pub metastable_window: Option<MetastableWindow>,
    pub below_coefficient: f64,
    pub log_base: String,
    pub mean_entry_metastable: Option<f64>,
    pub sd_entry: Option<f64>,
    pub failure_rate: Option<f64>,
    pub failed: Option<bool>,
    pub mean_entry_below: Option<f64>,
    pub sd_entry_below: Option<f64>,
    pub mean_switches: f64,
    pub sd_switches: f64,
    #[serde(skip)]
    pub per_trial: Vec<TrialRecord>,
}

impl SummaryStats {
    /// Aggregates from per-trial rows. Means of entry times are taken over
    /// trials that entered.
    pub fn aggregate(spec: &ExperimentSpec, window: Option<MetastableWindow>, per_trial: Vec<TrialRecord>) -> Self {
        let entries: Vec<f64> = per_trial
            .iter()
            .filter_map(|r| r.entry_metastable)
            .map(|t| t as f64)
            .collect();
        let below: Vec<f64> = per_trial
            .iter()
            .filter_map(|r| r.entry_below)
            .map(|t| t as f64)
            .collect();
        let switches: Vec<f64> = per_trial.iter().map(|r| r.switches as f64).collect();
        let failure_rate =
            window.map(|_| per_trial.iter().filter(|r| r.status.is_failure()).count() as f64 / per_trial.len() as f64);
        let (mean_switches, sd_switches) = mean_sd(&switches).unwrap_or((0.0, 0.0));
        let a = &spec.analytics;
        let entry_criterion = match (window, a.metastable_coefficient) {
            (None, _) => "none (no metastable window at this noise level)".to_string(),
            (Some(w), Some(_)) => format!("|s| >= {} n (override)", w.lo_frac),
            (Some(w), None) => format!("|s| >= delta_lo_frac n = {} n", w.lo_frac),
        };
        Self {
            n: spec.n,
            p: spec.model.uniform_p(),
            engine: spec.engine.clone(),
            regime: spec.model.uniform_p().map(classify_regime),
            trials: spec.trials,
            rounds: spec.rounds,
            seed: spec.master_seed,
            entry_criterion,
            metastable_window: window,
            below_coefficient: a.below_coefficient,
            log_base: a.log_base.name().to_string(),
            mean_entry_metastable: mean_sd(&entries).map(|m| m.0),
            sd_entry: mean_sd(&entries).map(|m| m.1),
            failure_rate,
            failed: failure_rate.map(|r| r > a.max_failure_rate),
            mean_entry_below: mean_sd(&below).map(|m| m.0),
            sd_entry_below: mean_sd(&below).map(|m| m.1),
            mean_switches,
            sd_switches,
            per_trial,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub record: TrialRecord,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub spec: ExperimentSpec,
    pub summary: SummaryStats,
    pub trajectories: Vec<Trajectory>,
}

/// A validated experiment bound to its engine.
#[derive(Debug)]
pub struct Experiment {
    spec: ExperimentSpec,
    engine: Box<dyn Dynamics>,
    thresholds: Option<ThresholdSet>,
    window: Option<MetastableWindow>,
}

impl Experiment {
    pub fn new(spec: ExperimentSpec) -> Result<Self> {
        Self::with_registry(spec, &EngineRegistry::default())
    }

    pub fn with_registry(spec: ExperimentSpec, registry: &EngineRegistry) -> Result<Self> {
        spec.validate()?;
        let engine = registry.build(&spec.engine, spec.n, &spec.model)?;
        let thresholds = spec.model.uniform_p().and_then(ThresholdSet::for_noise);
        let window = thresholds.as_ref().and_then(|ts| {
            let lo = spec.analytics.metastable_coefficient.or(ts.delta_lo_frac)?;
            Some(MetastableWindow {
                lo_frac: lo,
                hi_frac: ts.delta_hi_frac.unwrap_or(1.0),
            })
        });
        Ok(Self {
            spec,
            engine,
            thresholds,
            window,
        })
    }

    pub fn spec(&self) -> &ExperimentSpec {
        &self.spec
    }

    pub fn thresholds(&self) -> Option<&ThresholdSet> {
        self.thresholds.as_ref()
    }

    pub fn window(&self) -> Option<MetastableWindow> {
        self.window
    }

    /// Simulates trial `trial_index`; a pure function of the experiment and the index.
    pub fn trajectory(&self, trial_index: u64) -> Result<Trajectory> {
        let seed = trial_seed(self.spec.master_seed, trial_index);
        let mut config = self.spec.init.configuration(self.spec.n)?;
        let mut traj = Trajectory::new(config);
        for round in 0..self.spec.rounds {
            let mut rng = round_rng(seed, round);
            config = self.engine.step(&config, &mut rng);
            traj.push(config);
        }
        Ok(traj)
    }

    pub fn analyse(&self, trial_index: u64, traj: &Trajectory) -> TrialRecord {
        let a = &self.spec.analytics;
        let last = traj.len() as u64 - 1;
        let below = crate::analytics::below_threshold_entry(traj, a.below_coefficient, a.log_base);
        let window = match a.switch_window {
            SwitchWindow::Full => (0, last),
            SwitchWindow::Rounds { start, end } => (start, end),
            SwitchWindow::AfterBelowEntry => match below {
                Some(t) => (t, last),
                None => (last + 1, last),
            },
        };
        let stats = TrajectoryStats::compute(
            traj,
            self.thresholds.as_ref(),
            self.window.map(|w| w.lo_frac),
            a.below_coefficient,
            a.log_base,
            window,
        );
        let (status, switches_after_entry) = match (self.window, stats.entry_round_metastable) {
            (None, _) => (TrialStatus::NotApplicable, 0),
            (Some(_), None) => (TrialStatus::NeverEntered, 0),
            (Some(w), Some(t)) => {
                let after: Vec<i64> = traj.biases().skip(t as usize).collect();
                let inside = after.iter().all(|&s| w.contains(traj.n(), s));
                let status = if inside {
                    TrialStatus::Sustained
                } else {
                    TrialStatus::Broke
                };
                (status, crate::analytics::count_sign_switches(after))
            }
        };
        TrialRecord {
            trial: trial_index,
            seed: trial_seed(self.spec.master_seed, trial_index),
            entry_metastable: stats.entry_round_metastable,
            entry_below: stats.entry_round_below_threshold,
            switches: stats.switch_count,
            switches_after_entry,
            min_abs_bias: stats.min_abs_bias,
            max_abs_bias: stats.max_abs_bias,
            status,
        }
    }

    pub fn run_trial(&self, trial_index: u64) -> Result<TrialOutcome> {
        let trajectory = self.trajectory(trial_index)?;
        let record = self.analyse(trial_index, &trajectory);
        Ok(TrialOutcome { record, trajectory })
    }

    /// Runs every trial on the current rayon pool. Results are keyed by trial
    /// index, so the outcome does not depend on the number of workers.
    pub fn run(&self) -> Result<ExperimentOutcome> {
        let outcomes = (0..self.spec.trials)
            .into_par_iter()
            .map(|i| self.run_trial(i))
            .collect::<Result<Vec<_>>>()?;
        let (records, trajectories): (Vec<_>, Vec<_>) = outcomes.into_iter().map(|o| (o.record, o.trajectory)).unzip();
        Ok(ExperimentOutcome {
            spec: self.spec.clone(),
            summary: SummaryStats::aggregate(&self.spec, self.window, records),
            trajectories,
        })
    }
}

pub fn run_trial(spec: &ExperimentSpec, trial_index: u64) -> Result<Trajectory> {
    Experiment::new(spec.clone())?.trajectory(trial_index)
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    Experiment::new(spec.clone())?.run()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?)
}

fn opt(x: Option<u64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl ExperimentOutcome {
    /// Writes the trajectory CSV, per-trial CSV, JSON summary and experiment file
    /// into `dir`. Files are staged under temporary names and renamed only
    /// once everything has been written.
    pub fn persist(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let staged = |name: &str| dir.join(format!(".{name}.partial"));

        let mut w = csv_writer(&staged(TRAJECTORY_FILE))?;
        w.write_record(["trial", "round", "a", "b", "q", "s"])?;
        for (trial, traj) in self.trajectories.iter().enumerate() {
            for r in traj.records() {
                w.write_record([
                    trial.to_string(),
                    r.round.to_string(),
                    r.a.to_string(),
                    r.b.to_string(),
                    r.q.to_string(),
                    r.s.to_string(),
                ])?;
            }
        }
        w.flush()?;

        let mut w = csv_writer(&staged(TRIALS_FILE))?;
        w.write_record([
            "trial",
            "seed",
            "entry_metastable",
            "entry_below",
            "switches",
            "switches_after_entry",
            "min_abs_bias",
            "max_abs_bias",
            "status",
        ])?;
        for r in &self.summary.per_trial {
            w.write_record([
                r.trial.to_string(),
                r.seed.to_string(),
                opt(r.entry_metastable),
                opt(r.entry_below),
                r.switches.to_string(),
                r.switches_after_entry.to_string(),
                r.min_abs_bias.to_string(),
                r.max_abs_bias.to_string(),
                r.status.name().to_string(),
            ])?;
        }
        w.flush()?;

        let mut json = serde_json::to_string_pretty(&self.summary)?;
        json.push('\n');
        fs::write(staged(SUMMARY_FILE), json)?;
        fs::write(staged(SPEC_FILE), self.spec.to_toml_string())?;

        let mut written = Vec::new();
        for name in [TRAJECTORY_FILE, TRIALS_FILE, SUMMARY_FILE, SPEC_FILE] {
            let target = dir.join(name);
            fs::rename(staged(name), &target)?;
            written.push(target);
        }
        Ok(written)
    }
}

/// Reads a per-trial CSV written by [`ExperimentOutcome::persist`].
pub fn read_trial_records(path: &Path) -> Result<Vec<TrialRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    reader
        .deserialize::<TrialRecord>()
        .map(|r| r.map_err(Error::from))
        .collect()
}

/// Reads a trajectory CSV back into one trajectory per trial.
pub fn read_trajectories(path: &Path, n: Option<u64>) -> Result<Vec<Trajectory>> {
    #[derive(Deserialize)]
    struct Row {
        trial: u64,
        round: u64,
        a: u64,
        b: u64,
        q: u64,
        s: i64,
    }
    let mut reader = csv::Reader::from_path(path)?;
    let mut grouped: Vec<Vec<crate::state::Configuration>> = Vec::new();
    for row in reader.deserialize::<Row>() {
        let row = row?;
        let total = n.unwrap_or(row.a + row.b + row.q);
        let config = crate::state::Configuration::new(total, row.a, row.b)?;
        if config.q() != row.q || config.s() != row.s {
            return Err(Error::InvalidConfiguration(format!(
                "row (trial {}, round {}) violates a + b + q = n or s = a - b",
                row.trial, row.round
            )));
        }
        let trial = row.trial as usize;
        if trial >= grouped.len() {
            grouped.resize_with(trial + 1, Vec::new);
        }
        if grouped[trial].len() as u64 != row.round {
            return Err(Error::InvalidConfiguration(format!(
                "trial {} rounds are not consecutive at round {}",
                row.trial, row.round
            )));
        }
        grouped[trial].push(config);
    }
    grouped
        .into_iter()
        .filter(|g| !g.is_empty())
        .map(Trajectory::from_states)
        .collect()
}
