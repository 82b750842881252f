//! `usd`: simulate, sweep and analyse the noisy Undecided-State dynamics.
//!
//! Exit codes: 0 success, 1 a statistical check did not pass (`equiv`),
//! 2 usage or configuration error, 3 runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use usd_core::analytics::{expected_next, expected_next_regime, thresholds, LogBase, Regime, ThresholdSet};
use usd_core::harness::{
    parse_probability, persist_sweep, render_table, sweep, Experiment, ExperimentSpec, InitialCondition, SummaryStats,
    SwitchWindow,
};
use usd_core::{equivalence_report, Configuration, EngineRegistry, Error, Model, NoiseSpec, Trajectory};

const OUT_ENV: &str = "USD_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "usd", version, about = "Undecided-State dynamics with communication noise")]
struct Cli {
    /// Worker threads for trial execution (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a multi-trial experiment and persist trajectories and summary
    Run(RunArgs),
    /// Run an experiment per (n, p) grid cell and print the combined table
    Sweep(SweepArgs),
    /// Print the expected next-round counts of a configuration
    Expect(ExpectArgs),
    /// Print the regime threshold constants for a noise level
    Thresholds(ThresholdArgs),
    /// Check that the noisy and stubborn-agent models coincide
    Equiv(EquivArgs),
    /// Recompute per-trial statistics from a trajectory CSV
    Analyze(AnalyzeArgs),
}

fn probability(s: &str) -> Result<f64, String> {
    parse_probability(s).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InitArg {
    Balanced,
    ConsensusAlpha,
    ConsensusBeta,
    Explicit,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LogBaseArg {
    E,
    #[value(name = "2")]
    Two,
    #[value(name = "10")]
    Ten,
}

impl From<LogBaseArg> for LogBase {
    fn from(b: LogBaseArg) -> Self {
        match b {
            LogBaseArg::E => LogBase::E,
            LogBaseArg::Two => LogBase::Two,
            LogBaseArg::Ten => LogBase::Ten,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum WindowArg {
    AfterBelow,
    Full,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RegimeArg {
    Subcritical,
    Supercritical,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Subcritical => Regime::Subcritical,
            RegimeArg::Supercritical => Regime::Supercritical,
        }
    }
}

/// Settings shared by `run` and `sweep`. Without `--config` the defaults
/// are 400 rounds, 100 trials, seed 0 and a balanced start.
#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Experiment file (TOML); flags below override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Rounds per trial
    #[arg(long)]
    rounds: Option<u64>,
    /// Number of independent trials
    #[arg(long)]
    trials: Option<u64>,
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    init: Option<InitArg>,
    /// Alpha count for `--init explicit`
    #[arg(long, requires = "b")]
    a: Option<u64>,
    /// Beta count for `--init explicit`
    #[arg(long, requires = "a")]
    b: Option<u64>,
    /// Step engine (see `usd run --list-engines`)
    #[arg(long)]
    engine: Option<String>,
    /// Lower edge of the metastable window as a fraction of n
    #[arg(long)]
    metastable_coefficient: Option<f64>,
    /// Coefficient c of the c*sqrt(n log n) bias level
    #[arg(long)]
    below_coefficient: Option<f64>,
    #[arg(long, value_enum)]
    log_base: Option<LogBaseArg>,
    #[arg(long, value_enum)]
    switch_window: Option<WindowArg>,
    /// Largest fraction of failed trials for which a cell is not Failed
    #[arg(long)]
    max_failure_rate: Option<f64>,
    /// Output directory
    #[arg(long, env = OUT_ENV, default_value = "usd-out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Population size
    #[arg(long)]
    n: Option<u64>,
    /// Uniform noise probability (decimal or fraction such as 1/12)
    #[arg(long, value_parser = probability)]
    p: Option<f64>,
    /// Print the registered engines and exit
    #[arg(long)]
    list_engines: bool,
    #[command(flatten)]
    experiment: ExperimentArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Population sizes, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    n_values: Vec<u64>,
    /// Noise probabilities, comma separated
    #[arg(long, value_delimiter = ',', value_parser = probability)]
    p_values: Vec<f64>,
    #[command(flatten)]
    experiment: ExperimentArgs,
}

#[derive(Debug, Args)]
struct ExpectArgs {
    /// Population size
    #[arg(long)]
    n: u64,
    /// Alpha count
    #[arg(long)]
    a: u64,
    /// Beta count
    #[arg(long)]
    b: u64,
    /// Uniform noise probability (decimal or fraction)
    #[arg(long, value_parser = probability, required_unless_present = "epsilon")]
    p: Option<f64>,
    /// Evaluate the regime forms at distance epsilon from the critical point
    #[arg(long, requires = "regime", conflicts_with = "p")]
    epsilon: Option<f64>,
    #[arg(long, value_enum)]
    regime: Option<RegimeArg>,
    /// Print as JSON
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ThresholdArgs {
    /// Uniform noise probability (decimal or fraction)
    #[arg(long, value_parser = probability, required_unless_present = "epsilon")]
    p: Option<f64>,
    #[arg(long, requires = "regime", conflicts_with = "p")]
    epsilon: Option<f64>,
    #[arg(long, value_enum)]
    regime: Option<RegimeArg>,
}

#[derive(Debug, Args)]
struct EquivArgs {
    /// Population size (updating agents)
    #[arg(long)]
    n: u64,
    #[arg(long, value_parser = probability)]
    p: f64,
    /// One-round transitions drawn per model
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 0.01)]
    significance: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Starting alpha count (default n/2)
    #[arg(long, requires = "b")]
    a: Option<u64>,
    #[arg(long, requires = "a")]
    b: Option<u64>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Trajectory CSV with header trial,round,a,b,q,s
    #[arg(long)]
    trajectories: PathBuf,
    /// Noise probability the trajectories were produced with
    #[arg(long, value_parser = probability)]
    p: f64,
    #[arg(long)]
    metastable_coefficient: Option<f64>,
    #[arg(long, default_value_t = 10.0)]
    below_coefficient: f64,
    #[arg(long, value_enum, default_value = "e")]
    log_base: LogBaseArg,
    #[arg(long, value_enum, default_value = "after-below")]
    switch_window: WindowArg,
    #[arg(long, default_value_t = 0.0)]
    max_failure_rate: f64,
}

#[derive(Debug)]
enum Failure {
    Core(Error),
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Core(Error::Io(_)) | Failure::Runtime(_) => 3,
            Failure::Core(_) | Failure::Usage(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Usage(m) | Failure::Runtime(m) => f.write_str(m),
        }
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Expect(args) => cmd_expect(args),
        Command::Thresholds(args) => cmd_thresholds(args),
        Command::Equiv(args) => cmd_equiv(args),
        Command::Analyze(args) => cmd_analyze(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code())
        }
    }
}

fn base_spec(args: &ExperimentArgs, n: Option<u64>, p: Option<f64>) -> Result<ExperimentSpec, Failure> {
    let mut spec = match &args.config {
        Some(path) => ExperimentSpec::from_path(path)?,
        None => {
            let n = n.ok_or_else(|| Failure::Usage("--n is required without --config".into()))?;
            ExperimentSpec::uniform(n, p.unwrap_or(0.0), InitialCondition::Balanced, 400, 100, 0)
        }
    };
    if let Some(n) = n {
        if let Model::Stubborn(_) = spec.model {
            return Err(Failure::Usage(
                "--n cannot override a stubborn model; edit the config".into(),
            ));
        }
        spec.n = n;
    }
    if let Some(p) = p {
        spec.model = Model::Noise(NoiseSpec::uniform(p)?);
    }
    if let Some(r) = args.rounds {
        spec.rounds = r;
    }
    if let Some(t) = args.trials {
        spec.trials = t;
    }
    if let Some(s) = args.seed {
        spec.master_seed = s;
    }
    if let Some(init) = args.init {
        spec.init = match init {
            InitArg::Balanced => InitialCondition::Balanced,
            InitArg::ConsensusAlpha => InitialCondition::ConsensusAlpha,
            InitArg::ConsensusBeta => InitialCondition::ConsensusBeta,
            InitArg::Explicit => match (args.a, args.b) {
                (Some(a), Some(b)) => InitialCondition::Explicit { a, b },
                _ => return Err(Failure::Usage("--init explicit needs --a and --b".into())),
            },
        };
    } else if let (Some(a), Some(b)) = (args.a, args.b) {
        spec.init = InitialCondition::Explicit { a, b };
    }
    if let Some(e) = &args.engine {
        spec.engine = e.clone();
    }
    let an = &mut spec.analytics;
    if args.metastable_coefficient.is_some() {
        an.metastable_coefficient = args.metastable_coefficient;
    }
    if let Some(c) = args.below_coefficient {
        an.below_coefficient = c;
    }
    if let Some(b) = args.log_base {
        an.log_base = b.into();
    }
    if let Some(w) = args.switch_window {
        an.switch_window = window(w);
    }
    if let Some(r) = args.max_failure_rate {
        an.max_failure_rate = r;
    }
    Ok(spec)
}

fn window(w: WindowArg) -> SwitchWindow {
    match w {
        WindowArg::AfterBelow => SwitchWindow::AfterBelowEntry,
        WindowArg::Full => SwitchWindow::Full,
    }
}

fn summary_json(summary: &SummaryStats) -> Result<String, Failure> {
    serde_json::to_string_pretty(summary).map_err(|e| Failure::Runtime(e.to_string()))
}

fn cmd_run(args: RunArgs) -> CmdResult {
    if args.list_engines {
        for (name, description) in EngineRegistry::default().describe() {
            println!("{name:<12} {description}");
        }
        return Ok(0);
    }
    if args.experiment.config.is_none() && args.p.is_none() {
        return Err(Failure::Usage("--p is required without --config".into()));
    }
    let spec = base_spec(&args.experiment, args.n, args.p)?;
    let outcome = Experiment::new(spec)?.run()?;
    outcome.persist(&args.experiment.out)?;
    println!("{}", summary_json(&outcome.summary)?);
    Ok(0)
}

fn cmd_sweep(args: SweepArgs) -> CmdResult {
    let first_n = args.n_values.first().copied();
    let base = base_spec(&args.experiment, first_n, None)?;
    let cells = sweep(&base, &args.n_values, &args.p_values);
    persist_sweep(&cells, &args.experiment.out)?;
    print!("{}", render_table(&cells));
    let mut code = 0;
    for cell in &cells {
        if let Err(e) = &cell.result {
            eprintln!("error: n={} p={}: {e}", cell.n, cell.p);
            code = code.max(Failure::Core(e.clone()).code());
        }
    }
    Ok(code)
}

fn cmd_expect(args: ExpectArgs) -> CmdResult {
    let config = Configuration::new(args.n, args.a, args.b)?;
    let e = match (args.p, args.epsilon, args.regime) {
        (Some(p), _, _) => expected_next(&config, p)?,
        (None, Some(eps), Some(regime)) => expected_next_regime(&config, eps, regime.into())?,
        _ => return Err(Failure::Usage("give --p, or --epsilon with --regime".into())),
    };
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&e).map_err(|e| Failure::Runtime(e.to_string()))?
        );
    } else {
        println!("e_a = {}", e.e_a);
        println!("e_b = {}", e.e_b);
        println!("e_s = {}", e.e_s);
        println!("e_q = {}", e.e_q);
    }
    Ok(0)
}

fn cmd_thresholds(args: ThresholdArgs) -> CmdResult {
    let set = match (args.p, args.epsilon, args.regime) {
        (Some(p), _, _) => ThresholdSet::for_noise(p).ok_or_else(|| {
            Failure::Usage(format!(
                "p = {p} is at the critical point 1/6; no thresholds are defined"
            ))
        })?,
        (None, Some(eps), Some(regime)) => thresholds(eps, regime.into())?,
        _ => return Err(Failure::Usage("give --p, or --epsilon with --regime".into())),
    };
    let json = serde_json::json!({
        "thresholds": set,
        "qbar_is_decreasing": set.qbar_is_decreasing(),
        "bias_partition": set.bias_partition(),
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&json).map_err(|e| Failure::Runtime(e.to_string()))?
    );
    Ok(0)
}

fn cmd_equiv(args: EquivArgs) -> CmdResult {
    let noise = NoiseSpec::uniform(args.p)?;
    let start = match (args.a, args.b) {
        (Some(a), Some(b)) => Some(Configuration::new(args.n, a, b)?),
        _ => None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let report = equivalence_report(args.n, &noise, start, args.samples, args.significance, &mut rng)?;
    println!(
        "stubborn counts (alpha, beta, undecided) = {:?}",
        report.setup.stub_counts()
    );
    println!(
        "analytic max difference = {:e} over {} configurations: {}",
        report.analytic_max_diff,
        report.grid_points,
        verdict(report.analytic_pass())
    );
    println!(
        "chi-square = {:.4}, df = {}, p-value = {:.4} at significance {}: {}",
        report.chi_square.statistic,
        report.chi_square.degrees_of_freedom,
        report.chi_square.p_value,
        report.significance,
        verdict(report.statistical_pass())
    );
    Ok(if report.passed() { 0 } else { 1 })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

fn cmd_analyze(args: AnalyzeArgs) -> CmdResult {
    let trajectories = usd_core::harness::read_trajectories(&args.trajectories, None)?;
    let Some(first) = trajectories.first() else {
        return Err(Failure::Usage(format!(
            "{} holds no trajectories",
            args.trajectories.display()
        )));
    };
    let spec = analysis_spec(&args, first, trajectories.len() as u64);
    let experiment = Experiment::new(spec.clone())?;
    let records: Vec<_> = trajectories
        .iter()
        .enumerate()
        .map(|(i, t)| experiment.analyse(i as u64, t))
        .collect();
    let mut out = csv::Writer::from_writer(std::io::stdout());
    let row = |out: &mut csv::Writer<_>, fields: [String; 6]| out.write_record(fields).map_err(rt);
    row(
        &mut out,
        [
            "trial",
            "entry_metastable",
            "entry_below",
            "switches",
            "max_abs_bias",
            "status",
        ]
        .map(String::from),
    )?;
    for r in &records {
        let opt = |x: Option<u64>| x.map(|v| v.to_string()).unwrap_or_default();
        row(
            &mut out,
            [
                r.trial.to_string(),
                opt(r.entry_metastable),
                opt(r.entry_below),
                r.switches.to_string(),
                r.max_abs_bias.to_string(),
                r.status.name().to_string(),
            ],
        )?;
    }
    out.flush().map_err(rt)?;
    let summary = SummaryStats::aggregate(&spec, experiment.window(), records);
    eprintln!("{}", summary_json(&summary)?);
    Ok(0)
}

fn rt(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn analysis_spec(args: &AnalyzeArgs, first: &Trajectory, trials: u64) -> ExperimentSpec {
    let start = first.states()[0];
    let mut spec = ExperimentSpec::uniform(
        first.n(),
        args.p,
        InitialCondition::Explicit {
            a: start.a(),
            b: start.b(),
        },
        (first.len() as u64).saturating_sub(1).max(1),
        trials,
        0,
    );
    spec.analytics.metastable_coefficient = args.metastable_coefficient;
    spec.analytics.below_coefficient = args.below_coefficient;
    spec.analytics.log_base = args.log_base.into();
    spec.analytics.switch_window = window(args.switch_window);
    spec.analytics.max_failure_rate = args.max_failure_rate;
    spec
}
