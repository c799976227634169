//! Argument definitions and the body of each subcommand.

use std::fmt;
use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use heading_bss::{evaluate, monte_carlo, separate, BssError, Method, MethodParams, MonteCarloConfig, Normalization};

use crate::config::ScenarioConfig;
use crate::csvio::{channel_names, read_signal, write_signal};
use crate::plot::{self, PlotKind};
use crate::report::{write_pair, EvaluationDoc, Metric, MonteCarloDoc, MonteCarloRow, SeparationDoc};

/// Bad invocation rather than bad data; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Parser)]
#[command(name = "hbss", version, about = "Sparse blind source separation by clustering phase-space headings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate sources and noisy mixtures from a scenario.
    Simulate(SimulateArgs),
    /// Separate mixtures read from CSV.
    Separate(SeparateArgs),
    /// Compare estimates against known sources.
    Evaluate(EvaluateArgs),
    /// Monte Carlo error table over fresh noise realisations.
    Montecarlo(MonteCarloArgs),
    /// Emit CSV data for phase portraits or sorted heading plots.
    Plotdata(PlotArgs),
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct ScenarioArg {
    /// Scenario file (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Bundled scenario: example1 or section2iii.
    #[arg(long)]
    pub preset: Option<String>,
}

impl ScenarioArg {
    pub fn load(&self) -> Result<(String, ScenarioConfig)> {
        match (&self.config, &self.preset) {
            (Some(p), _) => Ok((p.display().to_string(), ScenarioConfig::load(p)?)),
            (None, Some(name)) => Ok((format!("preset {name}"), ScenarioConfig::preset(name)?)),
            (None, None) => unreachable!("clap enforces one of --config/--preset"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Global,
    Mhc,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Global => Method::Global,
            MethodArg::Mhc => Method::Mhc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalizationArg {
    Rms,
    Energy,
}

impl From<NormalizationArg> for Normalization {
    fn from(n: NormalizationArg) -> Self {
        match n {
            NormalizationArg::Rms => Normalization::Rms,
            NormalizationArg::Energy => Normalization::Energy,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArg,
    /// Directory receiving sources.csv and mixtures.csv.
    #[arg(long, short)]
    pub output_dir: PathBuf,
    /// Override the scenario's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the scenario's noise standard deviation.
    #[arg(long)]
    pub noise_sd: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SeparateArgs {
    /// Mixtures CSV, one column per channel.
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Velocity threshold in (0, 1).
    #[arg(long)]
    pub vth: f64,
    /// Cluster tolerance scale; epsilon = alpha / accepted headings.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Estimates CSV; the report goes beside it as .txt and .json.
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub actual: PathBuf,
    #[arg(long)]
    pub estimates: PathBuf,
    /// Text report path; a .json twin is written beside it.
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long, value_enum, default_value_t = NormalizationArg::Rms)]
    pub normalization: NormalizationArg,
}

#[derive(Debug, Clone, Args)]
pub struct MonteCarloArgs {
    #[command(flatten)]
    pub scenario: ScenarioArg,
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// One table row per threshold.
    #[arg(long, required = true, num_args = 1..)]
    pub vth: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 10)]
    pub sets: usize,
    #[arg(long, default_value_t = 1000)]
    pub runs: usize,
    #[arg(long, value_enum, default_value_t = Metric::Max)]
    pub metric: Metric,
    #[arg(long, value_enum, default_value_t = NormalizationArg::Energy)]
    pub normalization: NormalizationArg,
    /// Override the scenario's master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the scenario's noise standard deviation.
    #[arg(long)]
    pub noise_sd: Option<f64>,
    /// Worker threads; defaults to one per core.
    #[arg(long, env = "HBSS_THREADS")]
    pub threads: Option<usize>,
    /// Text report path; a .json twin is written beside it.
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub kind: PlotKind,
    #[arg(long, short)]
    pub output: PathBuf,
    /// Whiten before computing sorted headings (phase data is always whitened).
    #[arg(long)]
    pub whiten: bool,
    /// Velocity threshold applied before sorting headings.
    #[arg(long, default_value_t = 0.0)]
    pub vth: f64,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::Separate(a) => separate_cmd(&a),
        Command::Evaluate(a) => evaluate_cmd(&a),
        Command::Montecarlo(a) => montecarlo_cmd(&a).map(|_| ()),
        Command::Plotdata(a) => plotdata(&a),
    }
}

fn apply_overrides(cfg: &mut ScenarioConfig, seed: Option<u64>, noise_sd: Option<f64>) {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(sd) = noise_sd {
        cfg.noise_sd = sd;
    }
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let (_, mut cfg) = args.scenario.load()?;
    apply_overrides(&mut cfg, args.seed, args.noise_sd);
    let scenario = cfg.scenario()?;
    let mixtures = scenario.noisy_mixtures(cfg.seed)?;
    fs::create_dir_all(&args.output_dir).with_context(|| format!("creating {}", args.output_dir.display()))?;
    write_signal(
        &args.output_dir.join("sources.csv"),
        &channel_names("s", scenario.sources.channels()),
        &scenario.sources,
    )?;
    write_signal(
        &args.output_dir.join("mixtures.csv"),
        &channel_names("z", mixtures.channels()),
        &mixtures,
    )?;
    Ok(())
}

fn usage_params(method: MethodArg, v_th: f64, alpha: f64) -> Result<MethodParams> {
    MethodParams::new(method.into(), v_th, alpha).map_err(|e| UsageError(e.to_string()).into())
}

pub fn separate_cmd(args: &SeparateArgs) -> Result<()> {
    let params = usage_params(args.method, args.vth, args.alpha)?;
    if args.output.extension().is_some_and(|e| e == "txt" || e == "json") {
        return Err(UsageError("--output names the estimates CSV; .txt and .json are reserved for its report".into()).into());
    }
    let table = read_signal(&args.input)?;
    if table.signal.channels() < 2 {
        return Err(UsageError(format!(
            "{} has {} channel; separation needs at least 2",
            args.input.display(),
            table.signal.channels()
        ))
        .into());
    }
    let result = separate(&table.signal, &params).context("separation failed")?;
    write_signal(
        &args.output,
        &channel_names("source", result.estimates.channels()),
        &result.estimates,
    )?;
    let doc = SeparationDoc::new(&args.input, &result, &params);
    write_pair(&args.output.with_extension("txt"), &doc.to_text(), &doc)?;
    Ok(())
}

pub fn evaluate_cmd(args: &EvaluateArgs) -> Result<()> {
    let actual = read_signal(&args.actual)?;
    let estimates = read_signal(&args.estimates)?;
    let norm: Normalization = args.normalization.into();
    let ev = evaluate(&actual.signal, &estimates.signal, norm).context("evaluation failed")?;
    let doc = EvaluationDoc::new(&args.actual, &args.estimates, norm, &ev);
    write_pair(&args.report, &doc.to_text(), &doc)?;
    Ok(())
}

/// Runs every requested threshold and writes the table. Thresholds where all
/// runs fail still get a row; the command then reports the failure.
pub fn montecarlo_cmd(args: &MonteCarloArgs) -> Result<MonteCarloDoc> {
    let (name, mut cfg) = args.scenario.load()?;
    apply_overrides(&mut cfg, args.seed, args.noise_sd);
    let scenario = cfg.scenario()?;
    let mc = MonteCarloConfig {
        sets: args.sets,
        runs_per_set: args.runs,
        master_seed: cfg.seed,
        normalization: args.normalization.into(),
    };
    let params: Vec<MethodParams> = args
        .vth
        .iter()
        .map(|&v| usage_params(args.method, v, args.alpha))
        .collect::<Result<_>>()?;

    let compute = || -> Result<Vec<MonteCarloRow>> {
        params
            .iter()
            .map(|p| match monte_carlo(&scenario, p, &mc) {
                Ok(r) => Ok(MonteCarloRow {
                    params: *p,
                    total_runs: r.total_runs,
                    failed_runs: r.failed_runs,
                    failure_rate: r.failure_rate(),
                    first_failure: r.first_failure.clone(),
                    report: Some(r),
                }),
                Err(BssError::AllRunsFailed { runs }) => Ok(MonteCarloRow {
                    params: *p,
                    total_runs: runs,
                    failed_runs: runs,
                    failure_rate: 1.0,
                    first_failure: None,
                    report: None,
                }),
                Err(e) => Err(e.into()),
            })
            .collect()
    };
    let rows = match args.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("building thread pool")?
            .install(compute)?,
        None => compute()?,
    };

    let doc = MonteCarloDoc {
        scenario: name,
        noise_sd: cfg.noise_sd,
        master_seed: cfg.seed,
        sets: args.sets,
        runs_per_set: args.runs,
        normalization: mc.normalization,
        metric: args.metric,
        sources: scenario.sources.channels(),
        rows,
    };
    let text = doc.to_text();
    print!("{text}");
    write_pair(&args.report, &text, &doc)?;
    if let Some(row) = doc.rows.iter().find(|r| r.report.is_none()) {
        return Err(BssError::AllRunsFailed { runs: row.total_runs })
            .with_context(|| format!("{} v_th = {}", row.params.method, row.params.v_th));
    }
    Ok(doc)
}

pub fn plotdata(args: &PlotArgs) -> Result<()> {
    let table = read_signal(&args.input)?;
    let (names, data) = match args.kind {
        PlotKind::Phase => plot::phase(&table.signal)?,
        PlotKind::SortedHeadings => plot::sorted_headings(&table.signal, args.whiten, args.vth)?,
    };
    write_signal(&args.output, &names, &data)
}

/// Exit status for an error returned by [`run`].
pub fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        2
    } else {
        1
    }
}

