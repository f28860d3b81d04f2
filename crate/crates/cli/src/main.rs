//! Command-line front end: run a job, compare combining strategies, or check
//! monoid laws.
//!
//! Exit codes: 0 success, 1 job/invariance/law failure, 2 usage or config
//! error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mrmonoid::catalog;
use mrmonoid::engine::{render_tsv, run_job, CombinerPolicy, EngineError, RunConfig, Strategy};
use mrmonoid::jobs::{build_job, default_strategy, JobParams, JOB_NAMES};
use mrmonoid::monoid::check_laws;

#[derive(Parser)]
#[command(
    name = "mrmonoid",
    version,
    about = "Deterministic in-process MapReduce with monoid-derived combiners"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one job: write TSV output and a JSON metrics document.
    Run(RunArgs),
    /// Run one job under two or more configs and tabulate shuffle cost.
    Compare(CompareArgs),
    /// Check monoid laws for a named catalog monoid.
    CheckLaws(CheckLawsArgs),
}

#[derive(Args)]
struct JobFlags {
    /// Job name (see --help for the list).
    #[arg(long, value_parser = JOB_NAMES)]
    job: String,
    /// Input file: one document per line (corpus jobs) or key<TAB>integer
    /// lines (mean jobs).
    #[arg(long)]
    input: PathBuf,
    /// Number of input splits (map tasks).
    #[arg(long, default_value_t = 4)]
    splits: usize,
    /// Number of reducers.
    #[arg(long, default_value_t = 2)]
    reducers: usize,
    /// Seed for the random combiner policy.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Maximum distinct keys an in-mapper table holds (default unbounded).
    #[arg(long)]
    capacity: Option<usize>,
    /// Co-occurrence window in tokens.
    #[arg(long, default_value_t = 2)]
    window: usize,
    /// HyperLogLog precision (4..=16).
    #[arg(long, default_value_t = 12)]
    precision: u8,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    job: JobFlags,
    /// Local aggregation strategy: none, combiner, or in_mapper.
    /// Defaults to the job's natural strategy.
    #[arg(long)]
    strategy: Option<String>,
    /// Combiner policy: never, once, exactly:<k>, or random.
    #[arg(long, default_value = "once")]
    policy: String,
    /// TSV output path (stdout when omitted).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Metrics JSON path (stderr when omitted).
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Skip the registration type check. Demonstration backdoor only.
    #[arg(long)]
    allow_broken: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    job: JobFlags,
    /// A run config as comma-separated overrides, e.g.
    /// "strategy=combiner,policy=exactly:3,splits=8". Repeat for each config;
    /// at least two are required.
    #[arg(long = "config")]
    configs: Vec<String>,
}

#[derive(Args)]
struct CheckLawsArgs {
    /// Monoid name: intsum, sumcount, stripe, bloom, cms, hll, or intsub.
    monoid: String,
    /// Number of sampled trials.
    #[arg(default_value_t = 1000)]
    trials: u32,
    /// Generator seed.
    #[arg(default_value_t = 42)]
    seed: u64,
}

/// Exit-code-bearing error: config/usage problems exit 2, job or law
/// failures exit 1.
enum CliError {
    Config(String),
    Failure(String),
}

impl CliError {
    fn report(self) -> ExitCode {
        match self {
            CliError::Config(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(2)
            }
            CliError::Failure(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(1)
            }
        }
    }
}

/// Bad strategy/job pairings and the like are config mistakes (exit 2);
/// anything that goes wrong after a valid config starts running is a job
/// failure (exit 1).
fn engine_error(e: EngineError) -> CliError {
    match e {
        EngineError::InvalidConfig(_) => CliError::Config(e.to_string()),
        other => CliError::Failure(other.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
        Command::CheckLaws(args) => cmd_check_laws(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => err.report(),
    }
}

fn parse_strategy(s: &str) -> Result<Strategy, CliError> {
    match s {
        "none" => Ok(Strategy::None),
        "combiner" => Ok(Strategy::Combiner),
        "in_mapper" => Ok(Strategy::InMapper),
        other => Err(CliError::Config(format!(
            "unknown strategy {other:?}; expected none, combiner, or in_mapper"
        ))),
    }
}

fn parse_policy(s: &str, seed: u64) -> Result<CombinerPolicy, CliError> {
    match s {
        "never" => Ok(CombinerPolicy::Never),
        "once" => Ok(CombinerPolicy::Once),
        "random" => Ok(CombinerPolicy::Random { seed }),
        other => {
            if let Some(k) = other.strip_prefix("exactly:") {
                let k = k.parse().map_err(|_| {
                    CliError::Config(format!("bad round count in policy {other:?}"))
                })?;
                return Ok(CombinerPolicy::Exactly(k));
            }
            Err(CliError::Config(format!(
                "unknown policy {other:?}; expected never, once, exactly:<k>, or random"
            )))
        }
    }
}

fn validate_job_flags(flags: &JobFlags) -> Result<(), CliError> {
    if flags.splits < 1 {
        return Err(CliError::Config("--splits must be at least 1".into()));
    }
    if flags.reducers < 1 {
        return Err(CliError::Config("--reducers must be at least 1".into()));
    }
    if flags.capacity == Some(0) {
        return Err(CliError::Config("--capacity must be at least 1".into()));
    }
    if flags.window < 1 {
        return Err(CliError::Config("--window must be at least 1".into()));
    }
    if !(4..=16).contains(&flags.precision) {
        return Err(CliError::Config("--precision must be in 4..=16".into()));
    }
    Ok(())
}

fn read_input_lines(path: &Path) -> Result<Vec<String>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(text.lines().map(String::from).collect())
}

fn build_named_job(flags: &JobFlags) -> Result<mrmonoid::JobSpec, CliError> {
    let params = JobParams {
        window: flags.window,
        precision: flags.precision,
        ..JobParams::default()
    };
    build_job(&flags.job, &params)
        .ok_or_else(|| CliError::Config(format!("unknown job {:?}", flags.job)))
}

fn write_or_print(path: &Option<PathBuf>, content: &str, to_stderr: bool) -> Result<(), CliError> {
    match path {
        Some(path) => fs::write(path, content)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display()))),
        None if to_stderr => {
            eprint!("{content}");
            Ok(())
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// A job may carry both an explicit combiner and an intermediate monoid;
/// the explicit combiner wins and the monoid is only used where a combiner
/// cannot be (in-mapper combining).
fn warn_if_shadowed_monoid(job: &mrmonoid::JobSpec, strategy: Strategy) {
    if strategy == Strategy::Combiner && job.combiner.is_some() && job.monoid.is_some() {
        eprintln!(
            "warning: job {} declares both a combiner and an intermediate monoid; using the explicit combiner",
            job.name
        );
    }
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    validate_job_flags(&args.job)?;
    let job = build_named_job(&args.job)?;
    let input = read_input_lines(&args.job.input)?;
    let strategy = match &args.strategy {
        Some(s) => parse_strategy(s)?,
        None => default_strategy(&args.job.job),
    };
    warn_if_shadowed_monoid(&job, strategy);
    let config = RunConfig {
        n_splits: args.job.splits,
        n_reducers: args.job.reducers,
        strategy,
        policy: parse_policy(&args.policy, args.job.seed)?,
        capacity: args.job.capacity,
        allow_broken: args.allow_broken,
    };
    let result = run_job(&job, &input, &config).map_err(engine_error)?;

    let tsv = render_tsv(&result.outputs);
    write_or_print(&args.output, &tsv, false)?;
    let mut metrics_json =
        serde_json::to_string(&result.metrics).expect("metrics always serialize");
    metrics_json.push('\n');
    write_or_print(&args.metrics, &metrics_json, true)?;
    Ok(())
}

/// One comparison run: the base flags overridden by a config string such as
/// "strategy=in_mapper,policy=never,splits=8,capacity=16".
fn parse_compare_config(flags: &JobFlags, expr: &str) -> Result<(String, RunConfig), CliError> {
    let mut strategy = "combiner".to_string();
    let mut policy = "once".to_string();
    let mut splits = flags.splits;
    let mut reducers = flags.reducers;
    let mut seed = flags.seed;
    let mut capacity = flags.capacity;
    for part in expr.split(',').filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("config item {part:?} is not key=value")))?;
        match key {
            "strategy" => strategy = value.to_string(),
            "policy" => policy = value.to_string(),
            "splits" => {
                splits = value
                    .parse()
                    .map_err(|_| CliError::Config(format!("bad splits value {value:?}")))?;
            }
            "reducers" => {
                reducers = value
                    .parse()
                    .map_err(|_| CliError::Config(format!("bad reducers value {value:?}")))?;
            }
            "seed" => {
                seed = value
                    .parse()
                    .map_err(|_| CliError::Config(format!("bad seed value {value:?}")))?;
            }
            "capacity" => {
                capacity = Some(
                    value
                        .parse()
                        .map_err(|_| CliError::Config(format!("bad capacity value {value:?}")))?,
                );
            }
            other => {
                return Err(CliError::Config(format!(
                    "unknown config key {other:?} in {expr:?}"
                )))
            }
        }
    }
    if splits < 1 || reducers < 1 || capacity == Some(0) {
        return Err(CliError::Config(format!(
            "invalid counts in config {expr:?}"
        )));
    }
    let config = RunConfig {
        n_splits: splits,
        n_reducers: reducers,
        strategy: parse_strategy(&strategy)?,
        policy: parse_policy(&policy, seed)?,
        capacity,
        allow_broken: false,
    };
    Ok((expr.to_string(), config))
}

fn cmd_compare(args: CompareArgs) -> Result<(), CliError> {
    validate_job_flags(&args.job)?;
    if args.configs.len() < 2 {
        return Err(CliError::Config(
            "compare needs at least two --config arguments".into(),
        ));
    }
    let job = build_named_job(&args.job)?;
    let input = read_input_lines(&args.job.input)?;
    let is_monoid_job = job.monoid.is_some();

    let mut runs = Vec::new();
    for expr in &args.configs {
        let (label, config) = parse_compare_config(&args.job, expr)?;
        let result = run_job(&job, &input, &config).map_err(engine_error)?;
        runs.push((label, result));
    }

    println!("job: {}", args.job.job);
    println!(
        "{:<50} {:>16} {:>14} {:>18}",
        "config", "shuffled_records", "shuffled_bytes", "map_output_records"
    );
    for (label, result) in &runs {
        println!(
            "{:<50} {:>16} {:>14} {:>18}",
            label,
            result.metrics.shuffled_records,
            result.metrics.shuffled_bytes,
            result.metrics.map_output_records
        );
    }

    if is_monoid_job {
        let reference = render_tsv(&runs[0].1.outputs);
        for (label, result) in &runs[1..] {
            if render_tsv(&result.outputs) != reference {
                return Err(CliError::Failure(format!(
                    "invariance violation: outputs under config {label:?} differ from {:?}",
                    runs[0].0
                )));
            }
        }
        println!("outputs: identical across {} configs", runs.len());
    } else {
        println!("outputs: equality not enforced (job declares no monoid)");
    }
    Ok(())
}

fn cmd_check_laws(args: CheckLawsArgs) -> Result<(), CliError> {
    if args.trials == 0 {
        return Err(CliError::Config("trials must be at least 1".into()));
    }
    let entry = catalog::entry(&args.monoid).ok_or_else(|| {
        CliError::Config(format!(
            "unknown monoid {:?}; known: {}",
            args.monoid,
            catalog::names().join(", ")
        ))
    })?;
    let report = check_laws(
        &entry.descriptor,
        |rng| (entry.generator)(rng),
        args.trials,
        args.seed,
    );
    print!("monoid={} {report}", entry.name);
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Failure(format!(
            "monoid {} violated {} sampled law instance(s)",
            entry.name,
            report.failures.len()
        )))
    }
}
