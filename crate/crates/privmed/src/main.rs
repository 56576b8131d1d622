use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use privmed::audit::{run_configured, write_audit_csv};
use privmed::distributions::{named, NAMES};
use privmed::experiment::{run_experiment, Algorithm, DeclaredC, DistributionRef, ExperimentConfig, ProfileChoice};
use privmed::sample_size::{required_n, Guarantee, SampleSizeParams};
use privmed_core::{ConstantsProfile, LogBase};

/// Environment variable holding the worker count.
const WORKERS_ENV: &str = "PRIVMED_WORKERS";

#[derive(Parser)]
#[command(name = "privmed", version, about = "Private interior point and median experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the trials described by a config file and write one CSV row per trial.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// CSV destination (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Summary JSON destination (stderr when absent).
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Fill the wall_ms column. Makes the CSV run-dependent.
        #[arg(long)]
        timing: bool,
    },
    /// Run the audit named by the config's `algorithm` field.
    Audit {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample size at which a guarantee applies.
    RequiredN(RequiredNArgs),
    /// Print the named distributions with their oracle normalized variance.
    ListDistributions,
}

#[derive(Args, Default)]
struct Overrides {
    #[arg(long)]
    distribution: Option<String>,
    #[arg(long)]
    algorithm: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// A number or `oracle`.
    #[arg(long)]
    c_declared: Option<String>,
    #[arg(long)]
    c_floor: Option<f64>,
    /// `paper` or `relaxed`.
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    success_target: Option<f64>,
    #[arg(long)]
    experiment_id: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TheoremArg {
    Interior,
    Median,
    Moment,
}

#[derive(Clone, Copy, ValueEnum)]
enum LogBaseArg {
    Two,
    Natural,
}

#[derive(Args)]
struct RequiredNArgs {
    #[arg(long, value_enum)]
    theorem: TheoremArg,
    #[arg(long)]
    c: f64,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 1e-6)]
    delta: f64,
    #[arg(long, default_value_t = 0.05)]
    beta: f64,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value = "relaxed")]
    profile: String,
    #[arg(long)]
    k0: Option<f64>,
    #[arg(long)]
    k_moment: Option<f64>,
    #[arg(long, value_enum)]
    log_base: Option<LogBaseArg>,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Config(anyhow::Error),
    Threshold(String),
    Io(anyhow::Error),
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.into())
    }
}

fn load_config(path: &Path, o: Overrides) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Config)?;
    let mut cfg = ExperimentConfig::from_json(&text).map_err(|e| Failure::Config(e.into()))?;
    apply_overrides(&mut cfg, o).map_err(Failure::Config)?;
    Ok(cfg)
}

fn apply_overrides(cfg: &mut ExperimentConfig, o: Overrides) -> anyhow::Result<()> {
    if let Some(d) = o.distribution {
        cfg.distribution = DistributionRef::Named(d);
    }
    if let Some(a) = o.algorithm {
        cfg.algorithm = Algorithm::parse(&a)?;
    }
    if let Some(v) = o.n {
        cfg.n = v;
    }
    if let Some(v) = o.trials {
        cfg.trials = v;
    }
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    if let Some(v) = o.epsilon {
        cfg.epsilon = v;
    }
    if let Some(v) = o.delta {
        cfg.delta = v;
    }
    if let Some(v) = o.alpha {
        cfg.alpha = Some(v);
    }
    if let Some(v) = o.c_declared {
        cfg.c_declared = DeclaredC::parse(&v)?;
    }
    if let Some(v) = o.c_floor {
        cfg.c_floor = v;
    }
    if let Some(v) = o.profile {
        cfg.profile = ProfileChoice::Named(v);
    }
    if let Some(v) = o.beta {
        cfg.beta = v;
    }
    if let Some(v) = o.success_target {
        cfg.success_target = Some(v);
    }
    if let Some(v) = o.experiment_id {
        cfg.experiment_id = Some(v);
    }
    Ok(())
}

fn sink(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(config: &Path, o: Overrides, out: Option<&Path>, summary: Option<&Path>, timing: bool) -> Result<(), Failure> {
    let cfg = load_config(config, o)?;
    let result = run_experiment(&cfg, timing).map_err(|e| Failure::Config(e.into()))?;
    let mut w = sink(out)?;
    result.write_csv(&mut w).map_err(|e| Failure::Io(e.into()))?;
    w.flush()?;
    let json = serde_json::to_string_pretty(&result.summary).expect("summary serializes");
    match summary {
        Some(p) => std::fs::write(p, json + "\n")?,
        None => eprintln!("{json}"),
    }
    if result.summary.meets_target == Some(false) {
        let rate = result.summary.success_rate.map_or(0.0, |r| r.estimate);
        return Err(Failure::Threshold(format!(
            "success rate {rate} below target {}",
            result.summary.success_target.unwrap_or_default()
        )));
    }
    Ok(())
}

fn audit(config: &Path, o: Overrides, out: Option<&Path>) -> Result<(), Failure> {
    let cfg = load_config(config, o)?;
    if !cfg.algorithm.is_audit() {
        return Err(Failure::Config(anyhow::anyhow!("field `algorithm`: `{}` is not an audit", cfg.algorithm.name())));
    }
    let prepared = cfg.prepare().map_err(|e| Failure::Config(e.into()))?;
    let result = run_configured(&prepared);
    let mut w = sink(out)?;
    write_audit_csv(&prepared.experiment_id, &result.reports, &mut w).map_err(|e| Failure::Io(e.into()))?;
    w.flush()?;
    if !result.passed {
        return Err(Failure::Threshold(format!("audit {} failed", cfg.algorithm.name())));
    }
    Ok(())
}

fn required(args: RequiredNArgs) -> Result<(), Failure> {
    let mut profile = match args.profile.as_str() {
        "paper" => ConstantsProfile::paper(),
        "relaxed" => ConstantsProfile::relaxed(),
        other => return Err(Failure::Config(anyhow::anyhow!("unknown profile `{other}`"))),
    };
    if let Some(k) = args.k0 {
        profile.k0 = k;
    }
    if let Some(k) = args.k_moment {
        profile.k_moment = k;
    }
    if let Some(b) = args.log_base {
        profile.log_base = match b {
            LogBaseArg::Two => LogBase::Two,
            LogBaseArg::Natural => LogBase::Natural,
        };
    }
    let guarantee = match args.theorem {
        TheoremArg::Interior => Guarantee::Interior,
        TheoremArg::Median => Guarantee::Median,
        TheoremArg::Moment => Guarantee::Moment,
    };
    let params =
        SampleSizeParams { c: args.c, epsilon: args.epsilon, delta: args.delta, beta: args.beta, alpha: args.alpha };
    let r = required_n(guarantee, params, &profile).map_err(|e| Failure::Config(e.into()))?;
    println!("{}", serde_json::to_string(&r).expect("serializes"));
    Ok(())
}

fn list() -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    for name in NAMES {
        let spec = named(name).expect("listed name");
        let c = spec.normalized_variance().map(|r| r.c_value).unwrap_or(f64::NAN);
        writeln!(out, "{name}\tC={c}\t{}", serde_json::to_string(&spec).expect("serializes"))?;
    }
    Ok(())
}

fn init_workers() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v.parse().with_context(|| format!("{WORKERS_ENV}={v}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_workers() {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    let result = match cli.command {
        Command::Run { config, overrides, out, summary, timing } => {
            run(&config, overrides, out.as_deref(), summary.as_deref(), timing)
        }
        Command::Audit { config, overrides, out } => audit(&config, overrides, out.as_deref()),
        Command::RequiredN(args) => required(args),
        Command::ListDistributions => list(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Threshold(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
