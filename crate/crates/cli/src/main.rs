use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use multirep::eval::TransitivityMode;
use multirep::synth::Scenario;
use multirep_cli::commands::{batch, eval, fit, synth};
use multirep_cli::{MaskRule, RunConfig};

/// Reconstruct latent social networks from multiply reported ties.
#[derive(Parser)]
#[command(name = "multirep", version)]
struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Errors only.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one survey export (every tie type separately).
    Fit(RunArgs),
    /// Fit every `<village>.csv` in a directory.
    Batch(RunArgs),
    /// Draw a synthetic survey with known ground truth.
    Synth(SynthArgs),
    /// Score estimated networks against a ground truth.
    Eval(EvalArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with any of the settings below; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    /// Node roster (CSV with a `label` column).
    #[arg(long)]
    nodes: Option<PathBuf>,
    /// Reporter roster (CSV with a `label` column).
    #[arg(long)]
    reporters: Option<PathBuf>,
    #[arg(long, value_enum)]
    mask: Option<MaskRule>,
    /// Eligible `ego,alter,reporter` triples for `--mask custom`.
    #[arg(long)]
    mask_file: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Number of latent tie levels.
    #[arg(long)]
    k: Option<usize>,
    /// Refit with reporter-specific priors from a first pass.
    #[arg(long)]
    two_step: bool,
    /// Point-estimate threshold on ρ; default from the estimated mutuality.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Relative ELBO change that counts as converged.
    #[arg(long)]
    elbo_tol: Option<f64>,
    #[arg(long)]
    check_every: Option<usize>,
    #[arg(long)]
    init_offset: Option<f64>,
    #[arg(long)]
    refine_scale: Option<f64>,
    /// Multithreaded pair reductions inside each fit.
    #[arg(long)]
    parallel: bool,
    /// Gamma shape of reporter reliability (one value or one per reporter).
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    beta: Option<Vec<f64>>,
    /// Gamma shapes of the level rates, one value or one per level.
    #[arg(long, value_delimiter = ',')]
    lambda_shape: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    lambda_rate: Option<Vec<f64>>,
    #[arg(long)]
    eta_shape: Option<f64>,
    #[arg(long)]
    eta_rate: Option<f64>,
    /// Prior probabilities of the levels, e.g. `0.9,0.1`.
    #[arg(long, value_delimiter = ',')]
    tie_prior: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    transitivity: Option<Transitivity>,
    #[arg(long)]
    no_rho: bool,
    #[arg(long)]
    no_theta: bool,
    #[arg(long)]
    no_elbo: bool,
    #[arg(long)]
    no_summary: bool,
    #[arg(long)]
    no_baselines: bool,
    /// Parallel villages in `batch`; 0 uses every core.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Transitivity {
    Undirected,
    Directed,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    /// Over-reporters with a fixed high reliability.
    A,
    /// Under-reporters with a fixed low reliability.
    B,
    /// Gamma-distributed reliabilities.
    C,
}

#[derive(Args)]
struct SynthArgs {
    /// TOML file with synthetic-generator settings; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    scenario: Option<ScenarioArg>,
    #[arg(long)]
    n_nodes: Option<usize>,
    #[arg(long)]
    n_reporters: Option<usize>,
    #[arg(long)]
    avg_degree: Option<f64>,
    /// Share of unreliable reporters (scenarios a and b).
    #[arg(long)]
    theta_ratio: Option<f64>,
    /// Planted mutuality.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    lambda_diff: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reports_seed: Option<u64>,
    /// Rewire the planted network to this reciprocity.
    #[arg(long)]
    reciprocity: Option<f64>,
    #[arg(long)]
    tie_type: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Ground-truth `i,j,y` network.
    #[arg(long)]
    truth: PathBuf,
    /// `NAME=PATH` of an estimated `i,j,y` network (repeatable).
    #[arg(long = "estimate", value_parser = parse_pair)]
    estimates: Vec<(String, String)>,
    #[arg(long)]
    theta_true: Option<PathBuf>,
    /// `NAME=PATH` of an estimated `theta.csv` (repeatable).
    #[arg(long = "theta-estimate", value_parser = parse_pair)]
    theta_estimates: Vec<(String, String)>,
    /// `KEY=VALUE` column added to every row (repeatable).
    #[arg(long = "tag", value_parser = parse_pair)]
    tags: Vec<(String, String)>,
    /// Defaults to stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Append rows to an existing output file.
    #[arg(long)]
    append: bool,
}

fn parse_pair(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .ok_or_else(|| format!("expected KEY=VALUE, got `{s}`"))
}

fn run_config(a: RunArgs) -> Result<RunConfig> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    macro_rules! set {
        ($flag:expr => $field:expr) => {
            if let Some(v) = $flag {
                $field = v;
            }
        };
        ($flag:expr => some $field:expr) => {
            if let Some(v) = $flag {
                $field = Some(v);
            }
        };
    }
    set!(a.input => some cfg.input);
    set!(a.nodes => some cfg.nodes);
    set!(a.reporters => some cfg.reporters);
    set!(a.mask => cfg.mask);
    set!(a.mask_file => some cfg.mask_file);
    set!(a.output => some cfg.output);
    set!(a.k => cfg.fit.n_levels);
    set!(a.threshold => some cfg.fit.threshold);
    set!(a.seed => cfg.fit.seed);
    set!(a.max_iterations => cfg.fit.max_iterations);
    set!(a.elbo_tol => cfg.fit.elbo_rel_tol);
    set!(a.check_every => cfg.fit.elbo_check_every);
    set!(a.init_offset => cfg.fit.init_offset_scale);
    set!(a.refine_scale => cfg.fit.refine_scale);
    set!(a.alpha => cfg.hyper.alpha);
    set!(a.beta => cfg.hyper.beta);
    set!(a.lambda_shape => cfg.hyper.a);
    set!(a.lambda_rate => cfg.hyper.b);
    set!(a.eta_shape => cfg.hyper.c);
    set!(a.eta_rate => cfg.hyper.d);
    set!(a.tie_prior => cfg.hyper.prior);
    set!(a.jobs => cfg.jobs);
    if let Some(t) = a.transitivity {
        cfg.emit.transitivity = match t {
            Transitivity::Undirected => TransitivityMode::Undirected,
            Transitivity::Directed => TransitivityMode::Directed,
        };
    }
    cfg.two_step |= a.two_step;
    cfg.fit.parallel |= a.parallel;
    cfg.emit.rho &= !a.no_rho;
    cfg.emit.theta &= !a.no_theta;
    cfg.emit.elbo_trace &= !a.no_elbo;
    cfg.emit.summary &= !a.no_summary;
    cfg.emit.baselines &= !a.no_baselines;
    Ok(cfg)
}

fn synth_run(a: SynthArgs) -> Result<synth::SynthRun> {
    let scenario = a.scenario.map(|s| match s {
        ScenarioArg::A => Scenario::OverReporters,
        ScenarioArg::B => Scenario::UnderReporters,
        ScenarioArg::C => Scenario::GammaTheta,
    });
    let mut run = synth::SynthRun::load(a.config.as_deref(), scenario)?;
    let c = &mut run.config;
    if let Some(v) = a.n_nodes {
        c.n_nodes = v;
        if a.n_reporters.is_none() {
            c.n_reporters = v;
        }
    }
    if let Some(v) = a.n_reporters {
        c.n_reporters = v;
    }
    if let Some(v) = a.avg_degree {
        c.avg_degree = v;
    }
    if let Some(v) = a.theta_ratio {
        c.theta_ratio = v;
    }
    if let Some(v) = a.eta {
        c.eta_planted = v;
    }
    if let Some(v) = a.lambda_diff {
        c.lambda_diff = v;
    }
    if let Some(v) = a.seed {
        c.seed = v;
    }
    if a.reports_seed.is_some() {
        run.reports_seed = a.reports_seed;
    }
    if a.reciprocity.is_some() {
        run.reciprocity = a.reciprocity;
    }
    if let Some(t) = a.tie_type {
        run.tie_type = t;
    }
    if a.output.is_some() {
        run.output = a.output;
    }
    Ok(run)
}

fn paths(pairs: Vec<(String, String)>) -> Vec<(String, PathBuf)> {
    pairs
        .into_iter()
        .map(|(k, v)| (k, PathBuf::from(v)))
        .collect()
}

/// 0 on success, 2 when a fit hit the iteration cap.
fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Fit(a) => {
            let cfg = run_config(a)?;
            let outcome = fit::run(&cfg)?;
            for l in outcome.layers.iter().filter(|l| !l.converged) {
                log::warn!(
                    "layer `{}` did not converge in {} iterations",
                    l.tie_type,
                    l.iterations
                );
            }
            Ok(if outcome.converged() { 0 } else { 2 })
        }
        Command::Batch(a) => {
            let cfg = run_config(a)?;
            Ok(if batch::run(&cfg)? { 0 } else { 2 })
        }
        Command::Synth(a) => {
            synth::run(&synth_run(a)?).context("synthetic generation failed")?;
            Ok(0)
        }
        Command::Eval(a) => {
            eval::run(&eval::EvalArgs {
                truth: a.truth,
                estimates: paths(a.estimates),
                theta_true: a.theta_true,
                theta_estimates: paths(a.theta_estimates),
                tags: a.tags,
                output: a.output,
                append: a.append,
            })?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        (false, _) => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
