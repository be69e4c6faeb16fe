//! Command-line front end. Exit codes: 0 for a positive answer (pass,
//! feasible, equivalent, clean audit), 1 for a negative one, 2 for usage,
//! input and other errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::bounds::{Arithmetic, Evaluator, LogMode};
use crate::error::{Error, Result};
use crate::io;
use crate::market::{IndexKind, IndexValue, Portfolio};
use crate::reductions::{
    adapt_index, reduce_outperform, reduce_srlv, reduce_tracking, size_report, transform_price_relative, Constants,
    PrTransform,
};
use crate::scalar::Scalar;
use crate::setcover::{enumerate_instances_where, random_instance, SetCoverInstance};
use crate::solver::{solve_exact, solve_exact_log, solve_greedy, SolveOptions, SolveReport, DEFAULT_BUDGET};
use crate::verify::{self, Family, FamilyParams, SweepReport};

#[derive(Parser, Debug)]
#[command(name = "index-proxy", version, about = "Index proxies: evaluation, exact search, hard-instance generation")]
struct Cli {
    /// TOML file with `budget`, `tolerance` and `seed`; flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print index values and ratios.
    Eval(EvalArgs),
    /// Check a portfolio against a problem.
    Check(CheckArgs),
    /// Search for a portfolio meeting a problem.
    Solve(SolveArgs),
    /// Build a hard instance from a set cover instance.
    Reduce(ReduceArgs),
    /// Transform an instance to another index.
    Transform {
        #[command(subcommand)]
        which: TransformCommand,
    },
    /// Certify reductions against the set cover oracle.
    Verify(VerifyArgs),
    /// Audit the structure of a generated instance.
    Audit(AuditArgs),
}

#[derive(Subcommand, Debug)]
enum TransformCommand {
    /// Price-relative (geometric) index, written as base-2 exponents.
    Pr(PrArgs),
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    market: PathBuf,
    #[arg(long, default_value_t = 1)]
    kind: u8,
    /// Stock indices, comma separated; whole market when absent.
    #[arg(long, value_delimiter = ',')]
    subset: Option<Vec<usize>>,
    #[arg(long)]
    t: Option<usize>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long)]
    market: PathBuf,
    #[arg(long)]
    problem: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    portfolio: Vec<usize>,
    #[arg(long)]
    float: bool,
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long, requires = "problem", conflicts_with_all = ["log_market", "transform"])]
    market: Option<PathBuf>,
    #[arg(long)]
    problem: Option<PathBuf>,
    /// Log-domain market from `transform pr`.
    #[arg(long, requires_all = ["transform", "k"])]
    log_market: Option<PathBuf>,
    #[arg(long)]
    transform: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    greedy: bool,
    #[arg(long)]
    budget: Option<u128>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    float: bool,
}

#[derive(Args, Debug)]
struct ReduceArgs {
    /// Set cover instance JSON.
    #[arg(long)]
    setcover: PathBuf,
    /// track, srlv or outperform.
    #[arg(long)]
    family: String,
    #[arg(long)]
    eps: Option<Scalar>,
    #[arg(long)]
    alpha: Option<Scalar>,
    #[arg(long)]
    beta: Option<Scalar>,
    /// Read the instance through index kind 2 or 3 instead of 1.
    #[arg(long)]
    kind: Option<u8>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PrArgs {
    /// Directory written by `reduce`.
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    family: String,
    /// Single set cover instance JSON.
    #[arg(long, conflicts_with_all = ["exhaustive", "random"])]
    setcover: Option<PathBuf>,
    /// Every instance within limits, e.g. `n=3` or `n=4,s=3,k=2`.
    #[arg(long, conflicts_with = "random")]
    exhaustive: Option<String>,
    /// Number of random instances.
    #[arg(long)]
    random: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eps: Option<Scalar>,
    #[arg(long)]
    eps2: Option<Scalar>,
    #[arg(long)]
    alpha: Option<Scalar>,
    #[arg(long)]
    beta: Option<Scalar>,
    /// Directory for counterexample files.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AuditArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Also print the bit size of the price matrix.
    #[arg(long)]
    size: bool,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct Config {
    budget: Option<u64>,
    tolerance: Option<f64>,
    seed: Option<u64>,
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    let Some(path) = path else { return Ok(Config::default()) };
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::BadParams(format!("config {}: {e}", path.display())))
}

enum Outcome {
    Positive,
    Negative,
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    match dispatch(cli, out, err) {
        Ok(Outcome::Positive) => 0,
        Ok(Outcome::Negative) => 1,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<Outcome> {
    let config = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Eval(a) => eval(a, out),
        Command::Check(a) => check(a, &config, out),
        Command::Solve(a) => solve(a, &config, out, err),
        Command::Reduce(a) => reduce(a, out),
        Command::Transform { which: TransformCommand::Pr(a) } => transform(a, out),
        Command::Verify(a) => verify_cmd(a, &config, out, err),
        Command::Audit(a) => audit(a, out),
    }
}

fn kind(number: u8) -> Result<IndexKind> {
    IndexKind::try_from(number).map_err(|_| Error::UnsupportedKind(number))
}

fn show(value: &IndexValue) -> String {
    match value {
        IndexValue::Exact(v) => v.to_string(),
        IndexValue::Log2(e) => format!("2^({e})"),
        IndexValue::Float(x) => format!("{x}"),
    }
}

fn eval(a: EvalArgs, out: &mut dyn Write) -> Result<Outcome> {
    let market = io::parse_market_csv(&a.market)?;
    let kind = kind(a.kind)?;
    let subset = a.subset.unwrap_or_else(|| market.all());
    let times: Vec<usize> = match a.t {
        Some(t) => vec![t],
        None => (0..=market.f()).collect(),
    };
    writeln!(out, "t,value,ratio")?;
    for t in times {
        let value = market.index_value(&subset, kind, t)?;
        let ratio = market.index_ratio(&subset, kind, t)?;
        writeln!(out, "{t},{},{}", show(&value), show(&ratio))?;
    }
    Ok(Outcome::Positive)
}

fn check(a: CheckArgs, config: &Config, out: &mut dyn Write) -> Result<Outcome> {
    let market = io::parse_market_csv(&a.market)?;
    let problem = io::read_problem(&a.problem)?;
    let portfolio = Portfolio::new(a.portfolio, problem.k.min(market.m()), market.m())?;
    let tolerance = a.tolerance.or(config.tolerance).unwrap_or(crate::bounds::VOLATILITY_TOLERANCE);
    let arithmetic = if a.float { Arithmetic::Float } else { Arithmetic::Exact };
    let verdict = Evaluator::new(&market, &problem)?
        .with_tolerance(tolerance)
        .with_arithmetic(arithmetic)
        .check(portfolio.members())?;
    writeln!(out, "{verdict}")?;
    Ok(if verdict.is_pass() { Outcome::Positive } else { Outcome::Negative })
}

fn solve(a: SolveArgs, config: &Config, out: &mut dyn Write, err: &mut dyn Write) -> Result<Outcome> {
    let options = SolveOptions {
        budget: a.budget.or(config.budget.map(u128::from)).unwrap_or(DEFAULT_BUDGET),
        tolerance: a.tolerance.or(config.tolerance).unwrap_or(crate::bounds::VOLATILITY_TOLERANCE),
        arithmetic: if a.float { Arithmetic::Float } else { Arithmetic::Exact },
    };
    let report: SolveReport = match (&a.market, &a.problem, &a.log_market, &a.transform, a.k) {
        (Some(m), Some(p), None, None, _) => {
            let market = io::parse_market_csv(m)?;
            let problem = io::read_problem(p)?;
            if a.greedy {
                solve_greedy(&market, &problem, &options)?
            } else {
                solve_exact(&market, &problem, &options)?
            }
        }
        (None, None, Some(lm), Some(tr), Some(k)) => {
            if a.greedy {
                return Err(Error::BadParams("greedy search runs on linear markets only".into()));
            }
            let market = io::parse_log_market(&std::fs::read_to_string(lm)?)?;
            let transform: PrTransform = io::read_json(tr)?;
            solve_exact_log(&market, &transform.log_problem(k), &options)?
        }
        _ => return Err(Error::BadParams("give --market and --problem, or --log-market, --transform and --k".into())),
    };
    write!(out, "{}", io::to_json(&report)?)?;
    writeln!(err, "elapsed: {:.3?}", report.elapsed)?;
    Ok(if report.is_feasible() { Outcome::Positive } else { Outcome::Negative })
}

fn reduce(a: ReduceArgs, out: &mut dyn Write) -> Result<Outcome> {
    let sc = io::read_setcover(&a.setcover)?;
    let defaults = FamilyParams::default();
    let instance = match a.family.as_str() {
        "track" => reduce_tracking(&sc, a.eps.as_ref().unwrap_or(&defaults.eps))?,
        "outperform" => reduce_outperform(&sc, a.eps.as_ref().unwrap_or(&defaults.eps2))?,
        "srlv" => reduce_srlv(
            &sc,
            a.alpha.as_ref().unwrap_or(&defaults.alpha),
            a.beta.as_ref().unwrap_or(&defaults.beta),
        )?,
        other => return Err(Error::BadParams(format!("unknown family `{other}` (track, srlv, outperform)"))),
    };
    let instance = match a.kind {
        None | Some(1) => instance,
        Some(k) => adapt_index(&instance, kind(k)?)?,
    };
    io::write_instance(&instance, &a.out)?;
    let size = size_report(&instance.market);
    writeln!(
        out,
        "wrote {} instance: {} rows, {} columns, largest value {} bits",
        instance.constants.family_name(),
        size.rows,
        size.columns,
        size.max_value_bits
    )?;
    Ok(Outcome::Positive)
}

fn transform(a: PrArgs, out: &mut dyn Write) -> Result<Outcome> {
    let instance = io::read_instance(&a.instance)?;
    let mode = match instance.constants {
        Constants::Tracking(_) => LogMode::TrackLower,
        Constants::Outperform(_) => LogMode::Outperform,
        Constants::Srlv(_) => {
            return Err(Error::WrongProvenance("no price-relative transform for srlv instances".into()))
        }
    };
    let (market, tr) = transform_price_relative(&instance, mode)?;
    io::write_transform(&market, &tr, &a.out)?;
    writeln!(out, "wrote log market: lcm {} ({} bits), lambda {}", tr.lcm, tr.lcm.numer().bits(), tr.lambda.lambda)?;
    Ok(Outcome::Positive)
}

/// `n=3,s=3,k=2` style limits.
fn parse_limits(text: &str) -> Result<(usize, usize, usize)> {
    let (mut n, mut s, mut k) = (None, 3, 2);
    for part in text.split(',').filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::BadParams(format!("expected key=value, got `{part}`")))?;
        let value: usize = value
            .trim()
            .parse()
            .map_err(|_| Error::BadParams(format!("`{value}` is not a count")))?;
        match key.trim() {
            "n" => n = Some(value),
            "s" => s = value,
            "k" => k = value,
            other => return Err(Error::BadParams(format!("unknown limit `{other}` (n, s, k)"))),
        }
    }
    let n = n.ok_or_else(|| Error::BadParams("exhaustive limits need n".into()))?;
    if n > verify::CERTIFY_MAX_N || s > verify::CERTIFY_MAX_UNIVERSE || k > verify::CERTIFY_MAX_K {
        return Err(Error::TooLarge(format!(
            "limits n <= {}, s <= {}, k <= {}",
            verify::CERTIFY_MAX_N,
            verify::CERTIFY_MAX_UNIVERSE,
            verify::CERTIFY_MAX_K
        )));
    }
    Ok((n, s, k))
}

fn verify_cmd(a: VerifyArgs, config: &Config, out: &mut dyn Write, err: &mut dyn Write) -> Result<Outcome> {
    let family: Family = a.family.parse()?;
    let defaults = FamilyParams::default();
    let params = FamilyParams {
        eps: a.eps.unwrap_or(defaults.eps),
        eps2: a.eps2.unwrap_or(defaults.eps2),
        alpha: a.alpha.unwrap_or(defaults.alpha),
        beta: a.beta.unwrap_or(defaults.beta),
    };
    let min_k = if family == Family::Srlv { 2 } else { 1 };
    let instances: Vec<SetCoverInstance> = if let Some(path) = &a.setcover {
        vec![io::read_setcover(path)?]
    } else if let Some(limits) = &a.exhaustive {
        let (n, s, k) = parse_limits(limits)?;
        enumerate_instances_where(n, s, |n| min_k..=k.min(n))
    } else if let Some(count) = a.random {
        let seed = a.seed.or(config.seed).unwrap_or(0);
        (0..count)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
                let n = rand::Rng::gen_range(&mut rng, min_k.max(1)..=verify::CERTIFY_MAX_N);
                let universe = rand::Rng::gen_range(&mut rng, 1..=verify::CERTIFY_MAX_UNIVERSE);
                let k = rand::Rng::gen_range(&mut rng, min_k..=verify::CERTIFY_MAX_K.min(n));
                random_instance(&mut rng, universe, n, k, 0.5)
            })
            .collect::<Result<_>>()?
    } else {
        return Err(Error::BadParams("give --setcover, --exhaustive or --random".into()));
    };

    let start = Instant::now();
    let report: SweepReport = verify::sweep(&instances, family, &params)?;
    writeln!(out, "family {family}: {}/{} equivalent", report.equivalent, report.instances)?;
    for c in &report.counterexamples {
        writeln!(out, "counterexample #{}: {:?}", c.index, c.certificate)?;
        if let Some(dir) = &a.out {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(format!("counterexample-{}.json", c.index)), io::to_json(c)?)?;
        }
    }
    writeln!(err, "elapsed: {:.3?}", start.elapsed())?;
    Ok(if report.all_equivalent() { Outcome::Positive } else { Outcome::Negative })
}

fn audit(a: AuditArgs, out: &mut dyn Write) -> Result<Outcome> {
    let instance = io::read_instance(&a.instance)?;
    let report = verify::audit(&instance)?;
    write!(out, "{}", io::to_json(&report)?)?;
    if a.size {
        write!(out, "{}", io::to_json(&size_report(&instance.market))?)?;
    }
    Ok(if report.overall { Outcome::Positive } else { Outcome::Negative })
}
