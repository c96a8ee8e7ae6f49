//! Command-line front end for the two-level Monte Carlo engine.
//!
//! Three subcommands: `price` estimates a single expectation and prints
//! key = value lines, `bench` sweeps resolutions over random parameter sets
//! and emits the speed/rms CSV, `diag` runs convergence and normality
//! checks and prints a readable report.
//!
//! Exit codes: 0 on success, 1 on argument or configuration errors, 2 on
//! oracle or I/O failures. When no seed is given anywhere, the SRMC_SEED
//! environment variable overrides the built-in default of 42.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use srmc::asian::{mc_asian_estimate, simulate_chi, sr_asian_estimate, AsianPayoff};
use srmc::bench::{
    emit_csv, run_benchmark, write_csv, BenchConfig, BenchMethod, BenchModel, GbmBenchRanges,
};
use srmc::diagnostics::{
    bias_rate_limit, clt_normality_check, rate_fit, EXCESS_KURTOSIS_LIMIT, SKEWNESS_LIMIT,
};
use srmc::estimators::{mc_estimate, mc_samples, optimal_params, sr_estimate};
use srmc::{
    oracle, CircleParams, DiffusionModel, Error, EstimateResult, GbmParams, RngStream, Scheme,
    TestFunction,
};

const DEFAULT_SEED: u64 = 42;
const SEED_ENV: &str = "SRMC_SEED";

/// Write to stdout, treating a closed pipe (e.g. `srmc ... | head`) as a
/// clean early exit rather than a panic; any other write failure is a
/// plain I/O error (exit code 2).
fn emit(text: &str) {
    use std::io::Write;
    if let Err(e) = std::io::stdout().lock().write_all(text.as_bytes()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: {e}");
        std::process::exit(2);
    }
}

macro_rules! outln {
    ($($arg:tt)*) => {
        emit(&format!("{}\n", format_args!($($arg)*)))
    };
}

#[derive(Parser)]
#[command(
    name = "srmc",
    version,
    about = "Two-level Monte Carlo pricing, benchmarks and diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate one expectation and print key = value lines
    Price(PriceArgs),
    /// Sweep resolutions over random parameter sets and emit CSV
    Bench(BenchArgs),
    /// Convergence-rate and estimator-shape diagnostics
    Diag(DiagArgs),
}

#[derive(Args)]
struct PriceArgs {
    /// Model family: circle, gbm or asian
    #[arg(long)]
    model: String,
    /// Estimation method: mc or sr
    #[arg(long, default_value = "sr")]
    method: String,
    /// Functional; defaults per model (circle: g, gbm: call, asian:
    /// fixed-call). circle accepts f|g, gbm call|put, asian
    /// fixed-call|fixed-put|floating-call
    #[arg(long)]
    payoff: Option<String>,
    /// Fine-level step count
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Weak-error order of the scheme, in [0.5, 1]; also the circle
    /// functional's exponent
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 100.0)]
    s0: f64,
    #[arg(long, default_value_t = 0.05)]
    rate: f64,
    #[arg(long, default_value_t = 0.2)]
    sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    #[arg(long, default_value_t = 100.0)]
    strike: f64,
    /// Circle starting angle
    #[arg(long, default_value_t = 0.0)]
    theta0: f64,
}

#[derive(Args)]
struct BenchArgs {
    /// Plain-text key = value config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// mc or sr
    #[arg(long)]
    method: Option<String>,
    /// circle, gbm or asian
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Comma-separated fine resolutions, strictly ascending
    #[arg(long = "n-list")]
    n_list: Option<String>,
    /// Random parameter sets per resolution
    #[arg(long = "param-sets")]
    param_sets: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV destination; stdout when absent
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct DiagArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Samples per convergence point
    #[arg(long, default_value_t = 40_000)]
    samples: usize,
    /// Repeated estimator runs for the shape check
    #[arg(long, default_value_t = 200)]
    repeats: usize,
    /// Circle functional exponent, in [0.5, 1]
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Optional CSV of the raw convergence points (check,x,value)
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version requests are not argument errors
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Price(args) => run_price(args),
        Command::Bench(args) => run_bench(args),
        Command::Diag(args) => run_diag(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

/// Argument-shaped problems exit 1; oracle and I/O failures exit 2.
fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Oracle(_) | Error::Io(_) => 2,
        _ => 1,
    }
}

/// Flag seed, else SRMC_SEED, else the built-in default.
fn resolve_seed(explicit: Option<u64>) -> Result<u64, Error> {
    if let Some(s) = explicit {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .parse::<u64>()
            .map_err(|_| Error::InvalidParameter(format!("{SEED_ENV} is not a u64: '{v}'"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn gbm_from(args: &PriceArgs) -> GbmParams {
    GbmParams {
        s0: args.s0,
        rate: args.rate,
        sigma: args.sigma,
        horizon: args.horizon,
    }
}

fn print_estimate(model: &str, method: &str, n: usize, m: usize, r: &EstimateResult) {
    // plain runs report their whole sample count as N_m, matching the CSV
    // column convention
    let (n_m, n_n) = if m == 0 {
        (r.correction_samples, 0)
    } else {
        (r.coarse_samples, r.correction_samples)
    };
    outln!("model = {model}");
    outln!("method = {method}");
    outln!("n = {n}");
    outln!("m = {m}");
    outln!("N_m = {n_m}");
    outln!("N_n = {n_n}");
    outln!("value = {}", r.value);
    outln!("std_err = {}", r.std_err);
    outln!("seed = {}", r.seed);
    outln!("wall_seconds = {}", r.wall_seconds);
}

fn run_price(args: PriceArgs) -> Result<(), Error> {
    let seed = resolve_seed(args.seed)?;
    let stream = RngStream::new(seed);
    let method = BenchMethod::parse(&args.method)?;
    let model = BenchModel::parse(&args.model)?;

    let (result, m) = match model {
        BenchModel::Circle => {
            let f = match args.payoff.as_deref().unwrap_or("g") {
                "f" => TestFunction::FAlpha { alpha: args.alpha },
                "g" => TestFunction::GAlpha { alpha: args.alpha },
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "circle payoff must be f or g, got '{other}'"
                    )))
                }
            };
            let diffusion = DiffusionModel::Circle(CircleParams {
                theta0: args.theta0,
                horizon: args.horizon,
            });
            match method {
                BenchMethod::Mc => (
                    mc_estimate(
                        &diffusion,
                        &f,
                        args.n,
                        mc_samples(args.alpha, args.n),
                        &stream,
                    )?,
                    0,
                ),
                BenchMethod::Sr => {
                    let params = optimal_params(args.alpha, args.n, Scheme::Euler)?;
                    (sr_estimate(&diffusion, &f, &params, &stream)?, params.m)
                }
            }
        }
        BenchModel::Gbm => {
            let f = match args.payoff.as_deref().unwrap_or("call") {
                "call" => TestFunction::EuroCall {
                    strike: args.strike,
                },
                "put" => TestFunction::EuroPut {
                    strike: args.strike,
                },
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "gbm payoff must be call or put, got '{other}'"
                    )))
                }
            };
            let p = gbm_from(&args);
            let diffusion = DiffusionModel::Gbm(p);
            let (mut r, m) = match method {
                BenchMethod::Mc => (
                    mc_estimate(
                        &diffusion,
                        &f,
                        args.n,
                        mc_samples(args.alpha, args.n),
                        &stream,
                    )?,
                    0,
                ),
                BenchMethod::Sr => {
                    let params = optimal_params(args.alpha, args.n, Scheme::Euler)?;
                    (sr_estimate(&diffusion, &f, &params, &stream)?, params.m)
                }
            };
            let discount = (-p.rate * p.horizon).exp();
            r.value *= discount;
            r.std_err *= discount;
            (r, m)
        }
        BenchModel::Asian => {
            let payoff = match args.payoff.as_deref().unwrap_or("fixed-call") {
                "fixed-call" => AsianPayoff::FixedCall {
                    strike: args.strike,
                },
                "fixed-put" => AsianPayoff::FixedPut {
                    strike: args.strike,
                },
                "floating-call" => AsianPayoff::FloatingCall,
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "asian payoff must be fixed-call, fixed-put or floating-call, got '{other}'"
                    )))
                }
            };
            let p = gbm_from(&args);
            match method {
                BenchMethod::Mc => (
                    mc_asian_estimate(&p, &payoff, args.n, mc_samples(1.0, args.n), &stream)?,
                    0,
                ),
                BenchMethod::Sr => {
                    let params = optimal_params(args.alpha, args.n, Scheme::Trapezoidal)?;
                    (sr_asian_estimate(&p, &payoff, &params, &stream)?, params.m)
                }
            }
        }
    };
    print_estimate(model.as_str(), method.as_str(), args.n, m, &result);
    Ok(())
}

/// Whether the config body itself sets `key`, ignoring comments.
fn config_sets_key(text: &str, key: &str) -> bool {
    text.lines()
        .filter_map(|raw| raw.split('#').next())
        .filter_map(|l| l.split_once('='))
        .any(|(k, _)| k.trim() == key)
}

fn run_bench(args: BenchArgs) -> Result<(), Error> {
    let file_text = match &args.config {
        Some(path) => Some(std::fs::read_to_string(path)?),
        None => None,
    };
    let mut config = match &file_text {
        Some(text) => BenchConfig::from_key_values(text)?,
        None => {
            let method = args
                .method
                .as_deref()
                .ok_or_else(|| Error::InvalidParameter("--method required without --config".into()))?;
            let model = args
                .model
                .as_deref()
                .ok_or_else(|| Error::InvalidParameter("--model required without --config".into()))?;
            BenchConfig {
                method: BenchMethod::parse(method)?,
                model: BenchModel::parse(model)?,
                alpha: 1.0,
                n_list: vec![100, 400, 1600],
                param_sets: 200,
                master_seed: DEFAULT_SEED,
                output: None,
                ranges: GbmBenchRanges::default(),
            }
        }
    };
    if let Some(m) = args.method.as_deref() {
        config.method = BenchMethod::parse(m)?;
    }
    if let Some(m) = args.model.as_deref() {
        config.model = BenchModel::parse(m)?;
    }
    if let Some(a) = args.alpha {
        config.alpha = a;
    }
    if let Some(list) = args.n_list.as_deref() {
        config.n_list = list
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("n-list entry: cannot parse '{tok}'")))
            })
            .collect::<Result<Vec<_>, _>>()?;
    }
    if let Some(p) = args.param_sets {
        config.param_sets = p;
    }
    let file_set_seed = file_text
        .as_deref()
        .is_some_and(|t| config_sets_key(t, "seed"));
    if args.seed.is_some() || !file_set_seed {
        config.master_seed = resolve_seed(args.seed)?;
    }
    if let Some(out) = &args.output {
        config.output = Some(out.display().to_string());
    }
    config.validate()?;

    let records = run_benchmark(&config)?;
    match &config.output {
        Some(path) => write_csv(&records, std::path::Path::new(path))?,
        None => emit(&emit_csv(&records)),
    }
    Ok(())
}

fn run_diag(args: DiagArgs) -> Result<(), Error> {
    let seed = resolve_seed(args.seed)?;
    if args.repeats < 4 {
        return Err(Error::InvalidParameter(
            "shape check needs at least 4 repeats".into(),
        ));
    }
    let root = RngStream::new(seed);
    let mut csv = String::from("check,x,value\n");

    // normalized circle scheme bias against its analytic limit
    let theta0 = 0.5;
    let limit = 2.0f64.powf(args.alpha) * oracle::abs_gaussian_moment(2.0 * args.alpha)?;
    let bias_ns = [16usize, 32, 64];
    let bias = bias_rate_limit(args.alpha, theta0, 1.0, &bias_ns, args.samples, &root.split(0))?;
    outln!(
        "circle bias limit (alpha = {}, theta0 = {theta0}, t = 1): expected {limit:.6}",
        args.alpha
    );
    for &(n, v) in &bias {
        outln!("  n = {n:>4}: {v:.4}  (ratio {:.3})", v / limit);
        csv.push_str(&format!("circle_bias_limit,{n},{v}\n"));
    }

    // strong order of the average-price scheme from coupled self-refinement
    let p = GbmParams {
        s0: 100.0,
        rate: 0.05,
        sigma: 0.2,
        horizon: 1.0,
    };
    let l2_ns = [8usize, 16, 32, 64];
    let mut points = Vec::new();
    for (i, &n) in l2_ns.iter().enumerate() {
        let l2 = srmc::asian::trapezoidal_l2_error(&p, n, 16, args.samples, &root.split(1).split(i as u32))?;
        points.push((n as f64, l2));
        csv.push_str(&format!("trapezoid_l2,{n},{l2}\n"));
    }
    let fit = rate_fit(&points, -1.0)?;
    outln!(
        "trapezoid strong error: fitted slope {:.3} (expected -1), r^2 {:.4}",
        fit.slope, fit.r_squared
    );
    for (x, y) in &points {
        outln!("  n = {:>4}: {y:.5}", *x as usize);
    }

    // distribution shape of the two-level estimator across repeats
    let model = DiffusionModel::Gbm(p);
    let f = TestFunction::EuroCall { strike: 100.0 };
    let params = optimal_params(1.0, 64, Scheme::Euler)?;
    let report = clt_normality_check(
        |s| {
            sr_estimate(&model, &f, &params, s)
                .expect("parameters validated above")
                .value
        },
        args.repeats,
        &root.split(2),
    )?;
    let verdict = match report.passes() {
        Some(true) => "gaussian: yes",
        Some(false) => "gaussian: no",
        None => "gaussian: undetermined (degenerate sample)",
    };
    outln!(
        "estimator shape over {} repeats: skewness {:.3} (limit {SKEWNESS_LIMIT}), excess kurtosis {:.3} (limit {EXCESS_KURTOSIS_LIMIT}) -> {verdict}",
        report.repeats, report.skewness, report.excess_kurtosis
    );
    csv.push_str(&format!("clt_skewness,{},{}\n", report.repeats, report.skewness));
    csv.push_str(&format!(
        "clt_excess_kurtosis,{},{}\n",
        report.repeats, report.excess_kurtosis
    ));

    // averaging-error limit sanity: one chi draw documents the scale
    let grid = srmc::TimeGrid::uniform(p.horizon, 64)?;
    let chi = simulate_chi(&p, &grid, &root.split(3))?;
    outln!(
        "chi sample at n = 64: chi_T = {:.4} (sd should be near {:.4})",
        chi.chi_t,
        oracle::chi_variance(&p).sqrt()
    );

    if let Some(path) = &args.output {
        std::fs::write(path, csv)?;
    }
    Ok(())
}
