//! Speed-versus-accuracy benchmark harness.
//!
//! A benchmark run fixes a model family, an estimation method (plain or
//! two-level) and a list of fine resolutions n. For each n it draws
//! `param_sets` random model instances, prices each one, and reports the
//! root-mean-square error against a per-instance reference together with
//! wall time. Because parameter draws and reference values depend only on
//! the master seed, runs that differ only in `method` face identical
//! problem sets, so their rms and throughput columns are directly
//! comparable.
//!
//! References: circle expectations come from Gauss-Hermite quadrature,
//! lognormal calls from the closed form, and average-price calls from a
//! high-resolution two-level run at four times the largest requested n
//! (that reference carries its own small noise, which inflates both
//! methods' rms equally).
//!
//! Config files are plain `key = value` lines with `#` comments:
//!
//! ```text
//! method = sr            # mc | sr
//! model = circle         # circle | gbm | asian
//! alpha = 0.5
//! n_list = 100, 1000, 10000
//! param_sets = 200
//! seed = 42
//! s0_min = 80            # gbm / asian parameter ranges
//! s0_max = 120
//! sigma_min = 0.1
//! sigma_max = 0.4
//! rate_min = 0.0
//! rate_max = 0.1
//! horizon_min = 0.5
//! horizon_max = 2.0
//! strike = 100
//! ```

use std::time::Instant;

use crate::asian::{mc_asian_estimate, sr_asian_estimate, AsianPayoff};
use crate::error::{Error, Result};
use crate::estimators::{mc_estimate, mc_samples, optimal_params, sr_estimate, Scheme, SrParams};
use crate::models::{CircleParams, DiffusionModel, GbmParams, TestFunction};
use crate::oracle;
use crate::rng::RngStream;

/// Estimation method under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchMethod {
    /// Plain Monte Carlo on the fine grid, n^{2 alpha} samples.
    Mc,
    /// Two-level estimator at cost-optimal sizing.
    Sr,
}

impl BenchMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            BenchMethod::Mc => "mc",
            BenchMethod::Sr => "sr",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "mc" => Ok(BenchMethod::Mc),
            "sr" => Ok(BenchMethod::Sr),
            other => Err(Error::Parse(format!(
                "unknown method '{other}' (expected mc or sr)"
            ))),
        }
    }
}

/// Model family being priced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchModel {
    /// Rotation diffusion on the unit circle, horizon 1, functional
    /// g_alpha; reference by quadrature.
    Circle,
    /// Lognormal terminal call; reference by closed form.
    Gbm,
    /// Average-price call under the trapezoidal scheme; reference by a
    /// high-resolution two-level run.
    Asian,
}

impl BenchModel {
    pub fn as_str(&self) -> &'static str {
        match self {
            BenchModel::Circle => "circle",
            BenchModel::Gbm => "gbm",
            BenchModel::Asian => "asian",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "circle" => Ok(BenchModel::Circle),
            "gbm" => Ok(BenchModel::Gbm),
            "asian" => Ok(BenchModel::Asian),
            other => Err(Error::Parse(format!(
                "unknown model '{other}' (expected circle, gbm or asian)"
            ))),
        }
    }
}

/// Sampling ranges for lognormal model instances; ignored by the circle
/// model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbmBenchRanges {
    pub s0: (f64, f64),
    pub sigma: (f64, f64),
    pub rate: (f64, f64),
    pub horizon: (f64, f64),
    pub strike: f64,
}

impl Default for GbmBenchRanges {
    fn default() -> Self {
        GbmBenchRanges {
            s0: (80.0, 120.0),
            sigma: (0.1, 0.4),
            rate: (0.0, 0.1),
            horizon: (0.5, 2.0),
            strike: 100.0,
        }
    }
}

impl GbmBenchRanges {
    fn validate(&self) -> Result<()> {
        let pairs = [
            ("s0", self.s0),
            ("sigma", self.sigma),
            ("rate", self.rate),
            ("horizon", self.horizon),
        ];
        for (name, (lo, hi)) in pairs {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::InvalidParameter(format!(
                    "range {name} = [{lo}, {hi}] is not an ordered finite interval"
                )));
            }
        }
        if self.s0.0 <= 0.0 {
            return Err(Error::InvalidParameter("s0 range must be positive".into()));
        }
        if self.sigma.0 < 0.0 || self.rate.0 < 0.0 {
            return Err(Error::InvalidParameter(
                "sigma and rate ranges must be nonnegative".into(),
            ));
        }
        if self.horizon.0 <= 0.0 {
            return Err(Error::InvalidParameter(
                "horizon range must be positive".into(),
            ));
        }
        if !(self.strike.is_finite() && self.strike >= 0.0) {
            return Err(Error::InvalidParameter(
                "strike must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Full description of one benchmark run.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub method: BenchMethod,
    pub model: BenchModel,
    pub alpha: f64,
    /// Fine resolutions to sweep, strictly ascending.
    pub n_list: Vec<usize>,
    pub param_sets: usize,
    pub master_seed: u64,
    /// CSV destination; None means the caller decides (typically stdout).
    pub output: Option<String>,
    pub ranges: GbmBenchRanges,
}

impl BenchConfig {
    /// Parse a `key = value` config body. `method` and `model` are
    /// required; everything else has defaults.
    pub fn from_key_values(text: &str) -> Result<Self> {
        let mut method = None;
        let mut model = None;
        let mut alpha = 1.0;
        let mut n_list = vec![100, 400, 1600];
        let mut param_sets = 200;
        let mut master_seed = 42u64;
        let mut output = None;
        let mut ranges = GbmBenchRanges::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("line {}: expected key = value", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "method" => method = Some(BenchMethod::parse(value)?),
                "model" => model = Some(BenchModel::parse(value)?),
                "alpha" => alpha = parse_num::<f64>(key, value)?,
                "n_list" => {
                    n_list = value
                        .split(',')
                        .map(|tok| parse_num::<usize>("n_list entry", tok.trim()))
                        .collect::<Result<Vec<_>>>()?;
                }
                "param_sets" => param_sets = parse_num::<usize>(key, value)?,
                "seed" => master_seed = parse_num::<u64>(key, value)?,
                "output" => output = Some(value.to_string()),
                "s0_min" => ranges.s0.0 = parse_num::<f64>(key, value)?,
                "s0_max" => ranges.s0.1 = parse_num::<f64>(key, value)?,
                "sigma_min" => ranges.sigma.0 = parse_num::<f64>(key, value)?,
                "sigma_max" => ranges.sigma.1 = parse_num::<f64>(key, value)?,
                "rate_min" => ranges.rate.0 = parse_num::<f64>(key, value)?,
                "rate_max" => ranges.rate.1 = parse_num::<f64>(key, value)?,
                "horizon_min" => ranges.horizon.0 = parse_num::<f64>(key, value)?,
                "horizon_max" => ranges.horizon.1 = parse_num::<f64>(key, value)?,
                "strike" => ranges.strike = parse_num::<f64>(key, value)?,
                other => {
                    return Err(Error::Parse(format!(
                        "line {}: unknown key '{other}'",
                        lineno + 1
                    )))
                }
            }
        }
        let config = BenchConfig {
            method: method.ok_or_else(|| Error::Parse("missing required key 'method'".into()))?,
            model: model.ok_or_else(|| Error::Parse("missing required key 'model'".into()))?,
            alpha,
            n_list,
            param_sets,
            master_seed,
            output,
            ranges,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.5..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in [0.5, 1], got {}",
                self.alpha
            )));
        }
        if self.n_list.is_empty() {
            return Err(Error::InvalidParameter("n_list must not be empty".into()));
        }
        if let Some(&bad) = self.n_list.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidParameter(format!(
                "every n must be at least 2, got {bad}"
            )));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "n_list must be strictly ascending".into(),
            ));
        }
        if self.param_sets == 0 {
            return Err(Error::InvalidParameter(
                "param_sets must be positive".into(),
            ));
        }
        self.ranges.validate()
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| Error::Parse(format!("{key}: cannot parse '{value}'")))
}

/// One CSV row: a (method, n) cell aggregated over all parameter sets.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub method: BenchMethod,
    pub n: usize,
    /// Coarse resolution; 0 for plain Monte Carlo rows.
    pub m: usize,
    /// Coarse-level sample count; the full sample count for plain rows.
    pub coarse_samples: usize,
    /// Correction sample count; 0 for plain rows.
    pub correction_samples: usize,
    pub rms: f64,
    pub wall_seconds: f64,
    pub values_per_second: f64,
}

/// Root-mean-square difference between estimates and their references.
pub fn rms_error(truths: &[f64], estimates: &[f64]) -> Result<f64> {
    if truths.is_empty() {
        return Err(Error::InsufficientData(
            "rms needs at least one value".into(),
        ));
    }
    if truths.len() != estimates.len() {
        return Err(Error::DimensionMismatch {
            expected: truths.len(),
            got: estimates.len(),
        });
    }
    let ss: f64 = truths
        .iter()
        .zip(estimates)
        .map(|(t, e)| (e - t) * (e - t))
        .sum();
    Ok((ss / truths.len() as f64).sqrt())
}

/// One randomly drawn model instance.
enum DrawnParams {
    Circle { theta0: f64 },
    Gbm(GbmParams),
}

fn draw_params(config: &BenchConfig, stream: &RngStream) -> DrawnParams {
    let mut s = stream.sampler();
    match config.model {
        BenchModel::Circle => DrawnParams::Circle {
            theta0: std::f64::consts::TAU * s.next_uniform(),
        },
        // fixed draw order: s0, sigma, rate, horizon
        BenchModel::Gbm | BenchModel::Asian => {
            let u = |s: &mut crate::rng::Sampler, (lo, hi): (f64, f64)| lo + (hi - lo) * s.next_uniform();
            DrawnParams::Gbm(GbmParams {
                s0: u(&mut s, config.ranges.s0),
                sigma: u(&mut s, config.ranges.sigma),
                rate: u(&mut s, config.ranges.rate),
                horizon: u(&mut s, config.ranges.horizon),
            })
        }
    }
}

fn reference_value(
    config: &BenchConfig,
    set: &DrawnParams,
    ref_steps: usize,
    stream: &RngStream,
) -> Result<f64> {
    match (config.model, set) {
        (BenchModel::Circle, DrawnParams::Circle { theta0 }) => {
            oracle::circle_g_expectation(*theta0, 1.0)
        }
        (BenchModel::Gbm, DrawnParams::Gbm(p)) => {
            oracle::black_scholes_call(p.s0, config.ranges.strike, p.rate, p.sigma, p.horizon)
        }
        (BenchModel::Asian, DrawnParams::Gbm(p)) => {
            let payoff = AsianPayoff::FixedCall {
                strike: config.ranges.strike,
            };
            let params = optimal_params(1.0, ref_steps, Scheme::Trapezoidal)?;
            Ok(sr_asian_estimate(p, &payoff, &params, stream)?.value)
        }
        _ => unreachable!("draw_params matches the configured model"),
    }
}

fn estimate_value(
    config: &BenchConfig,
    set: &DrawnParams,
    n: usize,
    sizing: &Option<SrParams>,
    stream: &RngStream,
) -> Result<f64> {
    match (config.model, set) {
        (BenchModel::Circle, DrawnParams::Circle { theta0 }) => {
            let model = DiffusionModel::Circle(CircleParams {
                theta0: *theta0,
                horizon: 1.0,
            });
            let f = TestFunction::GAlpha {
                alpha: config.alpha,
            };
            Ok(match (config.method, sizing) {
                (BenchMethod::Mc, _) => {
                    mc_estimate(&model, &f, n, mc_samples(config.alpha, n), stream)?.value
                }
                (BenchMethod::Sr, Some(params)) => sr_estimate(&model, &f, params, stream)?.value,
                (BenchMethod::Sr, None) => unreachable!("sizing precomputed for sr"),
            })
        }
        (BenchModel::Gbm, DrawnParams::Gbm(p)) => {
            let model = DiffusionModel::Gbm(*p);
            let f = TestFunction::EuroCall {
                strike: config.ranges.strike,
            };
            let raw = match (config.method, sizing) {
                (BenchMethod::Mc, _) => {
                    mc_estimate(&model, &f, n, mc_samples(config.alpha, n), stream)?.value
                }
                (BenchMethod::Sr, Some(params)) => sr_estimate(&model, &f, params, stream)?.value,
                (BenchMethod::Sr, None) => unreachable!("sizing precomputed for sr"),
            };
            Ok((-p.rate * p.horizon).exp() * raw)
        }
        (BenchModel::Asian, DrawnParams::Gbm(p)) => {
            let payoff = AsianPayoff::FixedCall {
                strike: config.ranges.strike,
            };
            Ok(match (config.method, sizing) {
                (BenchMethod::Mc, _) => {
                    // matched-accuracy plain sizing for an O(1/n) scheme
                    mc_asian_estimate(p, &payoff, n, mc_samples(1.0, n), stream)?.value
                }
                (BenchMethod::Sr, Some(params)) => {
                    sr_asian_estimate(p, &payoff, params, stream)?.value
                }
                (BenchMethod::Sr, None) => unreachable!("sizing precomputed for sr"),
            })
        }
        _ => unreachable!("draw_params matches the configured model"),
    }
}

/// Run the configured benchmark, one record per entry of `n_list`.
///
/// Stream layout: child 0 feeds parameter draws, child 1 the timed
/// estimates, child 2 the reference values, each further split by position
/// in `n_list` and then by parameter set. None of it depends on `method`,
/// so mc and sr runs sharing a master seed price the same instances
/// against the same references.
pub fn run_benchmark(config: &BenchConfig) -> Result<Vec<BenchRecord>> {
    config.validate()?;
    let root = RngStream::new(config.master_seed);
    let param_root = root.split(0);
    let est_root = root.split(1);
    let truth_root = root.split(2);
    let max_n = *config.n_list.iter().max().expect("n_list validated nonempty");
    let ref_steps = 4 * max_n;

    let scheme = match config.model {
        BenchModel::Circle | BenchModel::Gbm => Scheme::Euler,
        BenchModel::Asian => Scheme::Trapezoidal,
    };

    let mut records = Vec::with_capacity(config.n_list.len());
    for (ni, &n) in config.n_list.iter().enumerate() {
        let param_stream = param_root.split(ni as u32);
        let truth_stream = truth_root.split(ni as u32);
        let est_stream = est_root.split(ni as u32);

        let sets: Vec<DrawnParams> = (0..config.param_sets)
            .map(|j| draw_params(config, &param_stream.split(j as u32)))
            .collect();
        let truths: Vec<f64> = sets
            .iter()
            .enumerate()
            .map(|(j, set)| reference_value(config, set, ref_steps, &truth_stream.split(j as u32)))
            .collect::<Result<_>>()?;

        let sizing = match config.method {
            BenchMethod::Sr => Some(optimal_params(config.alpha, n, scheme)?),
            BenchMethod::Mc => None,
        };

        let started = Instant::now();
        let estimates: Vec<f64> = sets
            .iter()
            .enumerate()
            .map(|(j, set)| estimate_value(config, set, n, &sizing, &est_stream.split(j as u32)))
            .collect::<Result<_>>()?;
        let wall_seconds = started.elapsed().as_secs_f64();

        let rms = rms_error(&truths, &estimates)?;
        let (m, coarse_samples, correction_samples) = match &sizing {
            Some(p) => (p.m, p.coarse_samples, p.correction_samples),
            None => {
                let samples = match config.model {
                    BenchModel::Asian => mc_samples(1.0, n),
                    _ => mc_samples(config.alpha, n),
                };
                (0, samples, 0)
            }
        };
        records.push(BenchRecord {
            method: config.method,
            n,
            m,
            coarse_samples,
            correction_samples,
            rms,
            wall_seconds,
            values_per_second: config.param_sets as f64 / wall_seconds.max(f64::MIN_POSITIVE),
        });
    }
    Ok(records)
}

/// Fixed column layout of benchmark output.
pub const CSV_HEADER: &str = "method,n,m,N_m,N_n,rms,wall_seconds,values_per_second";

/// Serialize records to CSV. Floats use the shortest representation that
/// parses back to the same bits, so emit/parse round-trips exactly.
pub fn emit_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.method.as_str(),
            r.n,
            r.m,
            r.coarse_samples,
            r.correction_samples,
            r.rms,
            r.wall_seconds,
            r.values_per_second
        ));
    }
    out
}

/// Write records as CSV to a file; an empty record list still writes the
/// header line.
pub fn write_csv(records: &[BenchRecord], path: &std::path::Path) -> Result<()> {
    std::fs::write(path, emit_csv(records))?;
    Ok(())
}

/// Parse CSV produced by `emit_csv`.
pub fn parse_csv(text: &str) -> Result<Vec<BenchRecord>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        other => {
            return Err(Error::Parse(format!(
                "expected header '{CSV_HEADER}', got {other:?}"
            )))
        }
    }
    let mut records = Vec::new();
    for line in lines {
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 8 {
            return Err(Error::Parse(format!(
                "expected 8 fields, got {}: '{line}'",
                fields.len()
            )));
        }
        records.push(BenchRecord {
            method: BenchMethod::parse(fields[0])?,
            n: parse_num("n", fields[1])?,
            m: parse_num("m", fields[2])?,
            coarse_samples: parse_num("N_m", fields[3])?,
            correction_samples: parse_num("N_n", fields[4])?,
            rms: parse_num("rms", fields[5])?,
            wall_seconds: parse_num("wall_seconds", fields[6])?,
            values_per_second: parse_num("values_per_second", fields[7])?,
        });
    }
    Ok(records)
}
