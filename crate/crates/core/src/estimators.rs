//! Plain Monte Carlo and the two-level statistical Romberg estimator.
//!
//! Both estimate E f(X^n_T) for an Euler discretization with n steps. Plain
//! Monte Carlo simulates N independent paths at the fine resolution. The
//! two-level estimator splits the work:
//!
//! * an independent stream of coarse paths at m = n^beta steps, and
//! * a coupled correction term, f(fine) - f(coarse), where both paths share
//!   one Brownian path drawn on the union of the two grids.
//!
//! The correction has variance O(1/m), so far fewer fine paths are needed.
//! With the cost-optimal exponents the total work for a root-mean-square
//! error of 1/n^alpha drops from O(n^{2 alpha + 1}) to O(n^{2 alpha + 1/2}).

use std::time::Instant;

use crate::brownian::{brownian_increments, coarsen_increments, TimeGrid};
use crate::error::{Error, Result};
use crate::models::{euler_terminal, DiffusionModel, TestFunction};
use crate::rng::RngStream;
use crate::sampling::{sample_stats, SampleStats};

/// Discretization family a parameter set applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Euler-Maruyama terminal-value scheme; weak error O(1/n^alpha).
    Euler,
    /// Trapezoidal running-average scheme; weak error o(1/n).
    Trapezoidal,
}

/// Sizing of a two-level run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrParams {
    /// Weak-error exponent of the fine scheme (alpha in [1/2, 1]).
    pub alpha: f64,
    /// Coarse level exponent: m = n^beta.
    pub beta: f64,
    /// Fine step count.
    pub n: usize,
    /// Coarse step count.
    pub m: usize,
    /// Samples of the independent coarse term.
    pub coarse_samples: usize,
    /// Samples of the coupled correction term.
    pub correction_samples: usize,
    pub scheme: Scheme,
}

impl SrParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.5..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in [0.5, 1], got {}",
                self.alpha
            )));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in (0, 1), got {}",
                self.beta
            )));
        }
        if self.m < 2 || self.m > self.n {
            return Err(Error::InvalidParameter(format!(
                "need 2 <= m <= n, got m={} n={}",
                self.m, self.n
            )));
        }
        if self.coarse_samples == 0 || self.correction_samples == 0 {
            return Err(Error::InvalidParameter(
                "sample counts must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of an estimation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateResult {
    pub value: f64,
    pub std_err: f64,
    pub coarse_samples: usize,
    pub correction_samples: usize,
    pub wall_seconds: f64,
    /// Master seed of the stream the run consumed.
    pub seed: u64,
}

/// Round half up, then clamp below by `floor`.
fn sized(x: f64, floor: usize) -> usize {
    (x.round() as usize).max(floor)
}

/// Cost-optimal two-level sizing for a fine level n.
///
/// Euler: beta = 1/2, coarse samples n^{2 alpha}, correction samples
/// n^{2 alpha - 1/2}. Trapezoidal: beta = 1/3, coarse samples n^2,
/// correction samples n^{4/3} (alpha plays no role there; the scheme's
/// second-order accuracy fixes the rates).
pub fn optimal_params(alpha: f64, n: usize, scheme: Scheme) -> Result<SrParams> {
    if !(0.5..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in [0.5, 1], got {alpha}"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "fine level must have at least 2 steps, got {n}"
        )));
    }
    let nf = n as f64;
    let params = match scheme {
        Scheme::Euler => {
            let beta = 0.5;
            SrParams {
                alpha,
                beta,
                n,
                m: sized(nf.powf(beta), 2),
                coarse_samples: sized(nf.powf(2.0 * alpha), 1),
                correction_samples: sized(nf.powf(2.0 * alpha - 0.5), 1),
                scheme,
            }
        }
        Scheme::Trapezoidal => {
            let beta = 1.0 / 3.0;
            SrParams {
                alpha,
                beta,
                n,
                m: sized(nf.powf(beta), 2),
                coarse_samples: sized(nf.powf(2.0), 1),
                correction_samples: sized(nf.powf(4.0 / 3.0), 1),
                scheme,
            }
        }
    };
    params.validate()?;
    Ok(params)
}

/// Sample count that matches plain Monte Carlo variance to the scheme bias:
/// N = n^{2 alpha}, rounded half up.
pub fn mc_samples(alpha: f64, n: usize) -> usize {
    sized((n as f64).powf(2.0 * alpha), 1)
}

/// Plain Monte Carlo estimate of E f(X^n_T) over independent Euler paths.
pub fn mc_estimate(
    model: &DiffusionModel,
    f: &TestFunction,
    n: usize,
    samples: usize,
    stream: &RngStream,
) -> Result<EstimateResult> {
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let grid = TimeGrid::uniform(model.horizon(), n)?;
    let dims = model.driving_dim();
    // evaluate once up front so per-sample closures can unwrap
    let probe = brownian_increments(&stream.split(0).split(0), &grid, dims);
    f.eval(&euler_terminal(model, &probe)?)?;

    let started = Instant::now();
    let stats = sample_stats(samples, stream, |s| {
        let w = brownian_increments(s, &grid, dims);
        let x = euler_terminal(model, &w).expect("dimensions checked above");
        f.eval(&x).expect("dimensions checked above")
    });
    Ok(EstimateResult {
        value: stats.mean(),
        std_err: stats.std_err(),
        coarse_samples: 0,
        correction_samples: samples,
        wall_seconds: started.elapsed().as_secs_f64(),
        seed: stream.master_seed(),
    })
}

/// Statistics of the coupled correction f(X^n_T) - f(X^m_T) on a shared
/// Brownian path drawn on the union grid of the two levels.
fn correction_stats(
    model: &DiffusionModel,
    f: &TestFunction,
    n: usize,
    m: usize,
    samples: usize,
    stream: &RngStream,
) -> Result<SampleStats> {
    let fine_grid = TimeGrid::uniform(model.horizon(), n)?;
    let coarse_grid = TimeGrid::uniform(model.horizon(), m)?;
    let union = TimeGrid::union(&fine_grid, &coarse_grid)?;
    let dims = model.driving_dim();
    let probe = brownian_increments(&stream.split(0).split(0), &union, dims);
    f.eval(&euler_terminal(model, &probe)?)?;

    Ok(sample_stats(samples, stream, |s| {
        let shared = brownian_increments(s, &union, dims);
        let fine = coarsen_increments(&shared, &fine_grid).expect("union embeds fine grid");
        let coarse = coarsen_increments(&shared, &coarse_grid).expect("union embeds coarse grid");
        let xf = euler_terminal(model, &fine).expect("dimensions checked above");
        let xc = euler_terminal(model, &coarse).expect("dimensions checked above");
        f.eval(&xf).expect("dimensions checked above") - f.eval(&xc).expect("dimensions checked above")
    }))
}

/// Two-level estimate of E f(X^n_T).
///
/// Term one averages f over `coarse_samples` independent coarse paths; term
/// two averages the coupled correction over `correction_samples` paths. The
/// two terms use disjoint child streams (`split(0)` and `split(1)`), so the
/// estimator is unbiased for the fine-scheme expectation.
pub fn sr_estimate(
    model: &DiffusionModel,
    f: &TestFunction,
    params: &SrParams,
    stream: &RngStream,
) -> Result<EstimateResult> {
    params.validate()?;
    let started = Instant::now();

    let coarse_grid = TimeGrid::uniform(model.horizon(), params.m)?;
    let dims = model.driving_dim();
    let probe = brownian_increments(&stream.split(0).split(0).split(0), &coarse_grid, dims);
    f.eval(&euler_terminal(model, &probe)?)?;

    let coarse = sample_stats(params.coarse_samples, &stream.split(0), |s| {
        let w = brownian_increments(s, &coarse_grid, dims);
        let x = euler_terminal(model, &w).expect("dimensions checked above");
        f.eval(&x).expect("dimensions checked above")
    });
    let correction = correction_stats(
        model,
        f,
        params.n,
        params.m,
        params.correction_samples,
        &stream.split(1),
    )?;

    let se = (coarse.std_err().powi(2) + correction.std_err().powi(2)).sqrt();
    Ok(EstimateResult {
        value: coarse.mean() + correction.mean(),
        std_err: se,
        coarse_samples: params.coarse_samples,
        correction_samples: params.correction_samples,
        wall_seconds: started.elapsed().as_secs_f64(),
        seed: stream.master_seed(),
    })
}

/// Sample variance of the coupled correction f(X^n_T) - f(X^m_T).
///
/// This is the variance that makes the two-level trade-off work: it decays
/// like 1/m as the coarse level is refined.
pub fn control_variate_variance(
    model: &DiffusionModel,
    f: &TestFunction,
    n: usize,
    m: usize,
    samples: usize,
    stream: &RngStream,
) -> Result<f64> {
    if samples < 2 {
        return Err(Error::InvalidParameter(
            "variance needs at least two samples".into(),
        ));
    }
    Ok(correction_stats(model, f, n, m, samples, stream)?.variance())
}

/// Work of plain Monte Carlo at error level 1/n^alpha: n^{2 alpha + 1}.
pub fn mc_complexity(alpha: f64, n: usize) -> f64 {
    (n as f64).powf(2.0 * alpha + 1.0)
}

/// Work of a sized two-level run: m N_m + (n + m) N_n, in scheme steps.
pub fn sr_complexity(params: &SrParams) -> f64 {
    let (n, m) = (params.n as f64, params.m as f64);
    m * params.coarse_samples as f64 + (n + m) * params.correction_samples as f64
}

/// Two-level work at coarse exponent beta, before rounding: the continuous
/// cost curve n^{beta + g1} + (n + n^beta) n^{g2} with the scheme's sample
/// exponents g1 (coarse) and g2 (correction). Minimized at beta = 1/2 for
/// Euler and beta = 1/3 for the trapezoidal scheme.
pub fn sr_complexity_at(alpha: f64, n: usize, beta: f64, scheme: Scheme) -> f64 {
    let nf = n as f64;
    let (g1, g2) = match scheme {
        Scheme::Euler => (2.0 * alpha, 2.0 * alpha - beta),
        Scheme::Trapezoidal => (2.0, 2.0 - 2.0 * beta),
    };
    nf.powf(beta) * nf.powf(g1) + (nf + nf.powf(beta)) * nf.powf(g2)
}
