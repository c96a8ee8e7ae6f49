//! Trapezoidal scheme for GBM running averages and its error analysis.
//!
//! The average I_T = (1/T) int_0^T S_u du is discretized by
//!
//!   I^n_T = (1/T) sum_k S_{t_k} dt (1 + r dt/2 + sigma dW_k/2),
//!
//! with the price S evaluated exactly at the grid nodes (GBM has a closed
//! form, so only the average needs discretizing). The scheme has strong
//! error O(1/n), twice the Euler rate, which moves the cost-optimal coarse
//! exponent from 1/2 down to 1/3.
//!
//! The normalized averaging error n (I_T - I^n_T) converges to
//! chi_T = (sigma / (2 sqrt 3)) int_0^T S_u dB'_u with B' an independent
//! Brownian motion; `simulate_chi` samples that limit and `weak_error_limit`
//! estimates the induced first-order weak-error coefficient
//! E[d2 f(S_T, I_T) chi_T], which vanishes for payoffs of the average
//! because chi is conditionally centered.

use std::time::Instant;

use crate::brownian::{brownian_increments, coarsen_increments, PathIncrements, TimeGrid};
use crate::error::{Error, Result};
use crate::estimators::{EstimateResult, Scheme, SrParams};
use crate::models::GbmParams;
use crate::rng::RngStream;
use crate::sampling::{sample_stats, SampleStats};

/// Payoffs on (terminal price, average price), discounted by e^{-rT}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AsianPayoff {
    /// (I_T - K)^+
    FixedCall { strike: f64 },
    /// (K - I_T)^+
    FixedPut { strike: f64 },
    /// (S_T - I_T)^+
    FloatingCall,
}

impl AsianPayoff {
    #[inline]
    pub fn eval(&self, terminal: f64, average: f64) -> f64 {
        match *self {
            AsianPayoff::FixedCall { strike } => (average - strike).max(0.0),
            AsianPayoff::FixedPut { strike } => (strike - average).max(0.0),
            AsianPayoff::FloatingCall => (terminal - average).max(0.0),
        }
    }

    /// Almost-everywhere derivative in the average argument.
    #[inline]
    pub fn average_derivative(&self, terminal: f64, average: f64) -> f64 {
        match *self {
            AsianPayoff::FixedCall { strike } => {
                if average > strike {
                    1.0
                } else {
                    0.0
                }
            }
            AsianPayoff::FixedPut { strike } => {
                if average < strike {
                    -1.0
                } else {
                    0.0
                }
            }
            AsianPayoff::FloatingCall => {
                if terminal > average {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[inline]
fn gbm_at(p: &GbmParams, t: f64, w: f64) -> f64 {
    p.s0 * ((p.rate - 0.5 * p.sigma * p.sigma) * t + p.sigma * w).exp()
}

/// Trapezoidal average and exact terminal price along one increment path.
fn trapezoid_walk(p: &GbmParams, w: &PathIncrements) -> (f64, f64) {
    let grid = w.grid();
    let t = grid.horizon();
    let mut cum_w = 0.0;
    let mut s_node = p.s0;
    let mut avg = 0.0;
    for k in 0..grid.step_count() {
        let dt = grid.step(k);
        let dw = w.data()[k];
        avg += s_node * (dt / t) * (1.0 + 0.5 * p.rate * dt + 0.5 * p.sigma * dw);
        cum_w += dw;
        s_node = gbm_at(p, grid.nodes()[k + 1], cum_w);
    }
    (avg, s_node)
}

/// Trapezoidal approximation of the running average (1/T) int_0^T S_u du
/// along the given Brownian increments; node prices are exact.
pub fn trapezoidal_integral(p: &GbmParams, w: &PathIncrements) -> Result<f64> {
    p.validate()?;
    if w.dims() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: w.dims(),
        });
    }
    if w.grid().horizon() != p.horizon {
        return Err(Error::InvalidGrid(format!(
            "grid horizon {} does not match model horizon {}",
            w.grid().horizon(),
            p.horizon
        )));
    }
    Ok(trapezoid_walk(p, w).0)
}

/// Plain Monte Carlo price of an average-price payoff at n trapezoid steps.
pub fn mc_asian_estimate(
    p: &GbmParams,
    payoff: &AsianPayoff,
    n: usize,
    samples: usize,
    stream: &RngStream,
) -> Result<EstimateResult> {
    p.validate()?;
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let grid = TimeGrid::uniform(p.horizon, n)?;
    let discount = (-p.rate * p.horizon).exp();
    let started = Instant::now();
    let stats = sample_stats(samples, stream, |s| {
        let w = brownian_increments(s, &grid, 1);
        let (avg, terminal) = trapezoid_walk(p, &w);
        discount * payoff.eval(terminal, avg)
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

/// Two-level price of an average-price payoff.
///
/// Coarse term on an independent stream at m trapezoid steps; coupled
/// correction on the union grid of the two levels. Both legs of the
/// correction share the fine path's terminal price, so only the averages
/// differ inside the payoff.
pub fn sr_asian_estimate(
    p: &GbmParams,
    payoff: &AsianPayoff,
    params: &SrParams,
    stream: &RngStream,
) -> Result<EstimateResult> {
    p.validate()?;
    params.validate()?;
    if params.scheme != Scheme::Trapezoidal {
        return Err(Error::InvalidParameter(
            "average-price estimator requires trapezoidal sizing".into(),
        ));
    }
    let started = Instant::now();
    let fine_grid = TimeGrid::uniform(p.horizon, params.n)?;
    let coarse_grid = TimeGrid::uniform(p.horizon, params.m)?;
    let union = TimeGrid::union(&fine_grid, &coarse_grid)?;
    let discount = (-p.rate * p.horizon).exp();

    let coarse = sample_stats(params.coarse_samples, &stream.split(0), |s| {
        let w = brownian_increments(s, &coarse_grid, 1);
        let (avg, terminal) = trapezoid_walk(p, &w);
        discount * payoff.eval(terminal, avg)
    });
    let correction = sample_stats(params.correction_samples, &stream.split(1), |s| {
        let shared = brownian_increments(s, &union, 1);
        let fine = coarsen_increments(&shared, &fine_grid).expect("union embeds fine grid");
        let coarse_w = coarsen_increments(&shared, &coarse_grid).expect("union embeds coarse grid");
        let (avg_fine, terminal) = trapezoid_walk(p, &fine);
        let (avg_coarse, _) = trapezoid_walk(p, &coarse_w);
        discount * (payoff.eval(terminal, avg_fine) - payoff.eval(terminal, avg_coarse))
    });

    Ok(EstimateResult {
        value: coarse.mean() + correction.mean(),
        std_err: (coarse.std_err().powi(2) + correction.std_err().powi(2)).sqrt(),
        coarse_samples: params.coarse_samples,
        correction_samples: params.correction_samples,
        wall_seconds: started.elapsed().as_secs_f64(),
        seed: stream.master_seed(),
    })
}

/// One draw of the averaging-error limit chi_T together with the Brownian
/// endpoint of the price path it rode on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSample {
    pub chi_t: f64,
    pub w_t: f64,
}

struct ChiPath {
    chi_t: f64,
    w_t: f64,
    terminal: f64,
    average: f64,
}

/// Shared walk: price path from stream child 0, independent driver B' from
/// child 1, trapezoid average and chi accumulated on the same grid.
fn chi_walk(p: &GbmParams, grid: &TimeGrid, stream: &RngStream) -> ChiPath {
    let mut w_sampler = stream.split(0).sampler();
    let mut b_sampler = stream.split(1).sampler();
    let t = grid.horizon();
    let mut cum_w = 0.0;
    let mut s_node = p.s0;
    let mut avg = 0.0;
    let mut chi = 0.0;
    for k in 0..grid.step_count() {
        let dt = grid.step(k);
        let sd = dt.sqrt();
        let dw = sd * w_sampler.next_gaussian();
        let db = sd * b_sampler.next_gaussian();
        avg += s_node * (dt / t) * (1.0 + 0.5 * p.rate * dt + 0.5 * p.sigma * dw);
        chi += s_node * db;
        cum_w += dw;
        s_node = gbm_at(p, grid.nodes()[k + 1], cum_w);
    }
    ChiPath {
        chi_t: p.sigma / (2.0 * 3.0f64.sqrt()) * chi,
        w_t: cum_w,
        terminal: s_node,
        average: avg,
    }
}

/// Sample chi_T = (sigma / (2 sqrt 3)) int_0^T S_u dB'_u on `grid`, with B'
/// independent of the price path's Brownian motion.
pub fn simulate_chi(p: &GbmParams, grid: &TimeGrid, stream: &RngStream) -> Result<ChiSample> {
    p.validate()?;
    if grid.horizon() != p.horizon {
        return Err(Error::InvalidGrid(format!(
            "grid horizon {} does not match model horizon {}",
            grid.horizon(),
            p.horizon
        )));
    }
    let path = chi_walk(p, grid, stream);
    Ok(ChiSample {
        chi_t: path.chi_t,
        w_t: path.w_t,
    })
}

/// Monte Carlo estimate of the first-order weak-error coefficient
/// E[d2 f(S_T, I_T) chi_T], with I_T approximated on a reference grid of
/// `ref_steps` and chi co-simulated on the same grid.
pub fn weak_error_limit(
    p: &GbmParams,
    payoff: &AsianPayoff,
    ref_steps: usize,
    samples: usize,
    stream: &RngStream,
) -> Result<SampleStats> {
    p.validate()?;
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let grid = TimeGrid::uniform(p.horizon, ref_steps)?;
    Ok(sample_stats(samples, stream, |s| {
        let path = chi_walk(p, &grid, s);
        payoff.average_derivative(path.terminal, path.average) * path.chi_t
    }))
}

/// Coupled L2 error of the n-step average against its own refinement:
/// sqrt(E[(I^n_T - I^{refine n}_T)^2]). Decays like 1/n, so a log-log fit
/// against n recovers the scheme's strong order.
pub fn trapezoidal_l2_error(
    p: &GbmParams,
    n: usize,
    refine: usize,
    samples: usize,
    stream: &RngStream,
) -> Result<f64> {
    p.validate()?;
    if refine < 2 {
        return Err(Error::InvalidParameter(
            "reference grid must refine the working grid".into(),
        ));
    }
    let coarse_grid = TimeGrid::uniform(p.horizon, n)?;
    let fine_grid = TimeGrid::uniform(p.horizon, n * refine)?;
    let stats = sample_stats(samples, stream, |s| {
        let w_fine = brownian_increments(s, &fine_grid, 1);
        let w_coarse = coarsen_increments(&w_fine, &coarse_grid).expect("nested grids embed");
        let d = trapezoid_walk(p, &w_coarse).0 - trapezoid_walk(p, &w_fine).0;
        d * d
    });
    Ok(stats.mean().max(0.0).sqrt())
}

/// Coupled estimate of the n-step averaging bias
/// E[f(S_T, I^n_T) - f(S_T, I^{refine n}_T)], undiscounted.
///
/// The refined path serves as the reference; the n-step path is its exact
/// coarsening, so the difference isolates discretization error with O(1/n)
/// noise per sample.
pub fn trapezoidal_bias(
    p: &GbmParams,
    payoff: &AsianPayoff,
    n: usize,
    refine: usize,
    samples: usize,
    stream: &RngStream,
) -> Result<SampleStats> {
    p.validate()?;
    if refine < 2 {
        return Err(Error::InvalidParameter(
            "reference grid must refine the working grid".into(),
        ));
    }
    let coarse_grid = TimeGrid::uniform(p.horizon, n)?;
    let fine_grid = TimeGrid::uniform(p.horizon, n * refine)?;
    Ok(sample_stats(samples, stream, |s| {
        let w_fine = brownian_increments(s, &fine_grid, 1);
        let w_coarse = coarsen_increments(&w_fine, &coarse_grid).expect("nested grids embed");
        let (avg_ref, terminal) = trapezoid_walk(p, &w_fine);
        let (avg_n, _) = trapezoid_walk(p, &w_coarse);
        payoff.eval(terminal, avg_n) - payoff.eval(terminal, avg_ref)
    }))
}
