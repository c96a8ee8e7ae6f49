//! Convergence-order fits and distributional checks for estimator output.
//!
//! Three kinds of evidence back the two-level construction: the scheme's
//! normalized bias settles at a finite limit (so the coarse level really
//! carries rate-alpha error), the bias at the optimal coarse resolution is
//! o(1/sqrt n) (so recentring on the fine level costs nothing), and repeated
//! estimates look Gaussian (so the reported standard errors mean what they
//! say). Each check here produces plain numbers a caller can threshold.

use crate::brownian::{brownian_increments, TimeGrid};
use crate::error::{Error, Result};
use crate::models::{euler_terminal, CircleParams, DiffusionModel, TestFunction};
use crate::rng::RngStream;
use crate::sampling::{indexed_values, sample_stats};

/// Log-log least-squares fit of y = c x^slope.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub expected_slope: f64,
    pub points: Vec<(f64, f64)>,
}

impl FitResult {
    /// Absolute deviation of the fitted slope from the expected one.
    pub fn slope_error(&self) -> f64 {
        (self.slope - self.expected_slope).abs()
    }
}

/// Fit a power law through positive (x, y) points by least squares in
/// log-log space. `expected_slope` is carried along for reporting.
pub fn rate_fit(points: &[(f64, f64)], expected_slope: f64) -> Result<FitResult> {
    if points.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "power-law fit needs at least two points, got {}",
            points.len()
        )));
    }
    let mut logs = Vec::with_capacity(points.len());
    for &(x, y) in points {
        if x <= 0.0 || y <= 0.0 || !x.is_finite() || !y.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "power-law fit needs positive finite points, got ({x}, {y})"
            )));
        }
        logs.push((x.ln(), y.ln()));
    }
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for &(x, y) in &logs {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(Error::InvalidParameter(
            "power-law fit needs at least two distinct x values".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res = syy - slope * sxy;
    // flat data fitted by a flat line: treat as a perfect fit
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(FitResult {
        slope,
        intercept,
        r_squared,
        expected_slope,
        points: points.to_vec(),
    })
}

/// Normalized scheme bias n^alpha E f_alpha(Z^n_t) for the circle diffusion,
/// one value per entry of `n_list`.
///
/// The exact solution stays on the unit circle, so f_alpha vanishes on it
/// and the coupled difference against the exact terminal point isolates the
/// scheme error. The sequence approaches (2 t^2)^alpha E |G|^{2 alpha} as n
/// grows.
pub fn bias_rate_limit(
    alpha: f64,
    theta0: f64,
    t: f64,
    n_list: &[usize],
    samples: usize,
    stream: &RngStream,
) -> Result<Vec<(usize, f64)>> {
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let model = DiffusionModel::Circle(CircleParams {
        theta0,
        horizon: t,
    });
    let f = TestFunction::FAlpha { alpha };
    let mut out = Vec::with_capacity(n_list.len());
    for (i, &n) in n_list.iter().enumerate() {
        let grid = TimeGrid::uniform(t, n)?;
        let stats = sample_stats(samples, &stream.split(i as u32), |s| {
            let w = brownian_increments(s, &grid, 1);
            let scheme = euler_terminal(&model, &w).expect("circle scheme is total");
            let exact = model
                .exact_terminal(&w.terminal())
                .expect("circle has a closed form");
            let fs = f.eval(&scheme).expect("dimension checked above");
            let fe = f.eval(&exact).expect("dimension checked above");
            fs - fe
        });
        out.push((n, (n as f64).powf(alpha) * stats.mean()));
    }
    Ok(out)
}

/// sqrt(n) times the coupled weak error E[f(X^n_T) - f(X_T)] for a model
/// with a closed-form terminal law, one value per entry of `n_list`.
///
/// Vanishing values justify recentring the two-level estimator on the fine
/// scheme: at the cost-optimal coarse resolution the leftover bias is
/// smaller than the statistical error.
pub fn sqrt_n_bias_check(
    model: &DiffusionModel,
    f: &TestFunction,
    n_list: &[usize],
    samples: usize,
    stream: &RngStream,
) -> Result<Vec<(usize, f64)>> {
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    if !model.has_exact_terminal() {
        return Err(Error::InvalidParameter(
            "bias check needs a model with a closed-form terminal law".into(),
        ));
    }
    let mut out = Vec::with_capacity(n_list.len());
    for (i, &n) in n_list.iter().enumerate() {
        let grid = TimeGrid::uniform(model.horizon(), n)?;
        let stats = sample_stats(samples, &stream.split(i as u32), |s| {
            let w = brownian_increments(s, &grid, model.driving_dim());
            let scheme = euler_terminal(model, &w).expect("scheme evaluation is total");
            let exact = model
                .exact_terminal(&w.terminal())
                .expect("exactness checked above");
            f.eval(&scheme).expect("dimension checked") - f.eval(&exact).expect("dimension checked")
        });
        out.push((n, (n as f64).sqrt() * stats.mean()));
    }
    Ok(out)
}

/// Largest absolute skewness a repeated-estimate sample may show and still
/// count as Gaussian.
pub const SKEWNESS_LIMIT: f64 = 0.25;
/// Largest absolute excess kurtosis a repeated-estimate sample may show and
/// still count as Gaussian.
pub const EXCESS_KURTOSIS_LIMIT: f64 = 0.5;

/// Shape summary of a sample of repeated estimator runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalityReport {
    pub repeats: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// True when the sample had no spread, leaving shape undefined.
    pub degenerate: bool,
}

impl NormalityReport {
    /// Compute moments of an arbitrary sample.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.len() < 4 {
            return Err(Error::InsufficientData(format!(
                "normality check needs at least four repeats, got {}",
                values.len()
            )));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let mut m2 = 0.0;
        let mut m3 = 0.0;
        let mut m4 = 0.0;
        for &v in values {
            let d = v - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        m2 /= n;
        m3 /= n;
        m4 /= n;
        let degenerate = m2 == 0.0;
        let (skewness, excess_kurtosis) = if degenerate {
            (0.0, 0.0)
        } else {
            (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
        };
        Ok(NormalityReport {
            repeats: values.len(),
            mean,
            std_dev: m2.sqrt(),
            skewness,
            excess_kurtosis,
            degenerate,
        })
    }

    /// Whether the sample shape is within the Gaussian thresholds, or None
    /// when the sample was degenerate.
    pub fn passes(&self) -> Option<bool> {
        if self.degenerate {
            return None;
        }
        Some(
            self.skewness.abs() < SKEWNESS_LIMIT
                && self.excess_kurtosis.abs() < EXCESS_KURTOSIS_LIMIT,
        )
    }
}

/// Re-run an estimator on `repeats` disjoint substreams and summarize the
/// shape of the resulting sample.
pub fn clt_normality_check<F>(
    estimator: F,
    repeats: usize,
    stream: &RngStream,
) -> Result<NormalityReport>
where
    F: Fn(&RngStream) -> f64 + Sync,
{
    let values = indexed_values(repeats, stream, |s| estimator(s));
    NormalityReport::from_values(&values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::GbmParams;
    use crate::oracle;
    use crate::sampling::sample_stats;

    #[test]
    fn rate_fit_recovers_exact_power_law() {
        let points: Vec<(f64, f64)> = [4.0, 8.0, 16.0, 64.0]
            .iter()
            .map(|&x: &f64| (x, 3.5 * x.powf(-1.5)))
            .collect();
        let fit = rate_fit(&points, -1.5).unwrap();
        assert!((fit.slope + 1.5).abs() < 1e-12, "slope {}", fit.slope);
        assert!((fit.intercept - 3.5f64.ln()).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(fit.slope_error(), (fit.slope - -1.5).abs());
    }

    #[test]
    fn rate_fit_rejects_bad_input() {
        assert!(rate_fit(&[(1.0, 2.0)], -1.0).is_err());
        assert!(rate_fit(&[(1.0, 2.0), (2.0, -1.0)], -1.0).is_err());
        assert!(rate_fit(&[(0.0, 2.0), (2.0, 1.0)], -1.0).is_err());
        assert!(rate_fit(&[(2.0, 2.0), (2.0, 1.0)], -1.0).is_err());
    }

    #[test]
    fn rate_fit_flat_data_is_perfect_fit() {
        let fit = rate_fit(&[(2.0, 5.0), (4.0, 5.0), (8.0, 5.0)], 0.0).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn circle_bias_limit_near_theory() {
        let t: f64 = 1.0;
        for (alpha, expect) in [(1.0, 2.0), (0.5, 2.0 / std::f64::consts::PI.sqrt())] {
            let limit = (2.0 * t * t).powf(alpha) * oracle::abs_gaussian_moment(2.0 * alpha).unwrap();
            assert!((limit - expect).abs() < 1e-12, "oracle limit {limit}");
            let vals =
                bias_rate_limit(alpha, 0.7, t, &[32], 40_000, &RngStream::new(31)).unwrap();
            let (_, v) = vals[0];
            assert!(
                (v - expect).abs() < 0.15 * expect,
                "alpha {alpha}: got {v}, expect {expect}"
            );
        }
    }

    #[test]
    fn sqrt_n_bias_decays_for_deterministic_gbm() {
        // sigma = 0 makes the scheme deterministic, so the check reduces to
        // the closed-form compounding gap and must shrink like 1/sqrt n
        let p = GbmParams {
            s0: 100.0,
            rate: 0.05,
            sigma: 0.0,
            horizon: 1.0,
        };
        let model = DiffusionModel::Gbm(p);
        let f = TestFunction::EuroCall { strike: 0.0 };
        let vals =
            sqrt_n_bias_check(&model, &f, &[4, 16, 64], 10, &RngStream::new(9)).unwrap();
        for &(n, v) in &vals {
            let expect = (n as f64).sqrt() * (oracle::euler_gbm_mean(&p, n) - p.s0 * p.rate.exp());
            assert!((v - expect).abs() < 1e-9, "n={n}: {v} vs {expect}");
        }
        assert!(vals[2].1.abs() < vals[0].1.abs());
    }

    #[test]
    fn sqrt_n_bias_requires_exact_law() {
        let model = DiffusionModel::Circle(CircleParams {
            theta0: 0.0,
            horizon: 1.0,
        });
        // the circle model does have a closed form; build one that does not
        let custom = crate::models::CustomModel {
            dim: 1,
            driving_dim: 1,
            x0: vec![1.0],
            horizon: 1.0,
            drift: std::sync::Arc::new(|_, out| out[0] = 0.0),
            diffusion: std::sync::Arc::new(|_, out| out[0] = 0.0),
        };
        assert!(model.has_exact_terminal());
        let f = TestFunction::FAlpha { alpha: 1.0 };
        assert!(sqrt_n_bias_check(
            &DiffusionModel::Custom(custom),
            &f,
            &[4, 8],
            10,
            &RngStream::new(1)
        )
        .is_err());
    }

    #[test]
    fn moments_match_bernoulli_hand_computation() {
        // p = 1/4 Bernoulli: skewness (1-2p)/sqrt(pq), excess (1-6pq)/(pq)
        let r = NormalityReport::from_values(&[0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((r.mean - 0.25).abs() < 1e-15);
        assert!((r.skewness - 2.0 / 3.0f64.sqrt()).abs() < 1e-12);
        assert!((r.excess_kurtosis + 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.passes(), Some(false));
    }

    #[test]
    fn degenerate_sample_reports_none() {
        let r = NormalityReport::from_values(&[2.0; 8]).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.passes(), None);
        assert!(NormalityReport::from_values(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn averaged_gaussians_pass_the_shape_check() {
        // a mean of gaussians is exactly gaussian, so only the moment
        // estimators' own sqrt(1/repeats) noise is in play
        let report = clt_normality_check(
            |s| {
                sample_stats(64, s, |inner| {
                    let mut g = inner.sampler();
                    g.next_gaussian()
                })
                .mean()
            },
            1500,
            &RngStream::new(52),
        )
        .unwrap();
        assert_eq!(report.passes(), Some(true), "report {report:?}");
    }
}
