//! Reference values: closed forms and quadrature.
//!
//! Everything here is independent of the path simulation machinery so it can
//! serve as ground truth in tests and benchmark RMS computations.

use crate::error::{Error, Result};
use crate::models::GbmParams;

/// Standard normal CDF, double precision (Hart-style rational
/// approximation; absolute error below 1e-14 everywhere).
pub fn norm_cdf(x: f64) -> f64 {
    let xabs = x.abs();
    let tail = if xabs > 37.0 {
        0.0
    } else {
        let e = (-xabs * xabs / 2.0).exp();
        if xabs < 7.071_067_811_865_48 {
            let mut num = 3.526_249_659_989_11e-2 * xabs + 0.700_383_064_443_688;
            num = num * xabs + 6.373_962_203_531_65;
            num = num * xabs + 33.912_866_078_383;
            num = num * xabs + 112.079_291_497_871;
            num = num * xabs + 221.213_596_169_931;
            num = num * xabs + 220.206_867_912_376;
            let mut den = 8.838_834_764_831_84e-2 * xabs + 1.755_667_163_182_64;
            den = den * xabs + 16.064_177_579_207;
            den = den * xabs + 86.780_732_202_946_1;
            den = den * xabs + 296.564_248_779_674;
            den = den * xabs + 637.333_633_378_831;
            den = den * xabs + 793.826_512_519_948;
            den = den * xabs + 440.413_735_824_752;
            e * num / den
        } else {
            let mut b = xabs + 0.65;
            b = xabs + 4.0 / b;
            b = xabs + 3.0 / b;
            b = xabs + 2.0 / b;
            b = xabs + 1.0 / b;
            e / (b * 2.506_628_274_631_000_5)
        }
    };
    if x > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Black-Scholes price of a European call on a lognormal terminal price.
pub fn black_scholes_call(s0: f64, strike: f64, rate: f64, sigma: f64, t: f64) -> Result<f64> {
    bs_validate(s0, strike, sigma, t)?;
    let df = (-rate * t).exp();
    let vol = sigma * t.sqrt();
    if strike == 0.0 {
        return Ok(s0);
    }
    if vol == 0.0 {
        return Ok((s0 - strike * df).max(0.0));
    }
    let d1 = ((s0 / strike).ln() + (rate + 0.5 * sigma * sigma) * t) / vol;
    let d2 = d1 - vol;
    Ok(s0 * norm_cdf(d1) - strike * df * norm_cdf(d2))
}

/// Black-Scholes price of a European put.
pub fn black_scholes_put(s0: f64, strike: f64, rate: f64, sigma: f64, t: f64) -> Result<f64> {
    bs_validate(s0, strike, sigma, t)?;
    let df = (-rate * t).exp();
    let vol = sigma * t.sqrt();
    if strike == 0.0 {
        return Ok(0.0);
    }
    if vol == 0.0 {
        return Ok((strike * df - s0).max(0.0));
    }
    let d1 = ((s0 / strike).ln() + (rate + 0.5 * sigma * sigma) * t) / vol;
    let d2 = d1 - vol;
    Ok(strike * df * norm_cdf(-d2) - s0 * norm_cdf(-d1))
}

fn bs_validate(s0: f64, strike: f64, sigma: f64, t: f64) -> Result<()> {
    if !(s0 > 0.0) || strike < 0.0 || sigma < 0.0 || !(t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bad Black-Scholes inputs: s0={s0} strike={strike} sigma={sigma} t={t}"
        )));
    }
    Ok(())
}

/// Gauss-Hermite nodes and weights for `n` points (weight e^{-x^2}).
///
/// Newton iteration on the orthonormal Hermite recurrence; standard initial
/// guesses per root. Exact for polynomials of degree < 2n.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 || n > 128 {
        return Err(Error::InvalidParameter(format!(
            "node count {n} outside supported range 1..=128"
        )));
    }
    const EPS: f64 = 3.0e-14;
    const PI_QUARTER_INV: f64 = 0.751_125_544_464_942_5; // pi^(-1/4)
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => {
                let c = (2 * n + 1) as f64;
                c.sqrt() - 1.85575 * c.powf(-1.0 / 6.0)
            }
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = PI_QUARTER_INV;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= EPS {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    Ok((x, w))
}

/// E f(G) for standard normal G, by Gauss-Hermite quadrature.
pub fn gaussian_expectation<F: Fn(f64) -> f64>(f: F, nodes: usize) -> Result<f64> {
    let (x, w) = gauss_hermite(nodes)?;
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut acc = 0.0;
    for (xi, wi) in x.iter().zip(&w) {
        acc += wi * f(sqrt2 * xi);
    }
    Ok(acc / std::f64::consts::PI.sqrt())
}

/// Expected terminal value of the circle diffusion test function with the
/// linear term, E[cos(theta0 + W_t)], evaluated by quadrature. The radial
/// part contributes exactly zero because the exact solution stays on the
/// unit circle.
pub fn circle_g_expectation(theta0: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("negative horizon {t}")));
    }
    let sqrt_t = t.sqrt();
    gaussian_expectation(|g| (theta0 + sqrt_t * g).cos(), 48)
}

/// Lanczos approximation of the gamma function (g = 7, 9 terms).
pub fn gamma(x: f64) -> f64 {
    // Published table digits kept verbatim; they round to the same f64s.
    #[allow(clippy::excessive_precision)]
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut a = COEF[0];
        let t = x + 7.5;
        for (i, c) in COEF.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}

/// E |G|^p for standard normal G and p >= 0: 2^{p/2} Gamma((p+1)/2) / sqrt(pi).
pub fn abs_gaussian_moment(p: f64) -> Result<f64> {
    if !(p >= 0.0) {
        return Err(Error::InvalidParameter(format!("negative exponent {p}")));
    }
    Ok(2f64.powf(p / 2.0) * gamma((p + 1.0) / 2.0) / std::f64::consts::PI.sqrt())
}

/// Exact variance of the averaging-error limit variable chi_T for GBM:
/// (sigma^2 / 12) s0^2 (e^{(2r + sigma^2) T} - 1) / (2r + sigma^2).
pub fn chi_variance(p: &GbmParams) -> f64 {
    let growth = 2.0 * p.rate + p.sigma * p.sigma;
    let t = p.horizon;
    let integral = if growth.abs() < 1e-12 {
        t
    } else {
        ((growth * t).exp() - 1.0) / growth
    };
    p.sigma * p.sigma / 12.0 * p.s0 * p.s0 * integral
}

/// Exact mean of the Euler-discretized GBM terminal value: s0 (1 + rT/n)^n.
pub fn euler_gbm_mean(p: &GbmParams, steps: usize) -> f64 {
    p.s0 * (1.0 + p.rate * p.horizon / steps as f64).powi(steps as i32)
}

/// Exact mean of the running average of GBM: s0 (e^{rT} - 1) / (rT).
pub fn gbm_average_mean(p: &GbmParams) -> f64 {
    let rt = p.rate * p.horizon;
    if rt.abs() < 1e-12 {
        p.s0
    } else {
        p.s0 * (rt.exp() - 1.0) / rt
    }
}
