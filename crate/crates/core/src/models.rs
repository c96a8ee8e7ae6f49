//! Test diffusions, the Euler scheme, and terminal test functions.
//!
//! Two models ship with exact terminal laws so discretization error can be
//! measured against the truth on the same Brownian path:
//!
//! * geometric Brownian motion dS = S (r dt + sigma dW), solved by
//!   S_t = s0 exp((r - sigma^2/2) t + sigma W_t);
//! * the unit-circle diffusion dX = -X/2 dt - Y dW, dY = -Y/2 dt + X dW,
//!   solved by (cos(theta0 + W_t), sin(theta0 + W_t)).
//!
//! Arbitrary drift/diffusion pairs are supported through `CustomModel`.

use std::sync::Arc;

use crate::brownian::PathIncrements;
use crate::error::{Error, Result};

/// Geometric Brownian motion parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbmParams {
    pub s0: f64,
    pub rate: f64,
    pub sigma: f64,
    pub horizon: f64,
}

impl GbmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.s0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "initial price must be positive, got {}",
                self.s0
            )));
        }
        if self.sigma < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "volatility must be non-negative, got {}",
                self.sigma
            )));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        Ok(())
    }
}

/// Starting angle and horizon for the unit-circle diffusion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleParams {
    pub theta0: f64,
    pub horizon: f64,
}

/// Callback writing a state-dependent vector field into an output slice.
pub type FieldFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Model given by explicit drift and diffusion callbacks.
///
/// `drift` writes b(x) into its output slice (`dim` entries); `diffusion`
/// writes the row-major `dim x driving_dim` matrix sigma(x).
#[derive(Clone)]
pub struct CustomModel {
    pub dim: usize,
    pub driving_dim: usize,
    pub x0: Vec<f64>,
    pub horizon: f64,
    pub drift: FieldFn,
    pub diffusion: FieldFn,
}

impl std::fmt::Debug for CustomModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CustomModel")
            .field("dim", &self.dim)
            .field("driving_dim", &self.driving_dim)
            .field("x0", &self.x0)
            .field("horizon", &self.horizon)
            .finish_non_exhaustive()
    }
}

/// A diffusion the engine can discretize.
#[derive(Debug, Clone)]
pub enum DiffusionModel {
    Gbm(GbmParams),
    Circle(CircleParams),
    Custom(CustomModel),
}

impl DiffusionModel {
    pub fn dim(&self) -> usize {
        match self {
            DiffusionModel::Gbm(_) => 1,
            DiffusionModel::Circle(_) => 2,
            DiffusionModel::Custom(c) => c.dim,
        }
    }

    /// Dimension of the driving Brownian motion.
    pub fn driving_dim(&self) -> usize {
        match self {
            DiffusionModel::Gbm(_) | DiffusionModel::Circle(_) => 1,
            DiffusionModel::Custom(c) => c.driving_dim,
        }
    }

    pub fn x0(&self) -> Vec<f64> {
        match self {
            DiffusionModel::Gbm(p) => vec![p.s0],
            DiffusionModel::Circle(p) => vec![p.theta0.cos(), p.theta0.sin()],
            DiffusionModel::Custom(c) => c.x0.clone(),
        }
    }

    pub fn horizon(&self) -> f64 {
        match self {
            DiffusionModel::Gbm(p) => p.horizon,
            DiffusionModel::Circle(p) => p.horizon,
            DiffusionModel::Custom(c) => c.horizon,
        }
    }

    pub fn has_exact_terminal(&self) -> bool {
        !matches!(self, DiffusionModel::Custom(_))
    }

    /// Exact terminal state on the same Brownian path, given W_T.
    pub fn exact_terminal(&self, w_terminal: &[f64]) -> Result<Vec<f64>> {
        if w_terminal.len() != self.driving_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.driving_dim(),
                got: w_terminal.len(),
            });
        }
        match self {
            DiffusionModel::Gbm(p) => Ok(vec![gbm_exact_terminal(p, w_terminal[0])]),
            DiffusionModel::Circle(p) => Ok(circle_exact(p, w_terminal[0]).to_vec()),
            DiffusionModel::Custom(_) => Err(Error::InvalidParameter(
                "custom models carry no exact solution".into(),
            )),
        }
    }
}

/// Closed-form GBM terminal value for a given Brownian endpoint.
pub fn gbm_exact_terminal(p: &GbmParams, w_terminal: f64) -> f64 {
    let t = p.horizon;
    p.s0 * ((p.rate - 0.5 * p.sigma * p.sigma) * t + p.sigma * w_terminal).exp()
}

/// Closed-form circle-diffusion state for a given Brownian endpoint.
pub fn circle_exact(p: &CircleParams, w_terminal: f64) -> [f64; 2] {
    let phase = p.theta0 + w_terminal;
    [phase.cos(), phase.sin()]
}

/// One Euler path: x_{k+1} = x_k + b(x_k) dt_k + sigma(x_k) dW_k, returning
/// the terminal state. Increments must have `driving_dim` components.
pub fn euler_terminal(model: &DiffusionModel, w: &PathIncrements) -> Result<Vec<f64>> {
    if w.dims() != model.driving_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.driving_dim(),
            got: w.dims(),
        });
    }
    match model {
        DiffusionModel::Gbm(p) => {
            let (rate, sigma) = (p.rate, p.sigma);
            let mut x = p.s0;
            let grid = w.grid();
            for k in 0..grid.step_count() {
                x += rate * x * grid.step(k) + sigma * x * w.data()[k];
            }
            Ok(vec![x])
        }
        DiffusionModel::Circle(p) => {
            let (mut x, mut y) = (p.theta0.cos(), p.theta0.sin());
            let grid = w.grid();
            for k in 0..grid.step_count() {
                let half_dt = 0.5 * grid.step(k);
                let dw = w.data()[k];
                let (px, py) = (x, y);
                x = px - px * half_dt - py * dw;
                y = py - py * half_dt + px * dw;
            }
            Ok(vec![x, y])
        }
        DiffusionModel::Custom(c) => {
            let mut x = c.x0.clone();
            let mut next = vec![0.0; c.dim];
            let mut b = vec![0.0; c.dim];
            let mut sig = vec![0.0; c.dim * c.driving_dim];
            let grid = w.grid();
            for k in 0..grid.step_count() {
                let dt = grid.step(k);
                let dw = w.increment(k);
                (c.drift)(&x, &mut b);
                (c.diffusion)(&x, &mut sig);
                for i in 0..c.dim {
                    let mut v = x[i] + b[i] * dt;
                    for (j, dwj) in dw.iter().enumerate() {
                        v += sig[i * c.driving_dim + j] * dwj;
                    }
                    next[i] = v;
                }
                std::mem::swap(&mut x, &mut next);
            }
            Ok(x)
        }
    }
}

/// Scalar functions applied to terminal states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFunction {
    /// | |z|^2 - 1 |^(2 alpha) on a 2-d state; vanishes on the unit circle.
    FAlpha { alpha: f64 },
    /// FAlpha plus the first coordinate; has a nondegenerate expectation on
    /// the circle so benchmark oracles stay informative.
    GAlpha { alpha: f64 },
    /// (s - K)^+ on a 1-d state.
    EuroCall { strike: f64 },
    /// (K - s)^+ on a 1-d state.
    EuroPut { strike: f64 },
}

impl TestFunction {
    fn required_dim(&self) -> usize {
        match self {
            TestFunction::FAlpha { .. } | TestFunction::GAlpha { .. } => 2,
            TestFunction::EuroCall { .. } | TestFunction::EuroPut { .. } => 1,
        }
    }

    pub fn eval(&self, state: &[f64]) -> Result<f64> {
        if state.len() != self.required_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.required_dim(),
                got: state.len(),
            });
        }
        Ok(match *self {
            TestFunction::FAlpha { alpha } => radial_power(state, alpha),
            TestFunction::GAlpha { alpha } => radial_power(state, alpha) + state[0],
            TestFunction::EuroCall { strike } => (state[0] - strike).max(0.0),
            TestFunction::EuroPut { strike } => (strike - state[0]).max(0.0),
        })
    }
}

#[inline]
fn radial_power(z: &[f64], alpha: f64) -> f64 {
    let dev = (z[0] * z[0] + z[1] * z[1] - 1.0).abs();
    dev.powf(2.0 * alpha)
}
