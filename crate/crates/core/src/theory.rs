//! Closed-form high-temperature predictions for the dilute ferromagnet and its
//! Curie–Weiss limit.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// A predicted value together with whether the formula applies at the
/// requested parameters. When `valid` is false `value` carries no meaning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub name: String,
    pub value: f64,
    pub valid: bool,
}

impl Prediction {
    /// `Some(value)` inside the validity region.
    pub fn checked(&self) -> Option<f64> {
        self.valid.then_some(self.value)
    }
}

/// `β' = 2α tanh β`.
pub fn beta_prime(alpha: f64, beta: f64) -> f64 {
    2.0 * alpha * beta.tanh()
}

/// Inverse of [`beta_prime`] at fixed `α`: `β = atanh(β'/(2α))`.
pub fn beta_from_beta_prime(alpha: f64, beta_prime: f64) -> Result<f64> {
    if !(beta_prime.is_finite() && beta_prime >= 0.0) {
        return Err(param(format!("beta' must be finite and >= 0, got {beta_prime}")));
    }
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(param(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    if beta_prime == 0.0 {
        return Ok(0.0);
    }
    if beta_prime >= 2.0 * alpha {
        return Err(param(format!(
            "beta' = {beta_prime} needs beta' < 2 alpha = {}; no finite beta reaches it",
            2.0 * alpha
        )));
    }
    Ok((beta_prime / (2.0 * alpha)).atanh())
}

/// Inverse temperature of the critical line `2α tanh β = 1`, or `None` when
/// `α ≤ 1/2` and the whole axis is paramagnetic.
pub fn critical_beta(alpha: f64) -> Option<f64> {
    (alpha > 0.5).then(|| (0.5 / alpha).atanh())
}

/// Limiting variance of `√N q_{1⋯n}` (for `n = 1`, of `√N m`):
/// `1/(1 − 2α tanh^n β)`, valid while `2α tanh^n β < 1`.
pub fn predicted_mu_variance(n: u32, alpha: f64, beta: f64) -> Prediction {
    let name = if n == 1 {
        "N<m^2>".to_string()
    } else {
        format!("N<q^2_{n}>")
    };
    let n = n.max(1);
    let coupling = 2.0 * alpha * beta.tanh().powi(n as i32);
    let valid = coupling < 1.0;
    Prediction {
        name,
        value: if valid { 1.0 / (1.0 - coupling) } else { f64::INFINITY },
        valid,
    }
}

/// The paramagnetic pressure `ln 2 + α ln cosh β`.
pub fn symmetric_pressure(alpha: f64, beta: f64) -> f64 {
    LN_2 + alpha * beta.cosh().ln()
}

const BISECTION_TOL: f64 = 1e-12;

/// Largest non-negative solution of `m = tanh(β' m)`; zero for `β' ≤ 1`.
pub fn cw_magnetization(beta_prime: f64) -> f64 {
    if !(beta_prime > 1.0) {
        return 0.0;
    }
    // g(m) = tanh(β'm)/m − 1 falls from β'−1 > 0 at 0+ to tanh β' − 1 < 0 at 1
    let g = |m: f64| (beta_prime * m).tanh() / m - 1.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Infinite-volume Curie–Weiss pressure at coupling `β'`:
/// `ln 2 + ln cosh(β' m*) − β' m*²/2`.
pub fn cw_pressure(beta_prime: f64) -> f64 {
    let m = cw_magnetization(beta_prime);
    LN_2 + (beta_prime * m).cosh().ln() - 0.5 * beta_prime * m * m
}

/// Characteristic function of a centered Gaussian, `exp(−u² v / 2)`.
pub fn gaussian_char_fn(u: f64, variance: f64) -> Result<f64> {
    if !(variance > 0.0) {
        return Err(param(format!("variance must be positive, got {variance}")));
    }
    Ok((-0.5 * u * u * variance).exp())
}
