use std::f64::consts::PI;

use super::{DetectorMetric, LikelihoodModel};
use crate::channel::{Constellation, Features};
use crate::error::{Error, Result};
use crate::special::sqrt_pi_x_erfcx_complement;

/// Above this `μ²/4` the closed form is evaluated entirely in log form.
const OVERFLOW_GUARD: f64 = 600.0;

/// Closed-form `ln ∫_0^∞ exp(α z - α² e)·(α/σ²)·exp(-α²/(2σ²)) dα`:
///
/// `Λ = ln{1 + √π μ e^{μ²/4} [1 - Q(μ/√2)]} - ln(1 + γ)` with `γ = 2σ²e`
/// and `μ = z·sqrt(γ / (e(1+γ)))`.
pub fn rayleigh_log_integral(z: f64, e: f64, sigma: f64) -> f64 {
    let gamma = 2.0 * sigma * sigma * e;
    // γ/(e(1+γ)) = 2σ²/(1+γ), also valid at e = 0
    let mu = z * (2.0 * sigma * sigma / (1.0 + gamma)).sqrt();
    let head = if mu >= 0.0 {
        let q = 0.25 * mu * mu;
        // 1 - Q(μ/√2) = 1 - erfc(μ/2)/2
        let phi = 1.0 - 0.5 * libm::erfc(0.5 * mu);
        if q <= OVERFLOW_GUARD {
            (PI.sqrt() * mu * q.exp() * phi).ln_1p()
        } else {
            let lt = (PI.sqrt() * mu).ln() + q + phi.ln();
            lt + (-lt).exp().ln_1p()
        }
    } else {
        // 1 + √π μ e^{μ²/4} Φ(μ/√2) = 1 - √π x erfcx(x) with x = -μ/2
        sqrt_pi_x_erfcx_complement(-0.5 * mu).ln()
    };
    head - gamma.ln_1p()
}

/// Closed-form MAP likelihood for Rayleigh fading with known scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayleighMap {
    pub sigma: f64,
}

impl RayleighMap {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::input(format!("Rayleigh scale must be positive, got {sigma}")));
        }
        Ok(RayleighMap { sigma })
    }
}

impl LikelihoodModel for RayleighMap {
    fn log_likelihood(&self, z: f64, e: f64) -> f64 {
        rayleigh_log_integral(z, e, self.sigma)
    }
}

/// `Λ_m` for all messages.
pub fn rayleigh_map_metric(features: &Features, c: &Constellation, sigma: f64) -> Result<DetectorMetric> {
    RayleighMap::new(sigma)?.metric(features, c)
}
