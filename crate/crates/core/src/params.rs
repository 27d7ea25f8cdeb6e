//! Model constants: the interaction exponent σ, the normalisation
//! `c = ∫_0^1 (2 sin πt)^-σ dt` and the squared wave speed `v² = σc/(8π²)`
//! at which the unit circle travels as a continuous choreography.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{QuadratureSpec, WeightedRule};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub sigma: f64,
    pub c: f64,
    pub v2: f64,
}

pub(crate) fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "sigma must lie in (0, 1), got {sigma}"
        )))
    }
}

/// `∫_0^1 (2 sin πt)^-σ dt`, integrated as twice the half interval with the
/// weight `t^-σ` factored out.
pub fn compute_c(sigma: f64, quad: &QuadratureSpec) -> Result<f64> {
    check_sigma(sigma)?;
    let rule = WeightedRule::new(quad, sigma, 0.5)?;
    Ok(2.0 * rule.integrate(|t| sine_ratio(t).powf(sigma)))
}

/// `t / (2 sin πt)`, with its limit at 0.
pub(crate) fn sine_ratio(t: f64) -> f64 {
    if t == 0.0 {
        1.0 / (2.0 * PI)
    } else {
        t / (2.0 * (PI * t).sin())
    }
}

pub fn make_params(sigma: f64) -> Result<ModelParams> {
    ModelParams::new(sigma)
}

impl ModelParams {
    pub fn new(sigma: f64) -> Result<Self> {
        Self::with_quadrature(sigma, &QuadratureSpec::for_sigma(sigma))
    }

    pub fn with_quadrature(sigma: f64, quad: &QuadratureSpec) -> Result<Self> {
        let c = compute_c(sigma, quad)?;
        Ok(Self {
            sigma,
            c,
            v2: sigma * c / (8.0 * PI * PI),
        })
    }

    /// Re-checks the invariants of a deserialized record.
    pub fn validate(&self) -> Result<()> {
        check_sigma(self.sigma)?;
        if !(self.c >= 1.0 && self.c.is_finite()) {
            return Err(Error::domain(format!(
                "c must be finite and >= 1, got {}",
                self.c
            )));
        }
        let expected = self.sigma * self.c / (8.0 * PI * PI);
        if (self.v2 - expected).abs() > 1e-12 * expected {
            return Err(Error::Consistency(format!(
                "v2 = {} but sigma c / (8 pi^2) = {expected}",
                self.v2
            )));
        }
        Ok(())
    }

    /// Value of the action at the unit circle, `2π²v²(1 + 2/σ)`.
    pub fn predicted_min(&self) -> f64 {
        2.0 * PI * PI * self.v2 * (1.0 + 2.0 / self.sigma)
    }

    /// Magnitude of the centripetal acceleration on the unit circle, `4π²v²`.
    pub fn circle_acceleration(&self) -> f64 {
        4.0 * PI * PI * self.v2
    }

    /// `u + (2/σ) u^(-σ/2)`, minimised at `u = 1`.
    pub fn shell_profile(&self, u: f64) -> f64 {
        u + 2.0 / self.sigma * u.powf(-0.5 * self.sigma)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain struct serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }
}

/// `μ(s) = (2 sin πs)^-(2+σ) / c`, extended 1-periodically.
pub fn mu_weight(s: f64, params: &ModelParams) -> Result<f64> {
    let r = s.rem_euclid(1.0);
    if r == 0.0 || !s.is_finite() {
        return Err(Error::Singularity { s });
    }
    let sine = 2.0 * (PI * r).sin();
    Ok(sine.powf(-(2.0 + params.sigma)) / params.c)
}
