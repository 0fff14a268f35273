//! Lognormal activity durations.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::RngStream;

/// Smallest admissible log-space standard deviation.
pub const SIGMA_MIN: f64 = 1e-6;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DurationError {
    #[error("sigma {0} is below the minimum {SIGMA_MIN} or not finite")]
    InvalidSigma(f64),
    #[error("mu {0} is not finite")]
    InvalidMu(f64),
    #[error("baseline duration {0} must be positive")]
    NonPositiveBaseline(f64),
}

/// `D = exp(mu + sigma * Z)` with `Z` standard normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LognormalParams {
    pub mu: f64,
    pub sigma: f64,
}

impl LognormalParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self, DurationError> {
        if !mu.is_finite() {
            return Err(DurationError::InvalidMu(mu));
        }
        if !sigma.is_finite() || sigma < SIGMA_MIN {
            return Err(DurationError::InvalidSigma(sigma));
        }
        Ok(LognormalParams { mu, sigma })
    }

    /// Mean-preserving construction: `mu = ln d - sigma^2 / 2`, so the
    /// expected duration is exactly the baseline.
    pub fn from_baseline(baseline: f64, sigma: f64) -> Result<Self, DurationError> {
        if !(baseline > 0.0 && baseline.is_finite()) {
            return Err(DurationError::NonPositiveBaseline(baseline));
        }
        Self::new(baseline.ln() - 0.5 * sigma * sigma, sigma)
    }

    pub fn expected_duration(&self) -> f64 {
        (self.mu + 0.5 * self.sigma * self.sigma).exp()
    }

    pub fn variance(&self) -> f64 {
        let s2 = self.sigma * self.sigma;
        s2.exp_m1() * (2.0 * self.mu + s2).exp()
    }

    pub fn median(&self) -> f64 {
        self.mu.exp()
    }

    pub fn sample(&self, stream: &mut RngStream) -> f64 {
        (self.mu + self.sigma * stream.standard_normal()).exp()
    }

    /// Log-density; `-inf` outside the support.
    pub fn log_pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let lx = x.ln();
        let z = (lx - self.mu) / self.sigma;
        -0.5 * z * z - lx - self.sigma.ln() - LN_SQRT_2PI
    }
}

/// Per-activity duration model. Zero-duration dummies are frozen and bypass
/// sampling entirely.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActivityDuration {
    Frozen { value: f64 },
    Stochastic(LognormalParams),
}

impl ActivityDuration {
    /// Zero baselines become frozen at zero; positive ones get a
    /// mean-preserving lognormal.
    pub fn from_baseline(baseline: f64, sigma: f64) -> Result<Self, DurationError> {
        if baseline == 0.0 {
            Ok(ActivityDuration::Frozen { value: 0.0 })
        } else {
            LognormalParams::from_baseline(baseline, sigma).map(ActivityDuration::Stochastic)
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            ActivityDuration::Frozen { value } => *value,
            ActivityDuration::Stochastic(p) => p.expected_duration(),
        }
    }

    pub fn is_frozen(&self) -> bool {
        matches!(self, ActivityDuration::Frozen { .. })
    }

    pub fn params(&self) -> Option<&LognormalParams> {
        match self {
            ActivityDuration::Stochastic(p) => Some(p),
            ActivityDuration::Frozen { .. } => None,
        }
    }

    /// Frozen activities consume no random numbers.
    pub fn sample(&self, stream: &mut RngStream) -> f64 {
        match self {
            ActivityDuration::Frozen { value } => *value,
            ActivityDuration::Stochastic(p) => p.sample(stream),
        }
    }
}

/// Prior models for a set of baseline durations at a uniform sigma.
pub fn priors_from_baselines(
    baselines: &[f64],
    sigma: f64,
) -> Result<Vec<ActivityDuration>, DurationError> {
    baselines
        .iter()
        .map(|&d| ActivityDuration::from_baseline(d, sigma))
        .collect()
}
