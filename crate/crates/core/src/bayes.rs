//! Recursive MAP updating of lognormal duration parameters.
//!
//! An observation is `O = D + e` with `e ~ N(0, noise_sd)` and
//! `D ~ Lognormal(mu, sigma)`. Its likelihood given `(mu, sigma)` is the
//! normal/lognormal convolution, evaluated by trapezoidal quadrature. The
//! prior is independent Normal on `mu` and on `ln sigma`. Each update
//! maximizes log-likelihood plus log-prior over `(mu, ln sigma)` with
//! Nelder–Mead, then re-centres the prior on the result so the next batch
//! starts from the current posterior.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::duration::{LognormalParams, SIGMA_MIN};
use crate::network::ActivityId;
use crate::optim::NelderMead;

/// Nodes per quadrature grid.
pub const QUADRATURE_NODES: usize = 129;
/// Half-width of each quadrature grid in standard deviations.
pub const QUADRATURE_HALF_WIDTH: f64 = 6.0;
pub const DEFAULT_TAU_MU: f64 = 0.5;
pub const DEFAULT_TAU_LOG_SIGMA: f64 = 0.5;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UpdateError {
    #[error("observation for activity {found} passed to the update of activity {expected}")]
    MixedActivities {
        expected: ActivityId,
        found: ActivityId,
    },
    #[error("observation noise sd must be positive and finite, got {0}")]
    InvalidNoise(f64),
    #[error("observed duration must be finite, got {0}")]
    InvalidObservation(f64),
    #[error("posterior objective is not finite anywhere the optimizer looked")]
    OptimizationFailed,
}

/// One noisy duration measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationRecord {
    pub activity: ActivityId,
    /// May be zero or negative: the noise is Gaussian.
    pub observed_duration: f64,
    pub noise_sd: f64,
}

impl ObservationRecord {
    pub fn new(
        activity: ActivityId,
        observed_duration: f64,
        noise_sd: f64,
    ) -> Result<Self, UpdateError> {
        if !observed_duration.is_finite() {
            return Err(UpdateError::InvalidObservation(observed_duration));
        }
        if !(noise_sd > 0.0 && noise_sd.is_finite()) {
            return Err(UpdateError::InvalidNoise(noise_sd));
        }
        Ok(ObservationRecord {
            activity,
            observed_duration,
            noise_sd,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("observation file line {line}: {reason}")]
pub struct ObservationParseError {
    pub line: usize,
    pub reason: String,
}

/// Reads `activity_index observed_duration noise_sd` records, one per line.
/// Blank lines and lines starting with `#` are skipped. Each record keeps
/// its 1-based line number.
pub fn parse_observations(text: &str) -> Result<Vec<(usize, ObservationRecord)>, ObservationParseError> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |reason: String| ObservationParseError { line, reason };
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(err(format!("expected 3 fields, found {}", fields.len())));
        }
        let index: usize = fields[0]
            .parse()
            .map_err(|_| err(format!("activity index `{}` is not a non-negative integer", fields[0])))?;
        let number = |s: &str, what: &str| {
            s.parse::<f64>()
                .map_err(|_| err(format!("{what} `{s}` is not a number")))
        };
        let observed = number(fields[1], "observed duration")?;
        let noise = number(fields[2], "noise sd")?;
        let record = ObservationRecord::new(ActivityId(index), observed, noise)
            .map_err(|e| err(e.to_string()))?;
        out.push((line, record));
    }
    Ok(out)
}

/// Independent Normal priors on `mu` and `ln sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorHyper {
    pub mu0: f64,
    pub tau_mu: f64,
    pub log_sigma0: f64,
    pub tau_log_sigma: f64,
}

impl PriorHyper {
    pub fn centered_at(params: &LognormalParams, tau_mu: f64, tau_log_sigma: f64) -> Self {
        PriorHyper {
            mu0: params.mu,
            tau_mu,
            log_sigma0: params.sigma.ln(),
            tau_log_sigma,
        }
    }

    /// The prior mode as lognormal parameters.
    pub fn mode(&self) -> LognormalParams {
        LognormalParams {
            mu: self.mu0,
            sigma: self.log_sigma0.exp().max(SIGMA_MIN),
        }
    }
}

/// Current belief about one activity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorState {
    pub activity: ActivityId,
    pub params: LognormalParams,
    pub observation_count: usize,
    pub hyper: PriorHyper,
}

impl PosteriorState {
    /// Starts from `prior` with the prior centred on it.
    pub fn from_prior(
        activity: ActivityId,
        prior: LognormalParams,
        tau_mu: f64,
        tau_log_sigma: f64,
    ) -> Self {
        PosteriorState {
            activity,
            params: prior,
            observation_count: 0,
            hyper: PriorHyper::centered_at(&prior, tau_mu, tau_log_sigma),
        }
    }

    pub fn expected_duration(&self) -> f64 {
        self.params.expected_duration()
    }
}

fn normal_log_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - LN_SQRT_2PI
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Quadrature nodes in d-space: a log-spaced grid over `mu ± 6 sigma` merged
/// with a linear grid over the positive part of `O ± 6 noise_sd`. The second
/// grid keeps narrow noise kernels resolved when they are much tighter than
/// the lognormal spacing.
fn quadrature_nodes(theta: &LognormalParams, obs: f64, noise_sd: f64) -> Vec<f64> {
    let last = (QUADRATURE_NODES - 1) as f64;
    let lo = theta.mu - QUADRATURE_HALF_WIDTH * theta.sigma;
    let hi = theta.mu + QUADRATURE_HALF_WIDTH * theta.sigma;
    let log_grid = (0..QUADRATURE_NODES).map(|k| (lo + (hi - lo) * k as f64 / last).exp());

    let mut nodes: Vec<f64> = log_grid.collect();
    let top = obs + QUADRATURE_HALF_WIDTH * noise_sd;
    if top > 0.0 {
        let mut bottom = obs - QUADRATURE_HALF_WIDTH * noise_sd;
        if bottom <= 0.0 {
            bottom = top.min(nodes[0]) * 1e-6;
        }
        nodes.extend((0..QUADRATURE_NODES).map(|k| bottom + (top - bottom) * k as f64 / last));
    }
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    nodes
}

/// `ln ∫ N(obs; d, noise_sd) · LogN(d; theta) dd`.
pub fn log_convolution(theta: &LognormalParams, obs: f64, noise_sd: f64) -> f64 {
    let nodes = quadrature_nodes(theta, obs, noise_sd);
    let m = nodes.len();
    if m < 2 {
        return f64::NEG_INFINITY;
    }
    log_sum_exp((0..m).map(|j| {
        let left = if j == 0 { nodes[0] } else { nodes[j - 1] };
        let right = if j + 1 == m { nodes[m - 1] } else { nodes[j + 1] };
        let weight = 0.5 * (right - left);
        normal_log_pdf(obs, nodes[j], noise_sd) + theta.log_pdf(nodes[j]) + weight.ln()
    }))
}

/// Sum of per-observation log marginal likelihoods. All records must refer
/// to the same activity; an empty slice contributes zero.
pub fn marginal_log_likelihood(
    theta: &LognormalParams,
    obs: &[ObservationRecord],
) -> Result<f64, UpdateError> {
    if let Some(first) = obs.first() {
        if let Some(other) = obs.iter().find(|o| o.activity != first.activity) {
            return Err(UpdateError::MixedActivities {
                expected: first.activity,
                found: other.activity,
            });
        }
    }
    Ok(obs
        .iter()
        .map(|o| log_convolution(theta, o.observed_duration, o.noise_sd))
        .sum())
}

pub fn log_prior(theta: &LognormalParams, hyper: &PriorHyper) -> f64 {
    normal_log_pdf(theta.mu, hyper.mu0, hyper.tau_mu)
        + normal_log_pdf(theta.sigma.ln(), hyper.log_sigma0, hyper.tau_log_sigma)
}

/// The MAP objective: log-likelihood plus log-prior.
pub fn log_posterior(
    theta: &LognormalParams,
    obs: &[ObservationRecord],
    hyper: &PriorHyper,
) -> Result<f64, UpdateError> {
    Ok(marginal_log_likelihood(theta, obs)? + log_prior(theta, hyper))
}

fn theta_at(x: &[f64]) -> LognormalParams {
    LognormalParams {
        mu: x[0],
        sigma: x[1].exp().max(SIGMA_MIN),
    }
}

fn grid_argmax(
    obs: &[ObservationRecord],
    hyper: &PriorHyper,
    size: usize,
) -> Option<(LognormalParams, f64)> {
    let span_mu = (4.0 * hyper.tau_mu).min(5.0);
    let span_ls = (4.0 * hyper.tau_log_sigma).min(5.0);
    let mut best: Option<(LognormalParams, f64)> = None;
    for a in 0..size {
        for b in 0..size {
            let fa = a as f64 / (size - 1) as f64 * 2.0 - 1.0;
            let fb = b as f64 / (size - 1) as f64 * 2.0 - 1.0;
            let theta = theta_at(&[hyper.mu0 + fa * span_mu, hyper.log_sigma0 + fb * span_ls]);
            let v = marginal_log_likelihood(&theta, obs).unwrap_or(f64::NAN) + log_prior(&theta, hyper);
            if v.is_finite() && best.is_none_or(|(_, bv)| v > bv) {
                best = Some((theta, v));
            }
        }
    }
    best
}

/// One recursive update: maximizes the posterior for `new_obs` under the
/// state's prior, then re-centres the prior on the maximizer. The consumed
/// observations are not retained.
pub fn map_update(
    state: &PosteriorState,
    new_obs: &[ObservationRecord],
) -> Result<PosteriorState, UpdateError> {
    if let Some(other) = new_obs.iter().find(|o| o.activity != state.activity) {
        return Err(UpdateError::MixedActivities {
            expected: state.activity,
            found: other.activity,
        });
    }
    if new_obs.is_empty() {
        return Ok(*state);
    }
    let hyper = state.hyper;
    let objective = |x: &[f64]| {
        let theta = theta_at(x);
        -(marginal_log_likelihood(&theta, new_obs).unwrap_or(f64::NAN) + log_prior(&theta, &hyper))
    };

    let nm = NelderMead::default();
    let mut x = vec![state.params.mu, state.params.sigma.ln()];
    let mut steps = vec![0.1 + state.params.sigma, 0.3];
    let mut best = nm.minimize(objective, &x, &steps);
    // restarts guard against a collapsed simplex stalling short of the optimum
    for _ in 0..3 {
        if !best.value.is_finite() {
            break;
        }
        x.clone_from(&best.x);
        steps = vec![0.05 + theta_at(&x).sigma * 0.5, 0.15];
        let again = nm.minimize(objective, &x, &steps);
        let gained = best.value - again.value;
        if again.value < best.value {
            best = again;
        }
        if gained < 1e-9 {
            break;
        }
    }

    let found = best.value.is_finite();
    let params = if found && best.converged {
        theta_at(&best.x)
    } else {
        match grid_argmax(new_obs, &hyper, 41) {
            Some((theta, v)) if !found || v > -best.value => theta,
            _ if found => theta_at(&best.x),
            _ => return Err(UpdateError::OptimizationFailed),
        }
    };

    Ok(PosteriorState {
        activity: state.activity,
        params,
        observation_count: state.observation_count + new_obs.len(),
        hyper: PriorHyper::centered_at(&params, hyper.tau_mu, hyper.tau_log_sigma),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(o: f64, sd: f64) -> ObservationRecord {
        ObservationRecord::new(ActivityId(0), o, sd).unwrap()
    }

    fn prior10() -> LognormalParams {
        LognormalParams::from_baseline(10.0, 0.3).unwrap()
    }

    #[test]
    fn empty_observations_contribute_nothing() {
        assert_eq!(marginal_log_likelihood(&prior10(), &[]).unwrap(), 0.0);
    }

    #[test]
    fn vanishing_noise_collapses_to_density() {
        let theta = prior10();
        let ll = marginal_log_likelihood(&theta, &[obs(10.0, 1e-3)]).unwrap();
        assert!((ll - theta.log_pdf(10.0)).abs() < 0.01, "{ll} vs {}", theta.log_pdf(10.0));
    }

    #[test]
    fn mismatched_theta_scores_lower() {
        let matched = prior10();
        let off = LognormalParams::new(100f64.ln(), 0.3).unwrap();
        let o = [obs(10.0, 1e-3)];
        assert!(
            marginal_log_likelihood(&off, &o).unwrap() < marginal_log_likelihood(&matched, &o).unwrap()
        );
    }

    #[test]
    fn mixed_activities_rejected() {
        let o = [obs(10.0, 1.0), ObservationRecord::new(ActivityId(1), 3.0, 1.0).unwrap()];
        assert!(matches!(
            marginal_log_likelihood(&prior10(), &o),
            Err(UpdateError::MixedActivities { .. })
        ));
        let state = PosteriorState::from_prior(ActivityId(2), prior10(), 0.5, 0.5);
        assert!(matches!(map_update(&state, &o[..1]), Err(UpdateError::MixedActivities { .. })));
    }

    #[test]
    fn invalid_records() {
        assert!(ObservationRecord::new(ActivityId(0), 1.0, 0.0).is_err());
        assert!(ObservationRecord::new(ActivityId(0), 1.0, f64::INFINITY).is_err());
        assert!(ObservationRecord::new(ActivityId(0), f64::NAN, 1.0).is_err());
        assert!(ObservationRecord::new(ActivityId(0), -2.0, 1.0).is_ok());
    }

    #[test]
    fn prior_shape() {
        let hyper = PriorHyper {
            mu0: 1.0,
            tau_mu: 0.4,
            log_sigma0: 0.3f64.ln(),
            tau_log_sigma: 0.5,
        };
        let at = |mu: f64, sigma: f64| log_prior(&LognormalParams { mu, sigma }, &hyper);
        let top = at(1.0, 0.3);
        assert!(top > at(1.1, 0.3) && top > at(1.0, 0.35) && top > at(0.9, 0.25));
        assert!((top - at(1.4, 0.3) - 0.5).abs() < 1e-12);

        let vague = PriorHyper { tau_mu: 1e8, ..hyper };
        let diff = log_prior(&LognormalParams { mu: -3.0, sigma: 0.3 }, &vague)
            - log_prior(&LognormalParams { mu: 7.0, sigma: 0.3 }, &vague);
        assert!(diff.abs() < 1e-12);
    }

    #[test]
    fn no_evidence_fixpoint() {
        let state = PosteriorState::from_prior(ActivityId(0), prior10(), 0.5, 0.5);
        let next = map_update(&state, &[]).unwrap();
        assert_eq!(next.params, state.params);
        assert_eq!(next.observation_count, 0);
    }

    #[test]
    fn update_reanchors_and_counts() {
        let state = PosteriorState::from_prior(ActivityId(0), prior10(), 0.5, 0.5);
        let next = map_update(&state, &[obs(14.0, 1.0)]).unwrap();
        assert_eq!(next.observation_count, 1);
        assert_eq!(next.hyper.mu0, next.params.mu);
        assert_eq!(next.hyper.log_sigma0, next.params.sigma.ln());
        assert!(next.expected_duration() > 10.0 && next.expected_duration() < 14.5);
    }

    #[test]
    fn permutation_invariant_within_batch() {
        let state = PosteriorState::from_prior(ActivityId(0), prior10(), 0.5, 0.5);
        let batch = [obs(12.0, 1.0), obs(9.0, 0.5), obs(15.0, 2.0)];
        let rev: Vec<_> = batch.iter().rev().copied().collect();
        let a = map_update(&state, &batch).unwrap();
        let b = map_update(&state, &rev).unwrap();
        assert!((a.params.mu - b.params.mu).abs() < 1e-6);
        assert!((a.params.sigma - b.params.sigma).abs() < 1e-6);
    }

    #[test]
    fn negative_observations_are_usable() {
        let state = PosteriorState::from_prior(ActivityId(0), prior10(), 0.5, 0.5);
        let next = map_update(&state, &[obs(-1.0, 3.0)]).unwrap();
        assert!(next.expected_duration() < 10.0);
    }

    #[test]
    fn observation_file_format() {
        let text = "# header\n\n3 14.5 0.1\n  7 -0.2 1e-3 \n";
        let obs = parse_observations(text).unwrap();
        assert_eq!(obs.len(), 2);
        assert_eq!(obs[0].0, 3);
        assert_eq!(obs[0].1.activity, ActivityId(3));
        assert_eq!(obs[1].1.observed_duration, -0.2);
        for (bad, line) in [("1 2\n", 1), ("#\nx 1 1\n", 2), ("1 2 0\n", 1), ("1 2 nan\n", 1), ("-1 2 1\n", 1)] {
            assert_eq!(parse_observations(bad).unwrap_err().line, line, "{bad:?}");
        }
    }
}
