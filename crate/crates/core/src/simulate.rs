//! Monte Carlo propagation of activity-duration uncertainty.
//!
//! Replicate `k` draws every stochastic duration from the stream keyed by
//! `(seed, k)`, in activity-index order, and runs the CPM kernel on the
//! result. Replicates are computed in parallel chunks and reduced in
//! replicate order, so the output is bit-identical for any worker count.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::duration::ActivityDuration;
use crate::network::{CpmScratch, ProjectNetwork};
use crate::rng::{RngStream, StreamDomain};

/// Empirical quantile levels reported with every forecast.
pub const QUANTILE_LEVELS: [f64; 3] = [0.05, 0.5, 0.95];
/// Above this many replicates samples are not stored by default.
pub const MAX_STORED_SAMPLES: usize = 1_000_000;
/// Reservoir size used for quantiles when samples are not stored.
pub const RESERVOIR_SIZE: usize = 100_000;

const CHUNK: usize = 1024;
const CHUNKS_PER_BATCH: usize = 256;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulationError {
    #[error("expected {expected} activity models, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("replicate count must be at least 1")]
    NoReplicates,
    #[error("frozen duration of activity {0} is negative or not finite")]
    InvalidFrozenDuration(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub replicate_count: usize,
    pub seed: u64,
    pub target_completion: f64,
    pub store_samples: bool,
}

impl SimulationConfig {
    pub fn new(replicate_count: usize, seed: u64, target_completion: f64) -> Self {
        SimulationConfig {
            replicate_count,
            seed,
            target_completion,
            store_samples: replicate_count <= MAX_STORED_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantile {
    pub level: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForecastResult {
    pub replicate_count: usize,
    pub target_completion: f64,
    pub expected_completion: f64,
    /// Population variance (divisor N).
    pub completion_variance: f64,
    /// Fraction of replicates with completion strictly above the target.
    pub delay_probability: f64,
    pub critical_probability: Vec<f64>,
    pub critical_counts: Vec<u64>,
    pub quantiles: Vec<Quantile>,
    pub ci90_width: f64,
    #[serde(skip)]
    pub samples: Option<Vec<f64>>,
    /// Sorted uniform subsample, kept when `samples` is not.
    #[serde(skip)]
    pub reservoir: Option<Vec<f64>>,
}

impl ForecastResult {
    pub fn quantile(&self, level: f64) -> Option<f64> {
        self.quantiles
            .iter()
            .find(|q| q.level == level)
            .map(|q| q.value)
    }

    pub fn completion_sd(&self) -> f64 {
        self.completion_variance.sqrt()
    }

    /// Stored samples if any, otherwise the reservoir subsample.
    pub fn available_samples(&self) -> &[f64] {
        self.samples
            .as_deref()
            .or(self.reservoir.as_deref())
            .unwrap_or(&[])
    }
}

/// Fills `out` with the durations of replicate `k`.
pub fn sample_replicate(per_activity: &[ActivityDuration], seed: u64, k: u64, out: &mut [f64]) {
    let mut stream = RngStream::new(seed, StreamDomain::Simulation, k);
    for (slot, model) in out.iter_mut().zip(per_activity) {
        *slot = model.sample(&mut stream);
    }
}

/// `P(T > target)` over the samples, strict inequality.
pub fn delay_probability_from(samples: &[f64], target: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().filter(|&&t| t > target).count() as f64 / samples.len() as f64
}

/// Linear-interpolation empirical quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], level: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = level.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

struct ChunkOutput {
    completion: Vec<f64>,
    critical: Vec<u64>,
}

fn run_chunk(
    net: &ProjectNetwork,
    per_activity: &[ActivityDuration],
    seed: u64,
    range: std::ops::Range<usize>,
) -> ChunkOutput {
    let n = net.activity_count();
    let mut scratch = CpmScratch::new(n);
    let mut durations = vec![0.0; n];
    let mut mask = vec![false; n];
    let mut critical = vec![0u64; n];
    let mut completion = Vec::with_capacity(range.len());
    for k in range {
        sample_replicate(per_activity, seed, k as u64, &mut durations);
        completion.push(net.critical_mask_with(&durations, &mut scratch, &mut mask));
        for (c, &m) in critical.iter_mut().zip(&mask) {
            *c += u64::from(m);
        }
    }
    ChunkOutput {
        completion,
        critical,
    }
}

/// Runs `cfg.replicate_count` replicates and summarizes them.
pub fn simulate(
    net: &ProjectNetwork,
    per_activity: &[ActivityDuration],
    cfg: &SimulationConfig,
) -> Result<ForecastResult, SimulationError> {
    let n = net.activity_count();
    if per_activity.len() != n {
        return Err(SimulationError::LengthMismatch {
            expected: n,
            actual: per_activity.len(),
        });
    }
    if cfg.replicate_count == 0 {
        return Err(SimulationError::NoReplicates);
    }
    for (i, model) in per_activity.iter().enumerate() {
        if let ActivityDuration::Frozen { value } = model {
            if !(value.is_finite() && *value >= 0.0) {
                return Err(SimulationError::InvalidFrozenDuration(i));
            }
        }
    }

    let total = cfg.replicate_count;
    let mut critical_counts = vec![0u64; n];
    let mut stored: Vec<f64> = Vec::with_capacity(if cfg.store_samples { total } else { 0 });
    let mut reservoir: Vec<f64> = Vec::new();
    let mut reservoir_stream = RngStream::new(cfg.seed, StreamDomain::Reservoir, 0);
    let (mut count, mut mean, mut m2, mut delayed) = (0usize, 0.0f64, 0.0f64, 0usize);

    let batch = CHUNK * CHUNKS_PER_BATCH;
    let mut start = 0;
    while start < total {
        let end = (start + batch).min(total);
        let chunks: Vec<ChunkOutput> = (start..end)
            .step_by(CHUNK)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|lo| run_chunk(net, per_activity, cfg.seed, lo..(lo + CHUNK).min(end)))
            .collect();
        for chunk in chunks {
            for (c, x) in critical_counts.iter_mut().zip(&chunk.critical) {
                *c += x;
            }
            for t in chunk.completion {
                delayed += usize::from(t > cfg.target_completion);
                if cfg.store_samples {
                    stored.push(t);
                    continue;
                }
                count += 1;
                let delta = t - mean;
                mean += delta / count as f64;
                m2 += delta * (t - mean);
                if reservoir.len() < RESERVOIR_SIZE {
                    reservoir.push(t);
                } else {
                    let j = reservoir_stream.below(count as u64) as usize;
                    if j < RESERVOIR_SIZE {
                        reservoir[j] = t;
                    }
                }
            }
        }
        start = end;
    }

    let (expected_completion, completion_variance, mut sorted) = if cfg.store_samples {
        let mean = stored.iter().sum::<f64>() / total as f64;
        let var = stored.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / total as f64;
        (mean, var, stored.clone())
    } else {
        (mean, m2 / total as f64, reservoir)
    };
    sorted.sort_by(f64::total_cmp);
    let quantiles: Vec<Quantile> = QUANTILE_LEVELS
        .iter()
        .map(|&level| Quantile {
            level,
            value: quantile_sorted(&sorted, level),
        })
        .collect();
    let ci90_width = quantiles[2].value - quantiles[0].value;

    Ok(ForecastResult {
        replicate_count: total,
        target_completion: cfg.target_completion,
        expected_completion,
        completion_variance,
        delay_probability: delayed as f64 / total as f64,
        critical_probability: critical_counts
            .iter()
            .map(|&c| c as f64 / total as f64)
            .collect(),
        critical_counts,
        quantiles,
        ci90_width,
        reservoir: (!cfg.store_samples).then_some(sorted),
        samples: cfg.store_samples.then_some(stored),
    })
}
