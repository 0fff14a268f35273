//! Accuracy metrics of completion-time forecasts against a realized
//! completion time, and histogram binning for distribution plots.

use serde::Serialize;

use crate::simulate::{delay_probability_from, quantile_sorted, ForecastResult};

/// Root mean square deviation of every sample from `t_true`. This mixes
/// estimator bias with forecast spread.
pub fn rmse(samples: &[f64], t_true: f64) -> f64 {
    let n = samples.len() as f64;
    (samples.iter().map(|t| (t - t_true).powi(2)).sum::<f64>() / n).sqrt()
}

pub fn mae(samples: &[f64], t_true: f64) -> f64 {
    let n = samples.len() as f64;
    samples.iter().map(|t| (t - t_true).abs()).sum::<f64>() / n
}

/// RMSE of a point forecast, which reduces to the absolute deviation.
pub fn scalar_rmse(point_forecast: f64, t_true: f64) -> f64 {
    (point_forecast - t_true).abs()
}

pub fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccuracyReport {
    pub rmse: f64,
    pub mae: f64,
    /// `mean(T) - T_true`
    pub bias: f64,
    /// Population standard deviation of the forecast.
    pub sd: f64,
    pub ci90_width: f64,
    pub delay_probability: f64,
}

impl AccuracyReport {
    pub fn from_samples(samples: &[f64], t_true: f64, target: f64) -> Self {
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let m = mean(samples);
        AccuracyReport {
            rmse: rmse(samples, t_true),
            mae: mae(samples, t_true),
            bias: m - t_true,
            sd: rmse(samples, m),
            ci90_width: quantile_sorted(&sorted, 0.95) - quantile_sorted(&sorted, 0.05),
            delay_probability: delay_probability_from(samples, target),
        }
    }

    /// Uses stored samples when present, otherwise the forecast's moments
    /// (MAE then falls back to the RMSE bound).
    pub fn from_forecast(forecast: &ForecastResult, t_true: f64) -> Self {
        match &forecast.samples {
            Some(s) => AccuracyReport {
                ci90_width: forecast.ci90_width,
                ..Self::from_samples(s, t_true, forecast.target_completion)
            },
            None => {
                let bias = forecast.expected_completion - t_true;
                let rmse = (forecast.completion_variance + bias * bias).sqrt();
                AccuracyReport {
                    rmse,
                    mae: rmse,
                    bias,
                    sd: forecast.completion_sd(),
                    ci90_width: forecast.ci90_width,
                    delay_probability: forecast.delay_probability,
                }
            }
        }
    }

    pub fn from_point(point: f64, t_true: f64, target: f64) -> Self {
        AccuracyReport {
            rmse: scalar_rmse(point, t_true),
            mae: scalar_rmse(point, t_true),
            bias: point - t_true,
            sd: 0.0,
            ci90_width: 0.0,
            delay_probability: if point > target { 1.0 } else { 0.0 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub bin_left: f64,
    pub bin_right: f64,
    pub count: u64,
}

/// Largest number of bins [`histogram`] emits.
pub const MAX_BINS: usize = 200;

/// Freedman–Diaconis binning, capped at [`MAX_BINS`]. Degenerate samples
/// produce a single bin.
pub fn histogram(samples: &[f64]) -> Vec<HistogramBin> {
    if samples.is_empty() {
        return Vec::new();
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    let range = hi - lo;
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let width = 2.0 * iqr / (sorted.len() as f64).cbrt();
    let bins = if range > 0.0 && width > 0.0 {
        ((range / width).ceil() as usize).clamp(1, MAX_BINS)
    } else {
        1
    };
    let step = if range > 0.0 { range / bins as f64 } else { 0.0 };
    let mut counts = vec![0u64; bins];
    for &x in &sorted {
        let b = if step > 0.0 {
            (((x - lo) / step) as usize).min(bins - 1)
        } else {
            0
        };
        counts[b] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(b, count)| HistogramBin {
            bin_left: lo + step * b as f64,
            bin_right: if b + 1 == bins { hi } else { lo + step * (b + 1) as f64 },
            count,
        })
        .collect()
}
