#![allow(dead_code)]

use std::path::PathBuf;

use proptest::prelude::*;
use stoched::bayes::{log_posterior, map_update, ObservationRecord, PosteriorState, PriorHyper};
use stoched::psplib::ParseError;
use stoched::rng::{RngStream, StreamDomain};
use stoched::{ActivityId, LognormalParams, ProjectNetwork};

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

/// Every vendored PSPLIB file with its job count (dummies included).
pub fn psplib_fixtures() -> Vec<(PathBuf, usize)> {
    [
        ("psplib/j30/j301_1.sm", 32),
        ("psplib/j30/j30_s02.sm", 32),
        ("psplib/j60/j60_s01.sm", 62),
        ("psplib/j60/j60_s02.sm", 62),
        ("psplib/j120/j120_s01.sm", 122),
        ("psplib/j120/j120_s02.sm", 122),
    ]
    .into_iter()
    .map(|(p, n)| (fixture(p), n))
    .collect()
}

/// Longest path by memoized recursion over predecessor lists.
pub fn longest_path(n: usize, edges: &[(usize, usize)], durations: &[f64]) -> f64 {
    fn finish(j: usize, preds: &[Vec<usize>], d: &[f64], memo: &mut [Option<f64>]) -> f64 {
        if let Some(v) = memo[j] {
            return v;
        }
        let start = preds[j]
            .iter()
            .map(|&p| finish(p, preds, d, memo))
            .fold(0.0, f64::max);
        let v = start + d[j];
        memo[j] = Some(v);
        v
    }
    let mut preds = vec![Vec::new(); n];
    for &(a, b) in edges {
        preds[b].push(a);
    }
    let mut memo = vec![None; n];
    (0..n)
        .map(|j| finish(j, &preds, durations, &mut memo))
        .fold(0.0, f64::max)
}

/// Random DAG on up to `max_n` nodes with shuffled labels, plus integer
/// durations.
pub fn dag_with_durations(max_n: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize)>, Vec<f64>)> {
    (1..=max_n).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        (
            Just(n),
            prop::collection::vec(prop::bool::weighted(0.3), pairs),
            Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
            prop::collection::vec(0u32..20, n),
        )
            .prop_map(|(n, keep, perm, d)| {
                let mut edges = Vec::new();
                let mut k = 0;
                for i in 0..n {
                    for j in (i + 1)..n {
                        if keep[k] {
                            edges.push((perm[i], perm[j]));
                        }
                        k += 1;
                    }
                }
                (n, edges, d.into_iter().map(f64::from).collect())
            })
    })
}

/// 0 -> {1, 2} -> 3 with durations `[0, a, b, 0]` chosen by the caller.
pub fn diamond() -> ProjectNetwork {
    ProjectNetwork::new(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap()
}

/// `E[max(X, Y)]` for independent lognormals on a 2001 x 2001 grid in
/// standard-normal space over [-8, 8].
pub fn expected_max_lognormal(x: LognormalParams, y: LognormalParams) -> f64 {
    const M: usize = 2001;
    let h = 16.0 / (M - 1) as f64;
    let nodes: Vec<(f64, f64)> = (0..M)
        .map(|i| {
            let z = -8.0 + h * i as f64;
            let end = if i == 0 || i == M - 1 { 0.5 } else { 1.0 };
            (z, end * h * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt())
        })
        .collect();
    let xs: Vec<(f64, f64)> = nodes.iter().map(|&(z, w)| ((x.mu + x.sigma * z).exp(), w)).collect();
    let ys: Vec<(f64, f64)> = nodes.iter().map(|&(z, w)| ((y.mu + y.sigma * z).exp(), w)).collect();
    let mut total = 0.0;
    let mut mass = 0.0;
    for &(a, wa) in &xs {
        for &(b, wb) in &ys {
            total += wa * wb * a.max(b);
            mass += wa * wb;
        }
    }
    total / mass
}

/// Dense search of the MAP objective over `mu in [ln 5, ln 30]`,
/// `sigma in [1e-3, 1.5]` (log-spaced), refined twice around the best cell.
pub fn grid_map(obs: &[ObservationRecord], hyper: &PriorHyper) -> (LognormalParams, f64) {
    let eval = |mu: f64, ls: f64| {
        let theta = LognormalParams { mu, sigma: ls.exp() };
        log_posterior(&theta, obs, hyper).unwrap()
    };
    let (mut mu_lo, mut mu_hi) = (5f64.ln(), 30f64.ln());
    let (mut ls_lo, mut ls_hi) = (1e-3f64.ln(), 1.5f64.ln());
    let mut best = (f64::NAN, f64::NAN, f64::NEG_INFINITY);
    for &size in &[101usize, 41, 41] {
        let dm = (mu_hi - mu_lo) / (size - 1) as f64;
        let dl = (ls_hi - ls_lo) / (size - 1) as f64;
        for a in 0..size {
            for b in 0..size {
                let (mu, ls) = (mu_lo + dm * a as f64, ls_lo + dl * b as f64);
                let v = eval(mu, ls);
                if v > best.2 {
                    best = (mu, ls, v);
                }
            }
        }
        (mu_lo, mu_hi) = (best.0 - 2.0 * dm, best.0 + 2.0 * dm);
        (ls_lo, ls_hi) = (best.1 - 2.0 * dl, best.1 + 2.0 * dl);
    }
    (
        LognormalParams {
            mu: best.0,
            sigma: best.1.exp(),
        },
        best.2,
    )
}

pub fn j30_text() -> String {
    std::fs::read_to_string(fixture("psplib/j30/j301_1.sm")).unwrap()
}

/// Each corruption of j301_1 and the error it must produce.
pub fn corruptions() -> Vec<(&'static str, String, fn(&ParseError) -> bool)> {
    let t = j30_text();
    vec![
        (
            "job count header removed",
            t.replace("jobs (incl. supersource/sink ):  32", "jobs:  32"),
            |e| matches!(e, ParseError::MalformedHeader(_)),
        ),
        (
            "job count not a number",
            t.replace("jobs (incl. supersource/sink ):  32", "jobs (incl. supersource/sink ):  3x"),
            |e| matches!(e, ParseError::MalformedHeader(_)),
        ),
        (
            "precedence section missing",
            t.replace("PRECEDENCE RELATIONS:", "PRECEDENCE:"),
            |e| matches!(e, ParseError::MissingSection(_)),
        ),
        (
            "durations section missing",
            t.replace("REQUESTS/DURATIONS:", "REQUESTS:"),
            |e| matches!(e, ParseError::MissingSection(_)),
        ),
        (
            "successor count disagrees with list",
            t.replace("   1        1          3          2   3   4", "   1        1          4          2   3   4"),
            |e| matches!(e, ParseError::MalformedPrecedenceRow { .. }),
        ),
        (
            "successor out of range",
            t.replace("   7        1          1         27", "   7        1          1         99"),
            |e| matches!(e, ParseError::MalformedPrecedenceRow { .. }),
        ),
        (
            "non-numeric duration",
            t.replace(" 27      1     8 ", " 27      1     x "),
            |e| matches!(e, ParseError::MalformedDurationRow { .. }),
        ),
        (
            "cycle through a back edge",
            t.replace("  24        1          1         30", "  24        1          2         30   2"),
            |e| matches!(e, ParseError::CycleDetected),
        ),
        (
            "truncated in the duration table",
            t[..t.find(" 20      1 ").unwrap()].to_string(),
            |e| matches!(e, ParseError::MalformedDurationRow { .. } | ParseError::JobCountMismatch { .. }),
        ),
        ("empty file", String::new(), |e| {
            matches!(e, ParseError::MalformedHeader(_) | ParseError::MissingSection(_))
        }),
    ]
}

pub const A: ActivityId = ActivityId(3);

pub fn obs(values: &[f64], sd: f64) -> Vec<ObservationRecord> {
    values.iter().map(|&v| ObservationRecord::new(A, v, sd).unwrap()).collect()
}

pub fn state(baseline: f64, sigma: f64, tau_mu: f64, tau_ls: f64) -> PosteriorState {
    PosteriorState::from_prior(A, LognormalParams::from_baseline(baseline, sigma).unwrap(), tau_mu, tau_ls)
}

/// Runs the update and the grid oracle; returns (posterior, oracle params).
pub fn check_against_grid(start: &PosteriorState, data: &[ObservationRecord]) -> (PosteriorState, LognormalParams) {
    let post = map_update(start, data).unwrap();
    let ours = log_posterior(&post.params, data, &start.hyper).unwrap();
    let (grid, best) = grid_map(data, &start.hyper);
    assert!(ours >= best - 1e-3, "optimizer {ours} vs grid {best} at {grid:?}");
    (post, grid)
}

/// Observations all on one side of the prior mean, varied count and offset.
pub fn one_sided_cases() -> Vec<(f64, Vec<f64>)> {
    let prior_mean = 10.0;
    (0..20u64)
        .map(|seed| {
            let mut rng = RngStream::new(seed, StreamDomain::Other(7), 0);
            let above = seed % 2 == 0;
            let count = 1 + (seed as usize % 5);
            let values = (0..count)
                .map(|_| {
                    let offset = 2.0 + 4.0 * rng.uniform();
                    if above { prior_mean + offset } else { prior_mean - offset }
                })
                .collect();
            (prior_mean, values)
        })
        .collect()
}

/// Position of the posterior mean on the segment from the prior mean (0)
/// to the sample mean (1).
pub fn pull_fraction(tau_mu: f64, tau_ls: f64, prior_mean: f64, values: &[f64]) -> f64 {
    let sample_mean = values.iter().sum::<f64>() / values.len() as f64;
    let post = map_update(&state(prior_mean, 0.3, tau_mu, tau_ls), &obs(values, 0.5)).unwrap();
    (post.expected_duration() - prior_mean) / (sample_mean - prior_mean)
}


/// Grid-oracle cases beyond the two headline ones.
pub fn extra_grid_cases() -> Vec<(PosteriorState, Vec<ObservationRecord>)> {
    vec![
        (state(10.0, 0.3, 0.5, 0.5), obs(&[12.0], 1.0)),
        (state(10.0, 0.1, 0.5, 0.5), obs(&[8.0, 9.0], 0.5)),
        (state(20.0, 0.5, 0.5, 0.5), obs(&[11.0, 25.0, 17.0], 2.0)),
        (state(8.0, 0.3, 2.0, 1.0), obs(&[6.5, 7.0, 7.5, 7.2, 6.8], 0.2)),
        (state(10.0, 0.3, 0.5, 0.5), obs(&[-1.0], 3.0)),
    ]
}

/// Median over 20 seeds of |posterior mean - truth| after 5, 20 and 80
/// observations of a fixed duration 14 (noise sd 0.5), each from the
/// initial prior.
pub fn consistency_medians() -> Vec<f64> {
    let truth = 14.0;
    let checkpoints = [5usize, 20, 80];
    let mut errors = vec![Vec::new(); checkpoints.len()];
    for seed in 0..20u64 {
        let mut rng = RngStream::new(seed, StreamDomain::Other(8), 0);
        let values: Vec<f64> = (0..80).map(|_| truth + 0.5 * rng.standard_normal()).collect();
        let start = state(10.0, 0.3, 0.5, 0.5);
        for (k, &n) in checkpoints.iter().enumerate() {
            let post = map_update(&start, &obs(&values[..n], 0.5)).unwrap();
            errors[k].push((post.expected_duration() - truth).abs());
        }
    }
    errors.iter_mut().map(|e| stoched::experiment::median(e)).collect()
}
