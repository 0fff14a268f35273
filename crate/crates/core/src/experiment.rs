//! Benchmark experiment harness.
//!
//! One cell = one instance under one scenario (uncertainty level, updating
//! strategy, forecasting method, seed). A cell realizes a ground-truth
//! project from the prior model, generates one noisy observation per real
//! activity, feeds the observations to the method according to the
//! strategy, and scores the final forecast against the realized completion
//! time.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bayes::{
    map_update, ObservationRecord, PosteriorState, UpdateError, DEFAULT_TAU_LOG_SIGMA,
    DEFAULT_TAU_MU,
};
use crate::duration::{priors_from_baselines, ActivityDuration, DurationError, LognormalParams};
use crate::metrics::AccuracyReport;
use crate::network::{ActivityId, NetworkError, ProjectNetwork};
use crate::rng::{derive_seed, RngStream, StreamDomain};
use crate::simulate::{simulate, ForecastResult, SimulationConfig, SimulationError};

pub const DEFAULT_REPLICATES: usize = 10_000;
pub const DEFAULT_PERIODIC_BATCHES: usize = 4;
pub const CSV_HEADER: &str =
    "instance,method,strategy,uncertainty,seed,rmse,mae,e_t,var_t,p_delay,ci90,wall_ms";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Duration(#[from] DurationError),
    #[error(transparent)]
    Update(#[from] UpdateError),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
}

macro_rules! labelled_enum {
    ($name:ident { $($variant:ident => $label:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $label),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($label => Ok($name::$variant),)+
                    other => Err(format!(
                        "unknown {} `{other}` (expected one of: {})",
                        stringify!($name).to_lowercase(),
                        [$($label),+].join(", ")
                    )),
                }
            }
        }
    };
}

labelled_enum!(Uncertainty {
    Low => "low",
    Moderate => "moderate",
    High => "high",
});

labelled_enum!(Strategy {
    None => "none",
    Periodic => "periodic",
    Continuous => "continuous",
});

labelled_enum!(Method {
    DeterministicCpm => "deterministic_cpm",
    StaticMc => "static_mc",
    BayesNoPropagation => "bayes_no_propagation",
    FullFramework => "full_framework",
});

impl Uncertainty {
    /// Log-space sigma of every non-dummy activity.
    pub fn default_sigma(self) -> f64 {
        match self {
            Uncertainty::Low => 0.1,
            Uncertainty::Moderate => 0.3,
            Uncertainty::High => 0.5,
        }
    }

    /// Observation noise sd as a fraction of the baseline duration.
    pub fn default_obs_fraction(self) -> f64 {
        match self {
            Uncertainty::Low => 0.05,
            Uncertainty::Moderate => 0.10,
            Uncertainty::High => 0.20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub uncertainty: Uncertainty,
    pub sigma_duration: f64,
    pub sigma_obs_fraction: f64,
    pub strategy: Strategy,
    pub method: Method,
    pub seed: u64,
    pub replicate_count: usize,
    /// `T_target = target_multiplier * deterministic CPM makespan`.
    pub target_multiplier: f64,
    pub periodic_batches: usize,
    pub tau_mu: f64,
    pub tau_log_sigma: f64,
}

impl ScenarioConfig {
    pub fn new(uncertainty: Uncertainty, strategy: Strategy, method: Method, seed: u64) -> Self {
        ScenarioConfig {
            uncertainty,
            sigma_duration: uncertainty.default_sigma(),
            sigma_obs_fraction: uncertainty.default_obs_fraction(),
            strategy,
            method,
            seed,
            replicate_count: DEFAULT_REPLICATES,
            target_multiplier: 1.0,
            periodic_batches: DEFAULT_PERIODIC_BATCHES,
            tau_mu: DEFAULT_TAU_MU,
            tau_log_sigma: DEFAULT_TAU_LOG_SIGMA,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::InvalidConfig(m));
        if !(self.sigma_duration > 0.0 && self.sigma_duration.is_finite()) {
            return bad(format!("sigma_duration {} must be positive", self.sigma_duration));
        }
        if !(self.sigma_obs_fraction > 0.0 && self.sigma_obs_fraction <= 1.0) {
            return bad(format!(
                "sigma_obs_fraction {} must lie in (0, 1]",
                self.sigma_obs_fraction
            ));
        }
        if !(self.target_multiplier > 0.0 && self.target_multiplier.is_finite()) {
            return bad(format!("target_multiplier {} must be positive", self.target_multiplier));
        }
        if self.replicate_count == 0 {
            return bad("replicate_count must be at least 1".into());
        }
        if self.periodic_batches == 0 {
            return bad("periodic_batches must be at least 1".into());
        }
        if !(self.tau_mu > 0.0 && self.tau_log_sigma > 0.0) {
            return bad("prior scales must be positive".into());
        }
        Ok(())
    }
}

/// One realized project.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    pub true_durations: Vec<f64>,
    pub earliest_finish: Vec<f64>,
    pub t_true: f64,
}

/// Draws a true duration for every non-dummy activity from the scenario's
/// prior and schedules them.
pub fn generate_ground_truth(
    net: &ProjectNetwork,
    baseline: &[f64],
    cfg: &ScenarioConfig,
) -> Result<GroundTruth, ExperimentError> {
    let priors = priors_from_baselines(baseline, cfg.sigma_duration)?;
    let mut stream = RngStream::new(cfg.seed, StreamDomain::Truth, 0);
    let true_durations: Vec<f64> = priors.iter().map(|p| p.sample(&mut stream)).collect();
    let cpm = net.compute_cpm(&true_durations)?;
    Ok(GroundTruth {
        true_durations,
        earliest_finish: cpm.earliest_finish,
        t_true: cpm.completion_time,
    })
}

/// One observation per non-dummy activity, ordered by the activity's
/// ground-truth finish time (ties by index).
pub fn generate_observations(
    truth: &GroundTruth,
    baseline: &[f64],
    cfg: &ScenarioConfig,
) -> Result<Vec<ObservationRecord>, ExperimentError> {
    let mut order: Vec<usize> = (0..baseline.len()).filter(|&i| baseline[i] > 0.0).collect();
    order.sort_by(|&a, &b| {
        truth.earliest_finish[a]
            .total_cmp(&truth.earliest_finish[b])
            .then(a.cmp(&b))
    });
    order
        .into_iter()
        .map(|i| {
            let noise_sd = cfg.sigma_obs_fraction * baseline[i];
            let mut stream = RngStream::new(cfg.seed, StreamDomain::Observation, i as u64);
            let observed = truth.true_durations[i] + noise_sd * stream.standard_normal();
            Ok(ObservationRecord::new(ActivityId(i), observed, noise_sd)?)
        })
        .collect()
}

/// Splits the completion-ordered observations into update cycles.
pub fn update_cycles(
    observations: &[ObservationRecord],
    strategy: Strategy,
    periodic_batches: usize,
) -> Vec<&[ObservationRecord]> {
    match strategy {
        Strategy::None => Vec::new(),
        Strategy::Continuous => observations.chunks(1).collect(),
        Strategy::Periodic => {
            let m = observations.len();
            let k = periodic_batches.max(1);
            let mut cycles = Vec::with_capacity(k);
            let mut start = 0;
            for b in 0..k {
                let len = m / k + usize::from(b < m % k);
                if len > 0 {
                    cycles.push(&observations[start..start + len]);
                }
                start += len;
            }
            cycles
        }
    }
}

/// Per-activity Bayesian state; `None` for frozen activities.
#[derive(Debug, Clone)]
pub struct BeliefState {
    states: Vec<Option<PosteriorState>>,
    frozen: Vec<f64>,
}

impl BeliefState {
    pub fn from_priors(priors: &[ActivityDuration], tau_mu: f64, tau_log_sigma: f64) -> Self {
        let states = priors
            .iter()
            .enumerate()
            .map(|(i, p)| {
                p.params()
                    .map(|params| PosteriorState::from_prior(ActivityId(i), *params, tau_mu, tau_log_sigma))
            })
            .collect();
        let frozen = priors
            .iter()
            .map(|p| match p {
                ActivityDuration::Frozen { value } => *value,
                ActivityDuration::Stochastic(_) => 0.0,
            })
            .collect();
        BeliefState { states, frozen }
    }

    /// Applies one update cycle. Observations are grouped per activity and
    /// each activity gets a single recursive update with its group.
    pub fn apply(&mut self, batch: &[ObservationRecord]) -> Result<(), ExperimentError> {
        let mut touched: Vec<usize> = batch.iter().map(|o| o.activity.index()).collect();
        touched.sort_unstable();
        touched.dedup();
        for i in touched {
            let group: Vec<ObservationRecord> = batch
                .iter()
                .filter(|o| o.activity.index() == i)
                .copied()
                .collect();
            let state = self
                .states
                .get_mut(i)
                .and_then(Option::as_mut)
                .ok_or_else(|| {
                    ExperimentError::InvalidConfig(format!(
                        "observation for activity {i}, which has no stochastic model"
                    ))
                })?;
            *state = map_update(state, &group)?;
        }
        Ok(())
    }

    pub fn state(&self, i: usize) -> Option<&PosteriorState> {
        self.states.get(i).and_then(Option::as_ref)
    }

    /// Current duration models (MAP plug-in).
    pub fn models(&self) -> Vec<ActivityDuration> {
        self.states
            .iter()
            .zip(&self.frozen)
            .map(|(s, &value)| match s {
                Some(s) => ActivityDuration::Stochastic(s.params),
                None => ActivityDuration::Frozen { value },
            })
            .collect()
    }

    pub fn expected_durations(&self) -> Vec<f64> {
        self.models().iter().map(ActivityDuration::mean).collect()
    }

    pub fn posterior_params(&self) -> Vec<Option<LognormalParams>> {
        self.states.iter().map(|s| s.map(|s| s.params)).collect()
    }
}

/// Forecast summary after one update cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleSummary {
    pub cycle: usize,
    pub observations_used: usize,
    pub expected_completion: f64,
    pub ci90_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub instance: String,
    pub method: Method,
    pub strategy: Strategy,
    pub uncertainty: Uncertainty,
    pub seed: u64,
    pub rmse: f64,
    pub mae: f64,
    pub e_t: f64,
    pub var_t: f64,
    pub p_delay: f64,
    pub ci90: f64,
    pub wall_ms: u64,
}

impl ExperimentRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.instance,
            self.method,
            self.strategy,
            self.uncertainty,
            self.seed,
            self.rmse,
            self.mae,
            self.e_t,
            self.var_t,
            self.p_delay,
            self.ci90,
            self.wall_ms
        )
    }
}

/// What a method produced for one cell.
#[derive(Debug, Clone)]
pub enum Prediction {
    Point(f64),
    Distribution(ForecastResult),
}

#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub row: ExperimentRow,
    pub prediction: Prediction,
    pub truth: GroundTruth,
    pub accuracy: AccuracyReport,
    /// Final per-activity models the forecast was made from.
    pub models: Vec<ActivityDuration>,
    /// One entry per update cycle (distribution methods only).
    pub trajectory: Vec<CycleSummary>,
}

/// Runs one method on one instance under one scenario.
pub fn run_method(
    instance: &str,
    net: &ProjectNetwork,
    baseline: &[f64],
    cfg: &ScenarioConfig,
    record_wall_time: bool,
) -> Result<MethodOutcome, ExperimentError> {
    cfg.validate()?;
    let started = Instant::now();

    let makespan = net.compute_cpm(baseline)?.completion_time;
    let target = cfg.target_multiplier * makespan;
    let truth = generate_ground_truth(net, baseline, cfg)?;
    let observations = generate_observations(&truth, baseline, cfg)?;
    let priors = priors_from_baselines(baseline, cfg.sigma_duration)?;

    // static MC is the full framework with updating switched off
    let strategy = match cfg.method {
        Method::StaticMc | Method::DeterministicCpm => Strategy::None,
        _ => cfg.strategy,
    };
    let cycles = update_cycles(&observations, strategy, cfg.periodic_batches);
    let mut belief = BeliefState::from_priors(&priors, cfg.tau_mu, cfg.tau_log_sigma);
    let sim_cfg = SimulationConfig::new(cfg.replicate_count, cfg.seed, target);

    let mut trajectory = Vec::new();
    let (prediction, models) = match cfg.method {
        Method::DeterministicCpm => {
            let means: Vec<f64> = priors.iter().map(ActivityDuration::mean).collect();
            (Prediction::Point(net.compute_cpm(&means)?.completion_time), priors)
        }
        Method::BayesNoPropagation => {
            for cycle in &cycles {
                belief.apply(cycle)?;
            }
            let point = net.compute_cpm(&belief.expected_durations())?.completion_time;
            (Prediction::Point(point), belief.models())
        }
        Method::StaticMc | Method::FullFramework => {
            let mut forecast = simulate(net, &belief.models(), &sim_cfg)?;
            let mut used = 0;
            for (c, cycle) in cycles.iter().enumerate() {
                belief.apply(cycle)?;
                used += cycle.len();
                forecast = simulate(net, &belief.models(), &sim_cfg)?;
                trajectory.push(CycleSummary {
                    cycle: c + 1,
                    observations_used: used,
                    expected_completion: forecast.expected_completion,
                    ci90_width: forecast.ci90_width,
                });
            }
            (Prediction::Distribution(forecast), belief.models())
        }
    };

    let accuracy = match &prediction {
        Prediction::Point(p) => AccuracyReport::from_point(*p, truth.t_true, target),
        Prediction::Distribution(f) => AccuracyReport::from_forecast(f, truth.t_true),
    };
    let (e_t, var_t) = match &prediction {
        Prediction::Point(p) => (*p, 0.0),
        Prediction::Distribution(f) => (f.expected_completion, f.completion_variance),
    };
    let wall_ms = if record_wall_time {
        started.elapsed().as_millis() as u64
    } else {
        0
    };

    Ok(MethodOutcome {
        row: ExperimentRow {
            instance: instance.to_string(),
            method: cfg.method,
            strategy: cfg.strategy,
            uncertainty: cfg.uncertainty,
            seed: cfg.seed,
            rmse: accuracy.rmse,
            mae: accuracy.mae,
            e_t,
            var_t,
            p_delay: accuracy.delay_probability,
            ci90: accuracy.ci90_width,
            wall_ms,
        },
        prediction,
        truth,
        accuracy,
        models,
        trajectory,
    })
}

/// A benchmark instance ready to run.
#[derive(Debug, Clone)]
pub struct PreparedInstance {
    pub name: String,
    pub network: ProjectNetwork,
    pub baseline: Vec<f64>,
}

/// The scenario grid swept by [`run_matrix`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentGrid {
    pub master_seed: u64,
    pub uncertainties: Vec<Uncertainty>,
    pub strategies: Vec<Strategy>,
    pub methods: Vec<Method>,
    pub replicate_count: usize,
    pub target_multiplier: f64,
    pub periodic_batches: usize,
    pub tau_mu: f64,
    pub tau_log_sigma: f64,
    /// Per-level overrides of the default sigma / noise fraction.
    pub sigma_duration: Option<[f64; 3]>,
    pub sigma_obs_fraction: Option<[f64; 3]>,
    pub record_wall_time: bool,
}

impl Default for ExperimentGrid {
    fn default() -> Self {
        ExperimentGrid {
            master_seed: 0,
            uncertainties: Uncertainty::ALL.to_vec(),
            strategies: Strategy::ALL.to_vec(),
            methods: Method::ALL.to_vec(),
            replicate_count: DEFAULT_REPLICATES,
            target_multiplier: 1.0,
            periodic_batches: DEFAULT_PERIODIC_BATCHES,
            tau_mu: DEFAULT_TAU_MU,
            tau_log_sigma: DEFAULT_TAU_LOG_SIGMA,
            sigma_duration: None,
            sigma_obs_fraction: None,
            record_wall_time: false,
        }
    }
}

impl ExperimentGrid {
    fn level_index(u: Uncertainty) -> usize {
        match u {
            Uncertainty::Low => 0,
            Uncertainty::Moderate => 1,
            Uncertainty::High => 2,
        }
    }

    /// Scenario for one cell. The seed depends on the instance, uncertainty
    /// level and replicate seed but not on strategy or method, so all
    /// methods in a cell are scored against the same realized project.
    pub fn scenario(
        &self,
        instance_index: usize,
        uncertainty: Uncertainty,
        strategy: Strategy,
        method: Method,
        replicate_seed: u64,
    ) -> ScenarioConfig {
        let level = Self::level_index(uncertainty);
        let seed = derive_seed(
            self.master_seed,
            &[instance_index as u64, level as u64, replicate_seed],
        );
        let mut cfg = ScenarioConfig::new(uncertainty, strategy, method, seed);
        if let Some(s) = self.sigma_duration {
            cfg.sigma_duration = s[level];
        }
        if let Some(f) = self.sigma_obs_fraction {
            cfg.sigma_obs_fraction = f[level];
        }
        cfg.replicate_count = self.replicate_count;
        cfg.target_multiplier = self.target_multiplier;
        cfg.periodic_batches = self.periodic_batches;
        cfg.tau_mu = self.tau_mu;
        cfg.tau_log_sigma = self.tau_log_sigma;
        cfg
    }

    pub fn cell_count(&self, instances: usize, seeds: usize) -> usize {
        instances * self.uncertainties.len() * self.strategies.len() * self.methods.len() * seeds
    }
}

/// Every combination of instance x uncertainty x strategy x method x seed,
/// in that nesting order. Cells run in parallel; rows come back in cell
/// order.
pub fn run_matrix(
    instances: &[PreparedInstance],
    grid: &ExperimentGrid,
    seeds: &[u64],
) -> Result<Vec<ExperimentRow>, ExperimentError> {
    if grid.cell_count(instances.len(), seeds.len()) == 0 {
        return Err(ExperimentError::InvalidConfig("experiment grid is empty".into()));
    }
    let mut cells = Vec::with_capacity(grid.cell_count(instances.len(), seeds.len()));
    for (ii, inst) in instances.iter().enumerate() {
        for &u in &grid.uncertainties {
            for &s in &grid.strategies {
                for &m in &grid.methods {
                    for &seed in seeds {
                        cells.push((inst, grid.scenario(ii, u, s, m, seed)));
                    }
                }
            }
        }
    }
    cells
        .into_par_iter()
        .map(|(inst, cfg)| {
            run_method(&inst.name, &inst.network, &inst.baseline, &cfg, grid.record_wall_time)
                .map(|o| o.row)
        })
        .collect()
}

pub fn write_csv<W: Write>(rows: &[ExperimentRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for row in rows {
        writeln!(out, "{}", row.to_csv_line())?;
    }
    Ok(())
}

pub fn write_jsonl<W: Write>(rows: &[ExperimentRow], mut out: W) -> io::Result<()> {
    for row in rows {
        serde_json::to_writer(&mut out, row)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub instance: String,
    pub uncertainty: Uncertainty,
    pub strategy: Strategy,
    pub method: Method,
    pub seeds: usize,
    pub median_rmse: f64,
    pub median_ci90: f64,
}

/// Median RMSE and CI width per (instance, uncertainty, strategy, method),
/// in first-appearance order.
pub fn summarize(rows: &[ExperimentRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(String, Uncertainty, Strategy, Method)> = Vec::new();
    for r in rows {
        let key = (r.instance.clone(), r.uncertainty, r.strategy, r.method);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(instance, uncertainty, strategy, method)| {
            let group: Vec<&ExperimentRow> = rows
                .iter()
                .filter(|r| {
                    r.instance == instance
                        && r.uncertainty == uncertainty
                        && r.strategy == strategy
                        && r.method == method
                })
                .collect();
            let mut rmse: Vec<f64> = group.iter().map(|r| r.rmse).collect();
            let mut ci: Vec<f64> = group.iter().map(|r| r.ci90).collect();
            SummaryRow {
                seeds: group.len(),
                median_rmse: median(&mut rmse),
                median_ci90: median(&mut ci),
                instance,
                uncertainty,
                strategy,
                method,
            }
        })
        .collect()
}
