//! Command-line front end: `parse`, `forecast`, `update` and `experiment`.
//!
//! [`run`] is the whole program minus process exit, so it can be driven
//! from tests. Payloads go to `out`, diagnostics to `err`.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 bad input
//! data, 4 numerical failure.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bayes::{parse_observations, UpdateError, DEFAULT_TAU_LOG_SIGMA, DEFAULT_TAU_MU};
use crate::duration::priors_from_baselines;
use crate::experiment::{
    median, run_matrix, summarize, write_csv, write_jsonl, BeliefState, ExperimentError,
    ExperimentGrid, Method, PreparedInstance, Strategy, SummaryRow, Uncertainty,
    DEFAULT_PERIODIC_BATCHES, DEFAULT_REPLICATES,
};
use crate::metrics::histogram;
use crate::network::ProjectNetwork;
use crate::psplib::{load_sm, LoadError, PsplibInstance};
use crate::simulate::{simulate, ForecastResult, SimulationConfig, SimulationError};

pub const THREADS_ENV: &str = "STOCHED_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "stoched",
    version,
    about = "Probabilistic completion-time forecasting for precedence networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Summarize a PSPLIB .sm instance.
    Parse { path: PathBuf },
    /// Monte Carlo forecast from the prior duration model.
    Forecast {
        path: PathBuf,
        #[command(flatten)]
        opts: ForecastOpts,
    },
    /// Apply an observation file, then forecast from the posterior.
    Update {
        path: PathBuf,
        observations: PathBuf,
        #[command(flatten)]
        opts: ForecastOpts,
    },
    /// Run an experiment matrix described by a TOML file.
    Experiment {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        threads: Option<ThreadSetting>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ForecastOpts {
    /// low, moderate, high, or a log-space sigma.
    #[arg(long, default_value = "moderate")]
    pub sigma: SigmaLevel,
    /// Number of replicates.
    #[arg(long = "n", default_value_t = DEFAULT_REPLICATES)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Target completion time, or `auto` for the deterministic makespan.
    #[arg(long, default_value = "auto")]
    pub target: TargetRule,
    /// Also write forecast.json, histogram.csv and manifest.json here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<ThreadSetting>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaLevel {
    Level(Uncertainty),
    Value(f64),
}

impl SigmaLevel {
    pub fn sigma(self) -> f64 {
        match self {
            SigmaLevel::Level(u) => u.default_sigma(),
            SigmaLevel::Value(s) => s,
        }
    }
}

impl FromStr for SigmaLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if let Ok(u) = s.parse::<Uncertainty>() {
            return Ok(SigmaLevel::Level(u));
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(SigmaLevel::Value(v)),
            _ => Err(format!("`{s}` is not low, moderate, high or a positive number")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetRule {
    Auto,
    Value(f64),
}

impl FromStr for TargetRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(TargetRule::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => Ok(TargetRule::Value(v)),
            _ => Err(format!("`{s}` is not `auto` or a non-negative number")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThreadSetting {
    Auto,
    Count(usize),
}

impl FromStr for ThreadSetting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(ThreadSetting::Auto);
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(ThreadSetting::Count(n)),
            _ => Err(format!("`{s}` is not `auto` or a positive integer")),
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Input(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Input(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<LoadError> for CliError {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::Io { .. } => CliError::Usage(e.to_string()),
            LoadError::Parse { ref source, .. } => {
                CliError::Input(format!("{e} (section: {})", source.section()))
            }
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match &e {
            ExperimentError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            ExperimentError::Update(UpdateError::OptimizationFailed) => {
                CliError::Numerical(e.to_string())
            }
            ExperimentError::Simulation(SimulationError::NoReplicates) => {
                CliError::Usage(e.to_string())
            }
            ExperimentError::Simulation(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

/// Runs the program with the process environment.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with_env(args, std::env::var(THREADS_ENV).ok(), out, err)
}

/// Like [`run`], with the thread-count variable passed in.
pub fn run_with_env<I, T>(
    args: I,
    env_threads: Option<String>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    2
                }
            };
        }
    };
    match execute(cli, env_threads) {
        Ok(payload) => match out.write_all(payload.as_bytes()) {
            Ok(()) => 0,
            Err(e) => {
                let _ = writeln!(err, "error: writing output: {e}");
                2
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli, env_threads: Option<String>) -> Result<String, CliError> {
    let threads = match &cli.command {
        Command::Parse { .. } => None,
        Command::Forecast { opts, .. } | Command::Update { opts, .. } => opts.threads,
        Command::Experiment { threads, .. } => *threads,
    };
    let threads = match threads {
        Some(t) => t,
        None => match env_threads.as_deref() {
            Some(v) => v
                .parse()
                .map_err(|m| CliError::Usage(format!("{THREADS_ENV}: {m}")))?,
            None => ThreadSetting::Auto,
        },
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let ThreadSetting::Count(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Numerical(format!("cannot start worker threads: {e}")))?;
    pool.install(|| match cli.command {
        Command::Parse { path } => cmd_parse(&path),
        Command::Forecast { path, opts } => cmd_forecast(&path, &opts),
        Command::Update {
            path,
            observations,
            opts,
        } => cmd_update(&path, &observations, &opts),
        Command::Experiment { config, out, .. } => cmd_experiment(&config, &out),
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn load_instance(path: &Path) -> Result<(PsplibInstance, ProjectNetwork, Vec<f64>), CliError> {
    let inst = load_sm(path)?;
    let (net, baseline) = inst
        .to_network()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok((inst, net, baseline))
}

fn makespan(net: &ProjectNetwork, baseline: &[f64]) -> Result<f64, CliError> {
    net.compute_cpm(baseline)
        .map(|c| c.completion_time)
        .map_err(|e| CliError::Input(e.to_string()))
}

#[derive(Debug, Serialize)]
pub struct InstanceSummary {
    pub instance: String,
    pub jobs: usize,
    pub real_jobs: usize,
    pub edges: usize,
    pub makespan: f64,
}

pub fn cmd_parse(path: &Path) -> Result<String, CliError> {
    let (inst, net, baseline) = load_instance(path)?;
    Ok(to_json(&InstanceSummary {
        instance: inst.instance_name.clone(),
        jobs: inst.job_count,
        real_jobs: inst.real_job_count(),
        edges: inst.edge_count(),
        makespan: makespan(&net, &baseline)?,
    }))
}

#[derive(Debug, Serialize)]
pub struct ActivitySummary {
    pub index: usize,
    pub baseline: f64,
    pub prior_mean: f64,
    pub posterior_mean: f64,
    pub observations: usize,
}

/// Output of `forecast` and `update`; the two share one schema.
#[derive(Debug, Serialize)]
pub struct ForecastReport {
    pub instance: String,
    pub sigma: f64,
    pub seed: u64,
    pub deterministic_makespan: f64,
    pub observations_applied: usize,
    pub forecast: ForecastResult,
    pub activities: Vec<ActivitySummary>,
}

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub master_seed: u64,
    pub version: &'static str,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub timestamp_unix: u64,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn digest_file(path: &Path) -> Result<FileDigest, CliError> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    })
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Writes `files` into `dir`, then a manifest covering them. On any
/// failure every file written so far is removed.
fn write_outputs(
    dir: &Path,
    files: &[(&str, Vec<u8>)],
    mut manifest: RunManifest,
) -> Result<(), CliError> {
    let fail = |written: &[PathBuf], e: std::io::Error, path: &Path| {
        for p in written {
            let _ = fs::remove_file(p);
        }
        CliError::Usage(format!("cannot write {}: {e}", path.display()))
    };
    fs::create_dir_all(dir).map_err(|e| fail(&[], e, dir))?;
    let mut written = Vec::new();
    for (name, bytes) in files {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, bytes) {
            return Err(fail(&written, e, &path));
        }
        written.push(path);
        manifest.outputs.push(FileDigest {
            path: (*name).to_string(),
            sha256: sha256_hex(bytes),
        });
    }
    let path = dir.join("manifest.json");
    if let Err(e) = fs::write(&path, to_json(&manifest)) {
        return Err(fail(&written, e, &path));
    }
    Ok(())
}

fn histogram_csv(forecast: &ForecastResult) -> Vec<u8> {
    let mut s = String::from("bin_left,bin_right,count\n");
    for b in histogram(forecast.available_samples()) {
        s.push_str(&format!("{},{},{}\n", b.bin_left, b.bin_right, b.count));
    }
    s.into_bytes()
}

fn forecast_report(
    path: &Path,
    observations: Option<&Path>,
    opts: &ForecastOpts,
) -> Result<ForecastReport, CliError> {
    if opts.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let (inst, net, baseline) = load_instance(path)?;
    let sigma = opts.sigma.sigma();
    let priors = priors_from_baselines(&baseline, sigma)
        .map_err(|e| CliError::Usage(format!("--sigma: {e}")))?;
    let mut belief = BeliefState::from_priors(&priors, DEFAULT_TAU_MU, DEFAULT_TAU_LOG_SIGMA);

    let mut counts = vec![0usize; baseline.len()];
    let mut applied = 0;
    if let Some(obs_path) = observations {
        let text = fs::read_to_string(obs_path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", obs_path.display())))?;
        let records = parse_observations(&text)
            .map_err(|e| CliError::Input(format!("{}: {e}", obs_path.display())))?;
        for (line, rec) in &records {
            let i = rec.activity.index();
            let at = || format!("{} line {line}", obs_path.display());
            if i >= baseline.len() {
                return Err(CliError::Input(format!(
                    "{}: unknown activity index {i} (instance has {} activities)",
                    at(),
                    baseline.len()
                )));
            }
            if priors[i].is_frozen() {
                return Err(CliError::Input(format!(
                    "{}: activity {i} is a zero-duration dummy and cannot be observed",
                    at()
                )));
            }
            counts[i] += 1;
        }
        let batch: Vec<_> = records.iter().map(|(_, r)| *r).collect();
        belief.apply(&batch).map_err(CliError::from)?;
        applied = batch.len();
    }

    let deterministic = makespan(&net, &baseline)?;
    let target = match opts.target {
        TargetRule::Auto => deterministic,
        TargetRule::Value(v) => v,
    };
    let models = belief.models();
    let forecast = simulate(&net, &models, &SimulationConfig::new(opts.n, opts.seed, target))
        .map_err(|e| CliError::from(ExperimentError::from(e)))?;
    let activities = (0..baseline.len())
        .map(|i| ActivitySummary {
            index: i,
            baseline: baseline[i],
            prior_mean: priors[i].mean(),
            posterior_mean: models[i].mean(),
            observations: counts[i],
        })
        .collect();
    Ok(ForecastReport {
        instance: inst.instance_name,
        sigma,
        seed: opts.seed,
        deterministic_makespan: deterministic,
        observations_applied: applied,
        forecast,
        activities,
    })
}

fn emit_forecast(
    command: &str,
    path: &Path,
    observations: Option<&Path>,
    opts: &ForecastOpts,
) -> Result<String, CliError> {
    let report = forecast_report(path, observations, opts)?;
    let json = to_json(&report);
    if let Some(dir) = &opts.out {
        let mut inputs = vec![digest_file(path)?];
        if let Some(o) = observations {
            inputs.push(digest_file(o)?);
        }
        let manifest = RunManifest {
            command: command.into(),
            config: serde_json::json!({
                "instance": path.display().to_string(),
                "observations": observations.map(|o| o.display().to_string()),
                "sigma": report.sigma,
                "n": opts.n,
                "seed": opts.seed,
                "target": report.forecast.target_completion,
            }),
            master_seed: opts.seed,
            version: env!("CARGO_PKG_VERSION"),
            inputs,
            outputs: Vec::new(),
            timestamp_unix: now_unix(),
        };
        write_outputs(
            dir,
            &[
                ("forecast.json", json.clone().into_bytes()),
                ("histogram.csv", histogram_csv(&report.forecast)),
            ],
            manifest,
        )?;
    }
    Ok(json)
}

pub fn cmd_forecast(path: &Path, opts: &ForecastOpts) -> Result<String, CliError> {
    emit_forecast("forecast", path, None, opts)
}

pub fn cmd_update(path: &Path, observations: &Path, opts: &ForecastOpts) -> Result<String, CliError> {
    emit_forecast("update", path, Some(observations), opts)
}

/// `seeds = 10` means seeds 0..10; a list is used as given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    Count(u64),
    List(Vec<u64>),
}

impl SeedSpec {
    pub fn seeds(&self) -> Vec<u64> {
        match self {
            SeedSpec::Count(n) => (0..*n).collect(),
            SeedSpec::List(v) => v.clone(),
        }
    }
}

fn default_seeds() -> SeedSpec {
    SeedSpec::Count(10)
}
fn default_uncertainties() -> Vec<Uncertainty> {
    Uncertainty::ALL.to_vec()
}
fn default_strategies() -> Vec<Strategy> {
    Strategy::ALL.to_vec()
}
fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}
fn default_replicates() -> usize {
    DEFAULT_REPLICATES
}
fn default_multiplier() -> f64 {
    1.0
}
fn default_batches() -> usize {
    DEFAULT_PERIODIC_BATCHES
}
fn default_tau_mu() -> f64 {
    DEFAULT_TAU_MU
}
fn default_tau_log_sigma() -> f64 {
    DEFAULT_TAU_LOG_SIGMA
}

/// Experiment file. Instance paths are relative to the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instances: Vec<PathBuf>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_seeds")]
    pub seeds: SeedSpec,
    #[serde(default = "default_uncertainties")]
    pub uncertainties: Vec<Uncertainty>,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<Strategy>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_replicates")]
    pub replicate_count: usize,
    #[serde(default = "default_multiplier")]
    pub target_multiplier: f64,
    #[serde(default = "default_batches")]
    pub periodic_batches: usize,
    #[serde(default = "default_tau_mu")]
    pub tau_mu: f64,
    #[serde(default = "default_tau_log_sigma")]
    pub tau_log_sigma: f64,
    /// Overrides for low, moderate, high.
    #[serde(default)]
    pub sigma_duration: Option<[f64; 3]>,
    #[serde(default)]
    pub sigma_obs_fraction: Option<[f64; 3]>,
    #[serde(default)]
    pub record_wall_time: bool,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |key: &str, why: &str| Err(CliError::Usage(format!("config key `{key}`: {why}")));
        if self.instances.is_empty() {
            return bad("instances", "must list at least one instance");
        }
        if self.seeds.seeds().is_empty() {
            return bad("seeds", "must select at least one seed");
        }
        if self.uncertainties.is_empty() {
            return bad("uncertainties", "must not be empty");
        }
        if self.strategies.is_empty() {
            return bad("strategies", "must not be empty");
        }
        if self.methods.is_empty() {
            return bad("methods", "must not be empty");
        }
        if self.replicate_count == 0 {
            return bad("replicate_count", "must be at least 1");
        }
        if !(self.target_multiplier > 0.0 && self.target_multiplier.is_finite()) {
            return bad("target_multiplier", "must be positive");
        }
        if self.periodic_batches == 0 {
            return bad("periodic_batches", "must be at least 1");
        }
        if !(self.tau_mu > 0.0 && self.tau_mu.is_finite()) {
            return bad("tau_mu", "must be positive");
        }
        if !(self.tau_log_sigma > 0.0 && self.tau_log_sigma.is_finite()) {
            return bad("tau_log_sigma", "must be positive");
        }
        if let Some(s) = self.sigma_duration {
            if s.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return bad("sigma_duration", "every entry must be positive");
            }
        }
        if let Some(f) = self.sigma_obs_fraction {
            if f.iter().any(|v| !(*v > 0.0 && *v <= 1.0)) {
                return bad("sigma_obs_fraction", "every entry must lie in (0, 1]");
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> ExperimentGrid {
        ExperimentGrid {
            master_seed: self.master_seed,
            uncertainties: self.uncertainties.clone(),
            strategies: self.strategies.clone(),
            methods: self.methods.clone(),
            replicate_count: self.replicate_count,
            target_multiplier: self.target_multiplier,
            periodic_batches: self.periodic_batches,
            tau_mu: self.tau_mu,
            tau_log_sigma: self.tau_log_sigma,
            sigma_duration: self.sigma_duration,
            sigma_obs_fraction: self.sigma_obs_fraction,
            record_wall_time: self.record_wall_time,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct MethodMedian {
    pub method: Method,
    pub median_rmse: f64,
}

#[derive(Debug, Serialize)]
pub struct ExperimentSummary {
    pub rows: usize,
    pub by_method: Vec<MethodMedian>,
    pub cells: Vec<SummaryRow>,
}

pub fn cmd_experiment(config_path: &Path, out_dir: &Path) -> Result<String, CliError> {
    let text = fs::read_to_string(config_path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", config_path.display())))?;
    let cfg = ExperimentConfig::from_toml(&text)?;
    let base = config_path.parent().unwrap_or(Path::new(""));

    let mut instances = Vec::with_capacity(cfg.instances.len());
    let mut inputs = vec![digest_file(config_path)?];
    for rel in &cfg.instances {
        let path = base.join(rel);
        let (inst, network, baseline) = load_instance(&path)?;
        inputs.push(digest_file(&path)?);
        instances.push(PreparedInstance {
            name: inst.instance_name,
            network,
            baseline,
        });
    }

    let seeds = cfg.seeds.seeds();
    let rows = run_matrix(&instances, &cfg.grid(), &seeds)?;

    let mut csv = Vec::new();
    let mut jsonl = Vec::new();
    write_csv(&rows, &mut csv).expect("writing to memory");
    write_jsonl(&rows, &mut jsonl).expect("writing to memory");
    let manifest = RunManifest {
        command: "experiment".into(),
        config: serde_json::to_value(&cfg).expect("config serializes"),
        master_seed: cfg.master_seed,
        version: env!("CARGO_PKG_VERSION"),
        inputs,
        outputs: Vec::new(),
        timestamp_unix: now_unix(),
    };
    write_outputs(
        out_dir,
        &[("results.csv", csv), ("results.jsonl", jsonl)],
        manifest,
    )?;

    let by_method = cfg
        .methods
        .iter()
        .map(|&method| {
            let mut v: Vec<f64> = rows.iter().filter(|r| r.method == method).map(|r| r.rmse).collect();
            MethodMedian {
                method,
                median_rmse: median(&mut v),
            }
        })
        .collect();
    Ok(to_json(&ExperimentSummary {
        rows: rows.len(),
        by_method,
        cells: summarize(&rows),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_values() {
        assert_eq!("high".parse::<SigmaLevel>().unwrap().sigma(), 0.5);
        assert_eq!("0.2".parse::<SigmaLevel>().unwrap(), SigmaLevel::Value(0.2));
        assert!("-1".parse::<SigmaLevel>().is_err());
        assert_eq!("auto".parse::<TargetRule>().unwrap(), TargetRule::Auto);
        assert_eq!("4".parse::<ThreadSetting>().unwrap(), ThreadSetting::Count(4));
        assert!("0".parse::<ThreadSetting>().is_err());
    }

    #[test]
    fn config_defaults_and_key_errors() {
        let cfg = ExperimentConfig::from_toml("instances = [\"a.sm\"]\n").unwrap();
        assert_eq!(cfg.seeds.seeds().len(), 10);
        assert_eq!(cfg.grid().cell_count(1, 10), 360);
        let e = ExperimentConfig::from_toml("instances = [\"a.sm\"]\nreplicate_count = 0\n").unwrap_err();
        assert!(e.to_string().contains("replicate_count") && e.exit_code() == 2);
        let e = ExperimentConfig::from_toml("instances = [\"a.sm\"]\nbogus = 1\n").unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
        let e = ExperimentConfig::from_toml("instances = [\"a.sm\"]\nmethods = [\"magic\"]\n").unwrap_err();
        assert!(e.to_string().contains("magic"), "{e}");
    }

    #[test]
    fn usage_errors_exit_2() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run_with_env(["stoched", "frobnicate"], None, &mut out, &mut err), 2);
        let code = run_with_env(["stoched", "parse", "/nonexistent/x.sm"], None, &mut out, &mut err);
        assert_eq!(code, 2);
        assert!(String::from_utf8_lossy(&err).contains("/nonexistent/x.sm"));
        let code = run_with_env(["stoched", "parse", "x.sm"], Some("zero".into()), &mut out, &mut err);
        assert_eq!(code, 2);
    }

    #[test]
    fn help_exits_0() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run_with_env(["stoched", "--help"], None, &mut out, &mut err), 0);
        assert!(String::from_utf8_lossy(&out).contains("forecast"));
    }
}
