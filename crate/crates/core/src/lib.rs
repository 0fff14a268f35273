//! Probabilistic schedule forecasting for precedence networks.
//!
//! Activity durations are lognormal. Noisy duration observations update
//! each activity's parameters by recursive MAP estimation, and Monte Carlo
//! simulation pushes the resulting distributions through the network to
//! get completion-time distributions, delay probabilities and per-activity
//! criticality.
//!
//! ```
//! use stoched::{simulate, ActivityDuration, LognormalParams, ProjectNetwork, SimulationConfig};
//!
//! // 0 -> {1, 2} -> 3
//! let net = ProjectNetwork::new(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
//! let cpm = net.compute_cpm(&[2.0, 3.0, 5.0, 2.0]).unwrap();
//! assert_eq!(cpm.completion_time, 9.0);
//!
//! let models: Vec<ActivityDuration> = [2.0, 3.0, 5.0, 2.0]
//!     .iter()
//!     .map(|&d| ActivityDuration::Stochastic(LognormalParams::from_baseline(d, 0.3).unwrap()))
//!     .collect();
//! let forecast = simulate(&net, &models, &SimulationConfig::new(4096, 7, 9.0)).unwrap();
//! assert!(forecast.expected_completion > 9.0);
//! ```

pub mod bayes;
pub mod cli;
pub mod duration;
pub mod experiment;
pub mod metrics;
pub mod network;
pub mod optim;
pub mod psplib;
pub mod rng;
pub mod simulate;

pub use bayes::{map_update, ObservationRecord, PosteriorState, PriorHyper};
pub use duration::{ActivityDuration, LognormalParams};
pub use network::{ActivityId, CpmResult, ProjectNetwork};
pub use psplib::{load_sm, parse_sm, PsplibInstance};
pub use simulate::{simulate, ForecastResult, SimulationConfig};
