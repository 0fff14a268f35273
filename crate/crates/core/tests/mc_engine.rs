mod common;

use common::{diamond, expected_max_lognormal, fixture};
use stoched::duration::priors_from_baselines;
use stoched::{load_sm, simulate, ActivityDuration, LognormalParams, ProjectNetwork, SimulationConfig};

fn stochastic(mu: f64, sigma: f64) -> ActivityDuration {
    ActivityDuration::Stochastic(LognormalParams { mu, sigma })
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn identical_output_for_any_thread_count() {
    let inst = load_sm(&fixture("psplib/j30/j301_1.sm")).unwrap();
    let (net, base) = inst.to_network().unwrap();
    let models = priors_from_baselines(&base, 0.3).unwrap();
    let cfg = SimulationConfig::new(300_000, 42, 38.0);
    let one = in_pool(1, || simulate(&net, &models, &cfg).unwrap());
    for threads in [2, 3, 8] {
        let many = in_pool(threads, || simulate(&net, &models, &cfg).unwrap());
        assert_eq!(one, many, "{threads} threads");
    }
}

#[test]
fn different_seeds_differ() {
    let net = diamond();
    let models = vec![stochastic(0.0, 0.5); 4];
    let a = simulate(&net, &models, &SimulationConfig::new(1000, 1, 3.0)).unwrap();
    let b = simulate(&net, &models, &SimulationConfig::new(1000, 2, 3.0)).unwrap();
    assert_ne!(a.expected_completion, b.expected_completion);
}

#[test]
fn parallel_pair_matches_quadrature() {
    // two unconnected activities: T = max(X, Y)
    let net = ProjectNetwork::new(2, &[]).unwrap();
    let (x, y) = (LognormalParams { mu: 2.0, sigma: 0.3 }, LognormalParams { mu: 2.1, sigma: 0.5 });
    let oracle = expected_max_lognormal(x, y);
    let models = vec![ActivityDuration::Stochastic(x), ActivityDuration::Stochastic(y)];
    let f = simulate(&net, &models, &SimulationConfig::new(200_000, 9, oracle)).unwrap();
    assert!((f.expected_completion / oracle - 1.0).abs() < 0.005, "{} vs {oracle}", f.expected_completion);
    let cp_sum: f64 = f.critical_probability.iter().sum();
    assert!((cp_sum - 1.0).abs() < 1e-12, "ties have probability zero");
}

#[test]
fn series_chain_mean_is_sum_of_means() {
    let net = ProjectNetwork::new(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
    let models: Vec<ActivityDuration> = [3.0, 7.0, 1.0, 12.0, 5.0]
        .iter()
        .map(|&d| ActivityDuration::Stochastic(LognormalParams::from_baseline(d, 0.4).unwrap()))
        .collect();
    let exact_mean: f64 = models.iter().map(ActivityDuration::mean).sum();
    let exact_var: f64 = models.iter().map(|m| m.params().unwrap().variance()).sum();
    let n = 100_000;
    let f = simulate(&net, &models, &SimulationConfig::new(n, 3, 28.0)).unwrap();
    let se = (exact_var / n as f64).sqrt();
    assert!((f.expected_completion - exact_mean).abs() < 4.0 * se);
    assert!((f.completion_variance / exact_var - 1.0).abs() < 0.03);
    assert!(f.critical_probability.iter().all(|&p| p == 1.0));
}

#[test]
fn symmetric_diamond_splits_criticality() {
    let net = diamond();
    let models = vec![
        ActivityDuration::Frozen { value: 0.0 },
        stochastic(1.5, 0.3),
        stochastic(1.5, 0.3),
        ActivityDuration::Frozen { value: 0.0 },
    ];
    let f = simulate(&net, &models, &SimulationConfig::new(10_000, 11, 5.0)).unwrap();
    for branch in [1, 2] {
        let p = f.critical_probability[branch];
        assert!((0.47..=0.53).contains(&p), "branch {branch}: {p}");
    }
    assert_eq!(f.critical_probability[0], 1.0);
    assert_eq!(f.critical_probability[3], 1.0);
}

#[test]
fn deterministic_diamond_criticality() {
    let models: Vec<ActivityDuration> =
        [2.0, 3.0, 5.0, 2.0].iter().map(|&value| ActivityDuration::Frozen { value }).collect();
    let f = simulate(&diamond(), &models, &SimulationConfig::new(100, 0, 9.0)).unwrap();
    assert_eq!(f.critical_probability, vec![1.0, 0.0, 1.0, 1.0]);
    assert_eq!(f.expected_completion, 9.0);
    assert_eq!(f.completion_variance, 0.0);
    assert_eq!(f.delay_probability, 0.0);
}

#[test]
fn psplib_dummies_always_critical() {
    for rel in ["psplib/j30/j301_1.sm", "psplib/j120/j120_s01.sm"] {
        let (net, base) = load_sm(&fixture(rel)).unwrap().to_network().unwrap();
        let models = priors_from_baselines(&base, 0.5).unwrap();
        let f = simulate(&net, &models, &SimulationConfig::new(5000, 4, 0.0)).unwrap();
        let last = base.len() - 1;
        assert_eq!(f.critical_probability[0], 1.0, "{rel}");
        assert_eq!(f.critical_probability[last], 1.0, "{rel}");
        assert_eq!(f.delay_probability, 1.0, "{rel}");
    }
}

#[test]
fn spread_grows_with_sigma() {
    let (net, base) = load_sm(&fixture("psplib/j60/j60_s01.sm")).unwrap().to_network().unwrap();
    let widths: Vec<f64> = [0.1, 0.3, 0.5]
        .iter()
        .map(|&s| {
            let models = priors_from_baselines(&base, s).unwrap();
            simulate(&net, &models, &SimulationConfig::new(20_000, 5, 0.0)).unwrap().ci90_width
        })
        .collect();
    assert!(widths[0] < widths[1] && widths[1] < widths[2], "{widths:?}");
}

#[test]
fn merge_bias_pushes_mean_above_deterministic_makespan() {
    let (net, base) = load_sm(&fixture("psplib/j30/j301_1.sm")).unwrap().to_network().unwrap();
    let makespan = net.compute_cpm(&base).unwrap().completion_time;
    let models = priors_from_baselines(&base, 0.3).unwrap();
    let f = simulate(&net, &models, &SimulationConfig::new(20_000, 6, makespan)).unwrap();
    assert!(f.expected_completion > makespan);
    assert!(f.delay_probability > 0.5);
    let q = |l| f.quantile(l).unwrap();
    assert!(q(0.05) <= q(0.5) && q(0.5) <= q(0.95));
    assert!((f.ci90_width - (q(0.95) - q(0.05))).abs() < 1e-12);
}
