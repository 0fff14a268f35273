mod common;

use common::{dag_with_durations, longest_path};
use proptest::prelude::*;
use stoched::duration::{ActivityDuration, LognormalParams};
use stoched::network::{float_epsilon, CpmScratch};
use stoched::rng::{RngStream, StreamDomain};
use stoched::ProjectNetwork;

fn path_max(net: &ProjectNetwork, d: &[f64]) -> f64 {
    net.enumerate_paths(100_000)
        .unwrap()
        .iter()
        .map(|p| p.iter().map(|a| d[a.index()]).sum::<f64>())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn completion_time_is_longest_path((n, edges, d) in dag_with_durations(12)) {
        let net = ProjectNetwork::new(n, &edges).unwrap();
        let cpm = net.compute_cpm(&d).unwrap();
        prop_assert_eq!(cpm.completion_time, path_max(&net, &d));
        prop_assert_eq!(cpm.completion_time, longest_path(n, &edges, &d));
    }

    #[test]
    fn schedule_identities((n, edges, d) in dag_with_durations(12)) {
        let net = ProjectNetwork::new(n, &edges).unwrap();
        let cpm = net.compute_cpm(&d).unwrap();
        let eps = float_epsilon(cpm.completion_time);
        for i in 0..n {
            prop_assert_eq!(cpm.earliest_finish[i], cpm.earliest_start[i] + d[i]);
            prop_assert!(cpm.total_float[i] >= -eps);
            prop_assert!(cpm.latest_finish[i] <= cpm.completion_time + eps);
        }
        for &(a, b) in &edges {
            prop_assert!(cpm.earliest_start[b] >= cpm.earliest_finish[a]);
            prop_assert!(cpm.latest_finish[a] <= cpm.latest_start[b] + eps);
        }
        // some critical activity always starts at zero and some finishes at T
        prop_assert!((0..n).any(|i| cpm.critical_mask[i] && cpm.earliest_start[i] == 0.0));
        prop_assert!((0..n).any(|i| cpm.critical_mask[i] && cpm.earliest_finish[i] == cpm.completion_time));
    }

    #[test]
    fn monotone_in_each_duration((n, edges, d) in dag_with_durations(12), pick in 0usize..12, bump in 0.0f64..10.0) {
        let net = ProjectNetwork::new(n, &edges).unwrap();
        let before = net.compute_cpm(&d).unwrap().completion_time;
        let mut d2 = d.clone();
        d2[pick % n] += bump;
        prop_assert!(net.compute_cpm(&d2).unwrap().completion_time >= before);
    }

    #[test]
    fn chain_shift(len in 1usize..30, base in prop::collection::vec(0u32..50, 30), c in 0u32..10) {
        let edges: Vec<(usize, usize)> = (1..len).map(|i| (i - 1, i)).collect();
        let net = ProjectNetwork::new(len, &edges).unwrap();
        let d: Vec<f64> = base[..len].iter().map(|&x| f64::from(x)).collect();
        let shifted: Vec<f64> = d.iter().map(|x| x + f64::from(c)).collect();
        let t0 = net.compute_cpm(&d).unwrap().completion_time;
        let t1 = net.compute_cpm(&shifted).unwrap().completion_time;
        prop_assert_eq!(t1 - t0, len as f64 * f64::from(c));
    }

    #[test]
    fn sampled_replicates_agree_with_paths((n, edges, d) in dag_with_durations(12), seed: u64) {
        let net = ProjectNetwork::new(n, &edges).unwrap();
        let models: Vec<ActivityDuration> = d
            .iter()
            .map(|&x| ActivityDuration::Stochastic(LognormalParams::from_baseline(x + 1.0, 0.4).unwrap()))
            .collect();
        let mut scratch = CpmScratch::new(n);
        let mut stream = RngStream::new(seed, StreamDomain::Other(1), 0);
        for _ in 0..20 {
            let sample: Vec<f64> = models.iter().map(|m| m.sample(&mut stream)).collect();
            let fast = net.completion_time_with(&sample, &mut scratch);
            let oracle = path_max(&net, &sample);
            prop_assert!((fast - oracle).abs() <= 1e-12 * oracle.max(1.0));
        }
    }
}
