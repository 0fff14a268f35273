//! Monte Carlo completion forecast with delay probability, criticality
//! and a text histogram.

use std::path::PathBuf;

use stoched::duration::priors_from_baselines;
use stoched::metrics::histogram;
use stoched::{load_sm, simulate, SimulationConfig};

fn main() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/psplib/j30/j301_1.sm");
    let (net, baseline) = load_sm(&path).unwrap().to_network().unwrap();
    let plan = net.compute_cpm(&baseline).unwrap().completion_time;
    let models = priors_from_baselines(&baseline, 0.3).unwrap();

    let mut cfg = SimulationConfig::new(20_000, 42, 1.1 * plan);
    cfg.store_samples = true;
    let f = simulate(&net, &models, &cfg).unwrap();

    println!("plan {plan}, E[T] {:.2}, sd {:.2}", f.expected_completion, f.completion_sd());
    println!("P(T > {:.1}) = {:.3}", cfg.target_completion, f.delay_probability);
    for q in &f.quantiles {
        println!("q{:<5} {:.2}", q.level, q.value);
    }

    let mut crit: Vec<(usize, f64)> = f.critical_probability.iter().copied().enumerate().collect();
    crit.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!("most critical jobs:");
    for (i, p) in crit.iter().filter(|(i, _)| baseline[*i] > 0.0).take(8) {
        println!("  job {:>2}  {:.3}", i + 1, p);
    }

    let bins = histogram(f.available_samples());
    let peak = bins.iter().map(|b| b.count).max().unwrap_or(1);
    for b in bins.iter().step_by((bins.len() / 25).max(1)) {
        let bar = "#".repeat((50 * b.count / peak) as usize);
        println!("{:>7.2} {bar}", b.bin_left);
    }
}
