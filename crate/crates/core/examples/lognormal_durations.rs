//! Mean-preserving lognormal priors around a planned duration.

use stoched::rng::{RngStream, StreamDomain};
use stoched::LognormalParams;

fn main() {
    let baseline = 10.0;
    let mut rng = RngStream::new(1, StreamDomain::Other(0), 0);
    println!("{:>5} {:>8} {:>8} {:>8} {:>8} {:>10}", "sigma", "mu", "median", "mean", "sd", "sample mean");
    for sigma in [0.1, 0.3, 0.5] {
        let p = LognormalParams::from_baseline(baseline, sigma).unwrap();
        let n = 200_000;
        let m = (0..n).map(|_| p.sample(&mut rng)).sum::<f64>() / n as f64;
        println!(
            "{sigma:>5} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {m:>10.4}",
            p.mu,
            p.median(),
            p.expected_duration(),
            p.variance().sqrt()
        );
    }
}
