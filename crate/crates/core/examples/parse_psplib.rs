//! Loads a PSPLIB single-mode file and prints its deterministic schedule.
//!
//! cargo run --example parse_psplib -- path/to/file.sm

use std::path::PathBuf;

use stoched::load_sm;

fn main() {
    let path = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/psplib/j30/j301_1.sm"));
    let inst = match load_sm(&path) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            std::process::exit(3);
        }
    };
    let (net, baseline) = inst.to_network().expect("parsed instances are acyclic");
    let cpm = net.compute_cpm(&baseline).unwrap();

    println!("{}: {} jobs ({} real), {} edges", inst.instance_name, inst.job_count, inst.real_job_count(), inst.edge_count());
    println!("resource-free makespan {}", cpm.completion_time);
    let critical: Vec<String> = (0..inst.job_count)
        .filter(|&i| cpm.critical_mask[i])
        .map(|i| (i + 1).to_string())
        .collect();
    println!("critical jobs (1-based): {}", critical.join(" "));
}
