//! Compares forecasting methods and update cadences on one instance,
//! printing median RMSE and 90% interval width per cell.

use std::path::PathBuf;

use stoched::experiment::{run_matrix, summarize, write_csv, ExperimentGrid, PreparedInstance, Uncertainty};
use stoched::load_sm;

fn main() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/psplib/j30/j301_1.sm");
    let inst = load_sm(&path).unwrap();
    let (network, baseline) = inst.to_network().unwrap();
    let instances = [PreparedInstance { name: inst.instance_name, network, baseline }];
    let grid = ExperimentGrid {
        uncertainties: vec![Uncertainty::Moderate],
        replicate_count: 5_000,
        ..ExperimentGrid::default()
    };
    let seeds: Vec<u64> = (0..5).collect();
    let rows = run_matrix(&instances, &grid, &seeds).unwrap();

    println!("{:<12} {:<22} {:>10} {:>10}", "strategy", "method", "rmse", "ci90");
    for s in summarize(&rows) {
        println!("{:<12} {:<22} {:>10.3} {:>10.3}", s.strategy.as_str(), s.method.as_str(), s.median_rmse, s.median_ci90);
    }

    if std::env::args().any(|a| a == "--csv") {
        write_csv(&rows, std::io::stdout().lock()).unwrap();
    }
}
