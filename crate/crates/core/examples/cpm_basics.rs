//! Critical path of a small hand-built network.

use stoched::ProjectNetwork;

fn main() {
    // 0 -> {1, 2} -> 3 -> 4, and 1 -> 4
    let edges = [(0, 1), (0, 2), (1, 3), (2, 3), (3, 4), (1, 4)];
    let durations = [2.0, 3.0, 5.0, 2.0, 4.0];
    let net = ProjectNetwork::new(5, &edges).expect("acyclic");
    let cpm = net.compute_cpm(&durations).expect("valid durations");

    println!("completion time {}", cpm.completion_time);
    println!("{:>3} {:>5} {:>5} {:>5} {:>5} {:>5}  critical", "id", "dur", "ES", "EF", "LS", "float");
    for i in 0..durations.len() {
        println!(
            "{:>3} {:>5} {:>5} {:>5} {:>5} {:>5}  {}",
            i,
            durations[i],
            cpm.earliest_start[i],
            cpm.earliest_finish[i],
            cpm.latest_start[i],
            cpm.total_float[i],
            cpm.critical_mask[i]
        );
    }

    let paths = net.enumerate_paths(100).expect("few paths");
    for p in paths {
        let ids: Vec<String> = p.iter().map(|a| a.index().to_string()).collect();
        let len: f64 = p.iter().map(|a| durations[a.index()]).sum();
        println!("path {} length {len}", ids.join(" -> "));
    }
}
