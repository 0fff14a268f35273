//! Recursive MAP updating of one activity from noisy progress reports.

use stoched::{map_update, ActivityId, LognormalParams, ObservationRecord, PosteriorState};

fn main() {
    let id = ActivityId(0);
    let prior = LognormalParams::from_baseline(10.0, 0.3).unwrap();
    let mut state = PosteriorState::from_prior(id, prior, 0.5, 0.5);
    println!("prior      mean {:.3}  sigma {:.3}", state.expected_duration(), state.params.sigma);

    // The activity is actually running long, around 14.
    for (k, value) in [13.1, 14.6, 13.9, 14.4, 14.0].into_iter().enumerate() {
        let obs = ObservationRecord::new(id, value, 0.5).unwrap();
        state = map_update(&state, &[obs]).unwrap();
        println!(
            "after {}    mean {:.3}  sigma {:.3}  (observed {value})",
            k + 1,
            state.expected_duration(),
            state.params.sigma
        );
    }
}
