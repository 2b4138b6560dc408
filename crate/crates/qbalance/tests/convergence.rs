//! Desk-scale consensus convergence on the plain directed ring.
//!
//! The ring is already weight-balanced, which isolates the consensus layer:
//! only dither noise and the diminishing step drive the dynamics. The
//! median over 100 seeded trials pins the expected long-run accuracy.

use std::sync::Arc;

use qbalance::consensus::{run_consensus, ConsensusState, QuantizerConfig};
use qbalance::graph::Digraph;
use qbalance::rng::SeedStream;
use qbalance::schedule::AlphaSchedule;

#[test]
fn ring_median_final_mse_is_below_one_permille() {
    let graph = Arc::new(Digraph::ring_plus_random(6, 0.0, &SeedStream::new(0)).expect("ring"));
    let mut finals = Vec::new();
    for trial_idx in 0..100u64 {
        let trial = SeedStream::new(314).child(trial_idx);
        let init = trial.child(0);
        let initial: Vec<f64> = (0..6).map(|i| init.child(i).unit_f64()).collect();
        let mut state = ConsensusState::init(
            graph.clone(),
            initial,
            QuantizerConfig::unit(),
            AlphaSchedule::harmonic(),
            trial.child(1),
        )
        .expect("uniform draws have an informative average");
        let summary = run_consensus(&mut state, 100_000, None, |_, _| {}).expect("run");
        assert!(
            summary.min_estimate.is_finite() && summary.max_estimate.is_finite(),
            "estimates stayed bounded"
        );
        finals.push(summary.final_mse);
    }
    finals.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let median = (finals[49] + finals[50]) / 2.0;
    assert!(
        median < 1e-3,
        "median final MSE {median:.3e} over 100 ring trials"
    );
}
