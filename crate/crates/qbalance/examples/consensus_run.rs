//! One two-bit consensus run on an unbalanced random digraph.
//!
//!     cargo run -p qbalance --example consensus_run
//!
//! Six nodes start from i.i.d. uniform estimates. Each round every node
//! broadcasts one balancing bit plus its estimate dithered to {0, 1}; the
//! estimates contract toward the exact initial average while the mean
//! never moves. MSE milestones are printed at powers of ten.

use std::sync::Arc;

use qbalance::consensus::{run_consensus, ConsensusState, QuantizerConfig};
use qbalance::graph::Digraph;
use qbalance::rng::SeedStream;
use qbalance::schedule::AlphaSchedule;

fn main() {
    let graph =
        Arc::new(Digraph::ring_plus_random(6, 0.5, &SeedStream::new(11)).expect("generator"));
    let trial = SeedStream::new(2024);
    let init = trial.child(0);
    let initial: Vec<f64> = (0..6).map(|i| init.child(i).unit_f64()).collect();
    println!("initial estimates: {initial:?}");

    let mut state = ConsensusState::init(
        graph,
        initial,
        QuantizerConfig::unit(),
        AlphaSchedule::harmonic(),
        trial.child(1),
    )
    .expect("informative initial average");
    println!(
        "initial average (the consensus target): {}",
        state.initial_average()
    );

    let mut milestone = 1u64;
    let summary = run_consensus(&mut state, 100_000, None, |record, view| {
        if record.round == 0 || record.round == milestone {
            println!(
                "k={:<6} mse {: <12.6e} estimates {:?}",
                record.round,
                record.mse.expect("consensus record"),
                view.estimates
                    .iter()
                    .map(|y| format!("{y:.4}"))
                    .collect::<Vec<_>>(),
            );
            milestone *= 10;
        }
    })
    .expect("run completes");

    println!(
        "final mse {:.3e}; estimates stayed within [{:.4}, {:.4}]; \
         mean never drifted more than {:.2e} from the target",
        summary.final_mse, summary.min_estimate, summary.max_estimate, summary.max_average_drift,
    );
}
