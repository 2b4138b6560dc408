//! Round-by-round walkthrough of the one-bit balancing algorithm on a
//! 3-node digraph small enough to verify by hand.
//!
//!     cargo run -p qbalance --example three_node_walkthrough
//!
//! The graph has edges 0->1, 0->2, 1->2, 2->0, so node 0 starts with
//! balance -1 (one incoming, two outgoing unit weights), node 2 with +1.
//! Node 2 fires its one-bit signal in round 0, the transfer lands on the
//! deficit at node 0, and the graph is weight-balanced after one round.

use std::sync::Arc;

use qbalance::analysis::{detect_decreasing_event, level_partition, potential, total_imbalance};
use qbalance::balancing::{run_balancer, DyadicWeightState};
use qbalance::graph::Digraph;

fn main() {
    let graph = Arc::new(
        Digraph::from_edges(3, &[(0, 1), (0, 2), (1, 2), (2, 0)]).expect("valid edge list"),
    );
    println!("edges: {:?}", graph.edges().collect::<Vec<_>>());
    println!(
        "out-degrees: {:?}, in-degrees: {:?}",
        graph
            .nodes()
            .map(|i| graph.out_degree(i))
            .collect::<Vec<_>>(),
        graph
            .nodes()
            .map(|i| graph.in_degree(i))
            .collect::<Vec<_>>(),
    );

    let mut state = DyadicWeightState::init(graph.clone()).expect("strongly connected");
    println!("initial balances: {:?}", state.balances_scaled());

    // Inspect round 0 by hand before running the engine.
    let signals = state.compute_signals();
    println!("round 0 signals: {:?}", signals.as_slice());
    println!(
        "round 0 decreasing event: {}",
        detect_decreasing_event(&state, &signals)
    );
    let partition = level_partition(&state);
    println!(
        "round 0 levels (distance to a deficit node): {:?}, potential: {}",
        partition.levels(),
        potential(&state, &partition).expect("deficit exists"),
    );

    let summary = run_balancer(&mut state, 0.0, 100, |record, signals| {
        println!(
            "k={}: imbalance {} = {} (step 2^-{}), signals fired {}, event {}",
            record.round,
            record.imbalance.numerator,
            record.imbalance.value(),
            record.gamma_exponent,
            signals.fired(),
            record.decreasing_event,
        );
    })
    .expect("run completes");

    println!(
        "balanced after {} round(s); final imbalance {}",
        summary.rounds,
        summary.final_imbalance.value()
    );
    println!("final weights (row i lists weights of edges into i):");
    println!("{}", state.weight_matrix_exact());
    assert!(total_imbalance(&state).is_zero());
}
