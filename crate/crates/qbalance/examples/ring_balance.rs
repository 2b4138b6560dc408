//! Weight-balancing on generated digraphs.
//!
//!     cargo run -p qbalance --example ring_balance
//!
//! The plain directed ring is already weight-balanced (every node has one
//! incoming and one outgoing unit edge), so the run stops at round 0. A
//! ring plus random edges starts unbalanced; the run shows the total
//! imbalance decaying and reports the exact final weight matrix.

use std::sync::Arc;

use qbalance::balancing::{run_balancer, DyadicWeightState};
use qbalance::graph::Digraph;
use qbalance::rng::SeedStream;

fn main() {
    // A ring: balanced from the start.
    let ring = Arc::new(Digraph::ring_plus_random(6, 0.0, &SeedStream::new(0)).expect("ring"));
    let mut state = DyadicWeightState::init(ring).expect("strongly connected");
    let summary = run_balancer(&mut state, 0.0, 1_000, |_, _| {}).expect("run");
    println!(
        "6-ring: stopped at round {} with imbalance {}",
        summary.rounds,
        summary.final_imbalance.value()
    );

    // A denser random digraph: watch the imbalance drain.
    let graph =
        Arc::new(Digraph::ring_plus_random(6, 0.5, &SeedStream::new(7)).expect("generator"));
    println!(
        "\nring plus random edges (seed 7): {} edges, in/out degrees {:?}",
        graph.edge_count(),
        graph
            .nodes()
            .map(|i| (graph.in_degree(i), graph.out_degree(i)))
            .collect::<Vec<_>>(),
    );
    let mut state = DyadicWeightState::init(graph).expect("strongly connected");
    let mut next_print = 1u64;
    let summary = run_balancer(&mut state, 0.0, 100_000, |record, _| {
        if record.round == 0 || record.round == next_print {
            println!(
                "k={:<6} imbalance {:<12} (= {} units of 2^-{})",
                record.round,
                record.imbalance.value(),
                record.imbalance.numerator,
                record.gamma_exponent,
            );
            next_print = (next_print * 4).max(1);
        }
    })
    .expect("run");
    println!(
        "stopped at round {} ({})",
        summary.rounds,
        if summary.converged {
            "exactly balanced"
        } else {
            "round cap reached"
        },
    );
    if let Some(gap) = summary.worst_event_gap {
        println!("worst gap between a large imbalance and the next decreasing event: {gap} rounds");
    }
    println!(
        "\nfinal weights, exact numerators in units of 2^-{}:",
        state.scale_exponent()
    );
    println!("{}", state.weight_matrix_exact());
}
