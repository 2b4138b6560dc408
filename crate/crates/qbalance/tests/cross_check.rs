//! Cross-validates the scaled-integer balancing engine against a naive
//! floating-point transcription of the same update rules.
//!
//! Every quantity in the balancing dynamics is a dyadic rational with a
//! numerator far below 2^53, so the naive f64 version is also exact and the
//! two trajectories must agree bit for bit. The two implementations share
//! nothing: the oracle below keeps a dense weight matrix of plain f64 and
//! recomputes balances from scratch each round.

use std::sync::Arc;

use qbalance::balancing::{run_balancer, DyadicWeightState};
use qbalance::graph::Digraph;
use qbalance::rng::SeedStream;
use qbalance::schedule;

/// Dense, float-based reimplementation of the one-bit balancing round.
struct NaiveBalancer {
    graph: Arc<Digraph>,
    weights: Vec<Vec<f64>>,
    round: u64,
}

impl NaiveBalancer {
    fn new(graph: Arc<Digraph>) -> Self {
        let n = graph.node_count();
        let mut weights = vec![vec![0.0; n]; n];
        for (from, to) in graph.edges() {
            weights[to][from] = 1.0;
        }
        NaiveBalancer {
            graph,
            weights,
            round: 0,
        }
    }

    fn balance(&self, node: usize) -> f64 {
        let incoming: f64 = self.weights[node].iter().sum();
        let outgoing: f64 = self
            .graph
            .nodes()
            .map(|other| self.weights[other][node])
            .sum();
        incoming - outgoing
    }

    fn total_imbalance(&self) -> f64 {
        self.graph.nodes().map(|i| self.balance(i).abs()).sum()
    }

    fn step(&mut self) {
        let step = schedule::gamma(self.round).value();
        let fired: Vec<bool> = self
            .graph
            .nodes()
            .map(|i| self.balance(i) >= self.graph.out_degree(i) as f64 * step)
            .collect();
        for i in self.graph.nodes() {
            for &j in self.graph.in_neighbors(i) {
                if fired[j] {
                    self.weights[i][j] += step;
                }
            }
        }
        self.round += 1;
    }
}

#[test]
fn exact_engine_matches_naive_float_transcription() {
    for seed in 0..20u64 {
        for &p in &[0.2, 0.5, 0.8] {
            let graph = Arc::new(
                Digraph::ring_plus_random(6, p, &SeedStream::new(seed).child((p * 10.0) as u64))
                    .unwrap(),
            );
            let mut naive = NaiveBalancer::new(graph.clone());
            let mut state = DyadicWeightState::init(graph.clone()).unwrap();

            let mut exact_imbalance = Vec::new();
            run_balancer(&mut state, 0.0, 2_000, |record, _| {
                exact_imbalance.push(record.imbalance.value());
            })
            .unwrap();

            for (round, &expected) in exact_imbalance.iter().enumerate() {
                assert_eq!(
                    naive.total_imbalance(),
                    expected,
                    "seed {seed} p {p} round {round}"
                );
                if round + 1 < exact_imbalance.len() {
                    naive.step();
                }
            }

            // Final weight matrices agree exactly as well.
            if state.round() == 2_000 {
                let exact_matrix = state.weight_matrix();
                for i in graph.nodes() {
                    for j in graph.nodes() {
                        assert_eq!(exact_matrix[i][j], naive.weights[i][j]);
                    }
                }
            }
        }
    }
}

#[test]
fn naive_transcription_confirms_the_fixture() {
    let graph = Arc::new(Digraph::from_edges(3, &[(0, 1), (0, 2), (1, 2), (2, 0)]).unwrap());
    let mut naive = NaiveBalancer::new(graph);
    assert_eq!(naive.total_imbalance(), 2.0);
    naive.step();
    assert_eq!(naive.total_imbalance(), 0.0);
    assert_eq!(naive.weights[0][2], 2.0);
}
