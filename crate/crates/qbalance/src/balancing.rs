//! Distributed one-bit weight-balancing.
//!
//! Each agent compares its balance (incoming minus outgoing weight sum)
//! against `out_degree * step` and broadcasts the resulting bit to its
//! out-neighbors; receivers raise the weight of the corresponding incoming
//! edge by one step. All rounds are synchronous: every update reads the
//! round-k snapshot.
//!
//! All weights and balances are stored as integers scaled by `2^scale_exp`,
//! where `scale_exp` is the exponent of the current dyadic step. The step
//! halves exactly when the round counter crosses a power of two, at which
//! point every numerator is doubled. Arithmetic on the scaled integers is
//! exact, so threshold tests, conservation, and per-round decrements can be
//! checked without tolerances.

use std::sync::Arc;

use crate::analysis::{self, InvariantMonitor, RoundRecord};
use crate::error::{Error, Result};
use crate::graph::Digraph;
use crate::schedule;

/// One-bit signals, one per node, for a single round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignalVector {
    bits: Vec<bool>,
}

impl SignalVector {
    pub fn bit(&self, node: usize) -> bool {
        self.bits[node]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    /// Number of nodes whose signal fired this round.
    pub fn fired(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Exact edge-weight and balance state of the balancing algorithm.
///
/// Invariants maintained by every operation:
/// - `weights[i][idx]` is the numerator of the weight on the incoming edge
///   `(in_neighbors(i)[idx], i)`, in units of `2^(-scale_exp)`; weights exist
///   only for graph edges and never decrease.
/// - `balances[i] * 2^(-scale_exp)` equals incoming minus outgoing weight
///   sum at node `i`, exactly.
/// - `scale_exp` equals the dyadic-step exponent of `round`, so every
///   balance is an integer multiple of the current step by construction.
/// - balances sum to zero: updates transfer balance, never create it.
#[derive(Debug, Clone)]
pub struct DyadicWeightState {
    graph: Arc<Digraph>,
    scale_exp: u32,
    weights: Vec<Vec<i64>>,
    balances: Vec<i64>,
    round: u64,
}

impl DyadicWeightState {
    /// Initial state: every existing edge starts with weight 1, so node
    /// balances start at `in_degree - out_degree`. Rejects graphs that are
    /// not strongly connected.
    pub fn init(graph: Arc<Digraph>) -> Result<Self> {
        if !graph.is_strongly_connected() {
            return Err(Error::NotStronglyConnected);
        }
        let weights = graph
            .nodes()
            .map(|i| vec![1i64; graph.in_degree(i)])
            .collect();
        let balances = graph
            .nodes()
            .map(|i| graph.in_degree(i) as i64 - graph.out_degree(i) as i64)
            .collect();
        Ok(DyadicWeightState {
            graph,
            scale_exp: 0,
            weights,
            balances,
            round: 0,
        })
    }

    pub fn graph(&self) -> &Arc<Digraph> {
        &self.graph
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    /// Exponent of the current step; all scaled integers are in units of
    /// `2^(-scale_exponent())`.
    pub fn scale_exponent(&self) -> u32 {
        self.scale_exp
    }

    pub fn step_value(&self) -> f64 {
        schedule::gamma(self.round).value()
    }

    pub fn balance_scaled(&self, node: usize) -> i64 {
        self.balances[node]
    }

    pub fn balances_scaled(&self) -> &[i64] {
        &self.balances
    }

    pub fn balance(&self, node: usize) -> f64 {
        scaled_to_f64(self.balances[node], self.scale_exp)
    }

    /// Incoming edge weights of `node` as `(from, numerator)` pairs.
    pub fn incoming_scaled(&self, node: usize) -> impl Iterator<Item = (usize, i64)> + '_ {
        self.graph
            .in_neighbors(node)
            .iter()
            .copied()
            .zip(self.weights[node].iter().copied())
    }

    /// The weight on edge `(from, to)`, or 0 when the edge does not exist.
    pub fn weight(&self, from: usize, to: usize) -> f64 {
        match self.graph.in_neighbors(to).binary_search(&from) {
            Ok(idx) => scaled_to_f64(self.weights[to][idx], self.scale_exp),
            Err(_) => 0.0,
        }
    }

    /// Dense weight matrix; entry `[i][j]` is the weight of edge `(j, i)`.
    pub fn weight_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.graph.node_count();
        let mut matrix = vec![vec![0.0; n]; n];
        for i in self.graph.nodes() {
            for (j, numerator) in self.incoming_scaled(i) {
                matrix[i][j] = scaled_to_f64(numerator, self.scale_exp);
            }
        }
        matrix
    }

    /// Weight matrix rendered exactly, one row per line, entries as
    /// `numerator/2^exponent`.
    pub fn weight_matrix_exact(&self) -> String {
        let n = self.graph.node_count();
        let mut rows = Vec::with_capacity(n);
        for i in self.graph.nodes() {
            let mut entries = vec![format!("0/2^{}", self.scale_exp); n];
            for (j, numerator) in self.incoming_scaled(i) {
                entries[j] = format!("{numerator}/2^{}", self.scale_exp);
            }
            rows.push(entries.join(" "));
        }
        rows.join("\n")
    }

    /// Total outgoing weight of `node` in scaled units.
    pub fn out_flow_scaled(&self, node: usize) -> i64 {
        self.graph
            .out_neighbors(node)
            .iter()
            .map(|&j| {
                let idx = self
                    .graph
                    .in_neighbors(j)
                    .binary_search(&node)
                    .expect("adjacency duality: out-neighbor lists mirror in-neighbor lists");
                self.weights[j][idx]
            })
            .sum()
    }

    /// Total incoming weight of `node` in scaled units.
    pub fn in_flow_scaled(&self, node: usize) -> i64 {
        self.weights[node].iter().sum()
    }

    /// True when the incrementally tracked balances equal the balances
    /// recomputed from the weight matrix.
    pub fn reconcile_balances(&self) -> bool {
        self.graph
            .nodes()
            .all(|i| self.in_flow_scaled(i) - self.out_flow_scaled(i) == self.balances[i])
    }

    /// The one-bit broadcast for the current round: node `i` fires when its
    /// balance is at least `out_degree(i)` times the current step. On scaled
    /// integers that is exactly `balances[i] >= out_degree(i)`.
    pub fn compute_signals(&self) -> SignalVector {
        SignalVector {
            bits: self
                .graph
                .nodes()
                .map(|i| self.balances[i] >= self.graph.out_degree(i) as i64)
                .collect(),
        }
    }

    /// Advances one synchronous round using the given round snapshot
    /// signals. Callers other than the run engines should use [`Self::step`].
    pub(crate) fn advance(&mut self, signals: &SignalVector) -> Result<()> {
        debug_assert_eq!(signals, &self.compute_signals(), "stale signal snapshot");
        let round = self.round;
        let overflow = |_| Error::Overflow { round };

        // Raise each incoming weight by one step per fired in-neighbor.
        for i in self.graph.nodes() {
            for (idx, &j) in self.graph.in_neighbors(i).iter().enumerate() {
                if signals.bit(j) {
                    self.weights[i][idx] = self.weights[i][idx]
                        .checked_add(1)
                        .ok_or(())
                        .map_err(overflow)?;
                }
            }
        }
        // A firing node sheds one step per out-edge; every fired in-neighbor
        // contributes one step. Each node uses only its own degree and the
        // received bits.
        for i in self.graph.nodes() {
            let shed = if signals.bit(i) {
                self.graph.out_degree(i) as i64
            } else {
                0
            };
            let received = self
                .graph
                .in_neighbors(i)
                .iter()
                .filter(|&&j| signals.bit(j))
                .count() as i64;
            self.balances[i] = self.balances[i]
                .checked_sub(shed)
                .and_then(|b| b.checked_add(received))
                .ok_or(())
                .map_err(overflow)?;
        }
        self.round += 1;

        // When the step halves at the new round, double every numerator so
        // the represented real values are unchanged.
        let next_exp = schedule::gamma(self.round).exponent();
        if next_exp > self.scale_exp {
            debug_assert_eq!(
                next_exp,
                self.scale_exp + 1,
                "step halves one level at a time"
            );
            for row in &mut self.weights {
                for w in row {
                    *w = w.checked_mul(2).ok_or(()).map_err(overflow)?;
                }
            }
            for b in &mut self.balances {
                *b = b.checked_mul(2).ok_or(()).map_err(overflow)?;
            }
            self.scale_exp = next_exp;
        }

        debug_assert_eq!(self.balances.iter().sum::<i64>(), 0, "balance conservation");
        debug_assert!(self.reconcile_balances(), "weight/balance reconciliation");
        Ok(())
    }

    /// One synchronous round: broadcast signals, update weights and
    /// balances, advance the round counter, rescale if the step halves.
    pub fn step(&mut self) -> Result<SignalVector> {
        let signals = self.compute_signals();
        self.advance(&signals)?;
        Ok(signals)
    }

    #[cfg(test)]
    pub(crate) fn weights_mut(&mut self) -> &mut Vec<Vec<i64>> {
        &mut self.weights
    }

    #[cfg(test)]
    pub(crate) fn raw_parts(
        graph: Arc<Digraph>,
        scale_exp: u32,
        weights: Vec<Vec<i64>>,
        balances: Vec<i64>,
        round: u64,
    ) -> Self {
        DyadicWeightState {
            graph,
            scale_exp,
            weights,
            balances,
            round,
        }
    }
}

pub(crate) fn scaled_to_f64(numerator: i64, exponent: u32) -> f64 {
    numerator as f64 * (0.5f64).powi(exponent as i32)
}

/// Result of a balancing run.
#[derive(Debug, Clone)]
pub struct BalanceRunSummary {
    /// Round at which the run stopped.
    pub rounds: u64,
    /// Whether the stopping condition was the tolerance (as opposed to the
    /// iteration cap).
    pub converged: bool,
    /// Final total imbalance.
    pub final_imbalance: analysis::Dyadic,
    /// Largest observed delay between the total imbalance crossing its
    /// threshold and the next imbalance-reducing round.
    pub worst_event_gap: Option<u64>,
}

/// Runs the balancing loop until the total imbalance drops to `tol` or
/// `max_iters` rounds have executed, whichever comes first. The observer is
/// invoked once per visited round, including the stopping round. Every round
/// is also replayed through the invariant monitor; a violation aborts the
/// run.
pub fn run_balancer(
    state: &mut DyadicWeightState,
    tol: f64,
    max_iters: u64,
    mut observer: impl FnMut(&RoundRecord, &SignalVector),
) -> Result<BalanceRunSummary> {
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::NegativeTolerance(tol));
    }
    let mut monitor = InvariantMonitor::new(state.graph().node_count());
    loop {
        let signals = state.compute_signals();
        let record = analysis::balance_record(state, &signals)?;
        monitor.observe(state, &record)?;
        observer(&record, &signals);
        if record.imbalance.value() <= tol {
            return Ok(BalanceRunSummary {
                rounds: state.round(),
                converged: true,
                final_imbalance: record.imbalance,
                worst_event_gap: monitor.worst_event_gap(),
            });
        }
        if state.round() >= max_iters {
            return Ok(BalanceRunSummary {
                rounds: state.round(),
                converged: false,
                final_imbalance: record.imbalance,
                worst_event_gap: monitor.worst_event_gap(),
            });
        }
        state.advance(&signals)?;
    }
}
