//! Distributed average consensus over unbalanced digraphs with two-bit
//! messages.
//!
//! Each round every node broadcasts one balancing bit plus its estimate
//! randomly rounded to one of the two quantizer endpoints (dithered, so the
//! rounded value is conditionally unbiased). Receivers diffuse the rounded
//! estimates through the current edge weights while a balance-proportional
//! correction term keeps the network-wide mean of the estimates constant,
//! so agreement can only happen at the exact initial average. Weight
//! balancing runs on the same round counter, one step per consensus step.
//!
//! Estimates are plain `f64`; the exact-integer discipline applies to the
//! balancing layer only. The run engine asserts average preservation within
//! documented floating-point tolerances every round.

use std::sync::Arc;

use crate::analysis::{self, InvariantMonitor, RoundRecord};
use crate::balancing::{DyadicWeightState, SignalVector};
use crate::error::{Error, Result};
use crate::graph::Digraph;
use crate::rng::SeedStream;
use crate::schedule::AlphaSchedule;

/// Allowed floating-point slack for the per-round sum-preservation check,
/// relative to `1 + |sum of estimates|`.
pub const SUM_PRESERVATION_TOL: f64 = 1e-10;

/// Allowed absolute drift of the running mean from the initial average over
/// a whole run, in units of the quantizer width.
pub const MEAN_DRIFT_TOL: f64 = 1e-6;

/// Quantization range `[q_min, q_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerConfig {
    q_min: f64,
    q_max: f64,
}

impl QuantizerConfig {
    pub fn new(q_min: f64, q_max: f64) -> Result<Self> {
        if q_min >= q_max || !q_min.is_finite() || !q_max.is_finite() {
            return Err(Error::QuantizerRange { q_min, q_max });
        }
        Ok(QuantizerConfig { q_min, q_max })
    }

    /// The `[0, 1]` range used by the stock experiments.
    pub fn unit() -> Self {
        QuantizerConfig {
            q_min: 0.0,
            q_max: 1.0,
        }
    }

    pub fn q_min(&self) -> f64 {
        self.q_min
    }

    pub fn q_max(&self) -> f64 {
        self.q_max
    }

    pub fn width(&self) -> f64 {
        self.q_max - self.q_min
    }

    pub fn contains(&self, value: f64) -> bool {
        (self.q_min..=self.q_max).contains(&value)
    }
}

/// What one node puts on the wire each round: the balancing bit and the
/// estimate rounded to one of the two quantizer endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoBitMessage {
    pub signal: bool,
    pub quantized_estimate: f64,
}

/// Clamps an estimate into the quantization range. Idempotent.
pub fn clip_estimate(estimate: f64, quantizer: &QuantizerConfig) -> f64 {
    estimate.max(quantizer.q_min).min(quantizer.q_max)
}

/// Randomly rounds a clipped estimate to `q_max` with probability
/// `(clipped - q_min) / (q_max - q_min)`, else to `q_min`, so the expected
/// output equals the input.
pub fn dithered_quantize(clipped: f64, quantizer: &QuantizerConfig, draw: &SeedStream) -> f64 {
    debug_assert!(
        quantizer.contains(clipped),
        "quantize expects a clipped value"
    );
    let p = (clipped - quantizer.q_min) / quantizer.width();
    if draw.bernoulli(p) {
        quantizer.q_max
    } else {
        quantizer.q_min
    }
}

/// Joint state of the consensus estimates and the balancing layer they ride
/// on.
#[derive(Debug, Clone)]
pub struct ConsensusState {
    balancer: DyadicWeightState,
    estimates: Vec<f64>,
    quantizer: QuantizerConfig,
    alpha: AlphaSchedule,
    dither: SeedStream,
    initial_average: f64,
}

impl ConsensusState {
    /// Builds the round-0 state. Rejects estimate vectors of the wrong
    /// length or with non-finite entries, graphs that are not strongly
    /// connected, and initial averages outside the quantization range (the
    /// non-informative case the algorithm excludes; individual estimates may
    /// lie outside the range freely).
    pub fn init(
        graph: Arc<Digraph>,
        initial_estimates: Vec<f64>,
        quantizer: QuantizerConfig,
        alpha: AlphaSchedule,
        dither: SeedStream,
    ) -> Result<Self> {
        if initial_estimates.len() != graph.node_count() {
            return Err(Error::EstimateLength {
                got: initial_estimates.len(),
                expected: graph.node_count(),
            });
        }
        if let Some(node) = initial_estimates.iter().position(|y| !y.is_finite()) {
            return Err(Error::EstimateNotFinite { node });
        }
        let initial_average =
            initial_estimates.iter().sum::<f64>() / initial_estimates.len() as f64;
        if !quantizer.contains(initial_average) {
            return Err(Error::NonInformativeAverage {
                average: initial_average,
                q_min: quantizer.q_min,
                q_max: quantizer.q_max,
            });
        }
        let balancer = DyadicWeightState::init(graph)?;
        Ok(ConsensusState {
            balancer,
            estimates: initial_estimates,
            quantizer,
            alpha,
            dither,
            initial_average,
        })
    }

    pub fn graph(&self) -> &Arc<Digraph> {
        self.balancer.graph()
    }

    pub fn balancer(&self) -> &DyadicWeightState {
        &self.balancer
    }

    pub fn round(&self) -> u64 {
        self.balancer.round()
    }

    pub fn estimates(&self) -> &[f64] {
        &self.estimates
    }

    pub fn quantizer(&self) -> &QuantizerConfig {
        &self.quantizer
    }

    pub fn alpha(&self) -> &AlphaSchedule {
        &self.alpha
    }

    /// The exact initial average. Recorded for metrics only; no agent reads
    /// it.
    pub fn initial_average(&self) -> f64 {
        self.initial_average
    }

    pub fn mse(&self) -> f64 {
        analysis::mse(&self.estimates, self.initial_average)
    }

    /// The messages every node broadcasts this round, derived from the
    /// round snapshot. Pure: calling it repeatedly yields the same draws.
    pub fn broadcast(&self) -> Vec<TwoBitMessage> {
        let (signals, quantized) = self.round_messages();
        signals
            .as_slice()
            .iter()
            .zip(quantized)
            .map(|(&signal, quantized_estimate)| TwoBitMessage {
                signal,
                quantized_estimate,
            })
            .collect()
    }

    fn round_messages(&self) -> (SignalVector, Vec<f64>) {
        let signals = self.balancer.compute_signals();
        let round_stream = self.dither.child(self.balancer.round());
        let quantized = self
            .graph()
            .nodes()
            .map(|i| {
                let clipped = clip_estimate(self.estimates[i], &self.quantizer);
                dithered_quantize(clipped, &self.quantizer, &round_stream.child(i as u64))
            })
            .collect();
        (signals, quantized)
    }

    /// One synchronous round: draw the messages from the round snapshot,
    /// diffuse the quantized estimates through the current weights with the
    /// balance correction, then advance the balancing layer on the same
    /// signals.
    pub fn step(&mut self) -> Result<()> {
        let (signals, quantized) = self.round_messages();
        self.apply(&signals, &quantized)
    }

    fn apply(&mut self, signals: &SignalVector, quantized: &[f64]) -> Result<()> {
        let alpha = self.alpha.value(self.balancer.round());
        let mut next = Vec::with_capacity(self.estimates.len());
        for i in self.graph().nodes() {
            let own = quantized[i];
            let mut diffusion = 0.0;
            for (j, numerator) in self.balancer.incoming_scaled(i) {
                let weight =
                    crate::balancing::scaled_to_f64(numerator, self.balancer.scale_exponent());
                diffusion += weight * (quantized[j] - own);
            }
            let correction = self.balancer.balance(i) * own;
            next.push(self.estimates[i] + alpha * (diffusion + correction));
        }
        self.estimates = next;
        self.balancer.advance(signals)
    }
}

/// View passed to the per-round observer alongside the metrics record.
#[derive(Debug)]
pub struct ConsensusRoundView<'a> {
    pub estimates: &'a [f64],
    pub messages: &'a [TwoBitMessage],
}

/// Result of a consensus run.
#[derive(Debug, Clone)]
pub struct ConsensusRunSummary {
    pub rounds: u64,
    /// True when the run stopped because the MSE tolerance was met.
    pub converged: bool,
    pub final_mse: f64,
    /// Smallest and largest estimate seen over the whole run.
    pub min_estimate: f64,
    pub max_estimate: f64,
    /// Largest observed deviation of the running mean from the initial
    /// average.
    pub max_average_drift: f64,
    pub worst_event_gap: Option<u64>,
}

/// Runs the consensus loop for `max_iters` rounds, or until the MSE drops
/// to `mse_tol` when one is given. The observer fires once per visited
/// round. Every round replays the balancing-layer invariants and checks
/// that the estimate mean stays glued to the initial average.
pub fn run_consensus(
    state: &mut ConsensusState,
    max_iters: u64,
    mse_tol: Option<f64>,
    mut observer: impl FnMut(&RoundRecord, &ConsensusRoundView),
) -> Result<ConsensusRunSummary> {
    if let Some(tol) = mse_tol {
        if tol.is_nan() || tol < 0.0 {
            return Err(Error::NegativeTolerance(tol));
        }
    }
    let n = state.graph().node_count() as f64;
    let drift_bound = MEAN_DRIFT_TOL * state.quantizer.width();
    let mut monitor = InvariantMonitor::new(state.graph().node_count());
    let mut min_estimate = f64::INFINITY;
    let mut max_estimate = f64::NEG_INFINITY;
    let mut max_average_drift = 0.0f64;
    loop {
        let round = state.round();
        if let Some(node) = state.estimates.iter().position(|y| !y.is_finite()) {
            return Err(Error::invariant(
                round,
                format!("estimate at node {node} is not finite"),
            ));
        }
        for &y in &state.estimates {
            min_estimate = min_estimate.min(y);
            max_estimate = max_estimate.max(y);
        }
        let sum: f64 = state.estimates.iter().sum();
        let drift = (sum / n - state.initial_average).abs();
        max_average_drift = max_average_drift.max(drift);
        if drift > drift_bound {
            return Err(Error::invariant(
                round,
                format!("estimate mean drifted {drift:e} from the initial average"),
            ));
        }

        let (signals, quantized) = state.round_messages();
        let mut record = analysis::balance_record(&state.balancer, &signals)?;
        let error = analysis::consensus_error(&state.estimates, state.initial_average);
        record.consensus_error = Some(error);
        record.mse = Some(error / n);
        monitor.observe(&state.balancer, &record)?;

        let messages: Vec<TwoBitMessage> = signals
            .as_slice()
            .iter()
            .zip(quantized.iter())
            .map(|(&signal, &quantized_estimate)| TwoBitMessage {
                signal,
                quantized_estimate,
            })
            .collect();
        observer(
            &record,
            &ConsensusRoundView {
                estimates: &state.estimates,
                messages: &messages,
            },
        );

        let mse_now = record.mse.expect("set above");
        let tol_met = mse_tol.is_some_and(|tol| mse_now <= tol);
        if tol_met || round >= max_iters {
            return Ok(ConsensusRunSummary {
                rounds: round,
                converged: tol_met,
                final_mse: mse_now,
                min_estimate,
                max_estimate,
                max_average_drift,
                worst_event_gap: monitor.worst_event_gap(),
            });
        }

        let sum_before: f64 = state.estimates.iter().sum();
        state.apply(&signals, &quantized)?;
        let sum_after: f64 = state.estimates.iter().sum();
        if (sum_after - sum_before).abs() > SUM_PRESERVATION_TOL * (1.0 + sum_before.abs()) {
            return Err(Error::invariant(
                round,
                format!("estimate sum moved from {sum_before} to {sum_after} in one round"),
            ));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStream;

    fn ring(n: usize) -> Arc<Digraph> {
        Arc::new(Digraph::ring_plus_random(n, 0.0, &SeedStream::new(0)).unwrap())
    }

    fn random_graph(seed: u64) -> Arc<Digraph> {
        Arc::new(Digraph::ring_plus_random(6, 0.5, &SeedStream::new(seed)).unwrap())
    }

    fn uniform_estimates(n: usize, stream: &SeedStream) -> Vec<f64> {
        (0..n).map(|i| stream.child(i as u64).unit_f64()).collect()
    }

    #[test]
    fn clip_keeps_interior_points_and_clamps_both_ends() {
        let q = QuantizerConfig::unit();
        assert_eq!(clip_estimate(0.3, &q), 0.3);
        assert_eq!(clip_estimate(-2.0, &q), 0.0);
        assert_eq!(clip_estimate(7.0, &q), 1.0);
        assert_eq!(clip_estimate(clip_estimate(7.0, &q), &q), 1.0);
    }

    #[test]
    fn quantize_is_deterministic_at_the_endpoints() {
        let q = QuantizerConfig::unit();
        for i in 0..1_000 {
            let draw = SeedStream::new(5).child(i);
            assert_eq!(dithered_quantize(0.0, &q, &draw), 0.0);
            assert_eq!(dithered_quantize(1.0, &q, &draw), 1.0);
        }
    }

    #[test]
    fn quantize_frequency_matches_the_dither_probability() {
        // 1e5 draws at p = 0.25; both the frequency of the upper endpoint
        // and the sample mean sit within 0.005 of 0.25 (about 3.7 standard
        // errors).
        let q = QuantizerConfig::unit();
        let root = SeedStream::new(99);
        let draws = 100_000u64;
        let mut upper = 0u64;
        let mut sum = 0.0;
        for i in 0..draws {
            let x = dithered_quantize(0.25, &q, &root.child(i));
            if x == 1.0 {
                upper += 1;
            }
            sum += x;
        }
        let freq = upper as f64 / draws as f64;
        let mean = sum / draws as f64;
        assert!((freq - 0.25).abs() < 0.005, "frequency {freq}");
        assert!((mean - 0.25).abs() < 0.005, "mean {mean}");
    }

    #[test]
    fn init_rejects_non_informative_average() {
        let err = ConsensusState::init(
            ring(4),
            vec![2.0, 2.0, 2.0, 2.0],
            QuantizerConfig::unit(),
            AlphaSchedule::harmonic(),
            SeedStream::new(0),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonInformativeAverage { .. }));
    }

    #[test]
    fn init_allows_estimates_outside_the_range_if_the_average_is_inside() {
        let state = ConsensusState::init(
            ring(4),
            vec![-3.0, 4.0, 0.5, 0.5],
            QuantizerConfig::unit(),
            AlphaSchedule::harmonic(),
            SeedStream::new(0),
        )
        .unwrap();
        assert_eq!(state.initial_average(), 0.5);
    }

    #[test]
    fn init_rejects_wrong_length_and_non_finite_estimates() {
        assert!(matches!(
            ConsensusState::init(
                ring(4),
                vec![0.5; 3],
                QuantizerConfig::unit(),
                AlphaSchedule::harmonic(),
                SeedStream::new(0),
            ),
            Err(Error::EstimateLength {
                got: 3,
                expected: 4
            })
        ));
        assert!(matches!(
            ConsensusState::init(
                ring(4),
                vec![0.5, f64::NAN, 0.5, 0.5],
                QuantizerConfig::unit(),
                AlphaSchedule::harmonic(),
                SeedStream::new(0),
            ),
            Err(Error::EstimateNotFinite { node: 1 })
        ));
    }

    #[test]
    fn lower_endpoint_consensus_is_a_fixed_point() {
        // All estimates at q_min: the dither is deterministic there, the
        // diffusion differences vanish, and the ring is balanced, so the
        // state never moves.
        let mut state = ConsensusState::init(
            ring(6),
            vec![0.0; 6],
            QuantizerConfig::unit(),
            AlphaSchedule::harmonic(),
            SeedStream::new(7),
        )
        .unwrap();
        for _ in 0..100 {
            state.step().unwrap();
            assert_eq!(state.estimates(), &[0.0; 6]);
        }
    }

    #[test]
    fn single_round_preserves_the_estimate_sum() {
        for seed in 0..50 {
            let graph = random_graph(seed);
            let trial = SeedStream::new(seed).child(1);
            let estimates = uniform_estimates(6, &trial.child(0));
            let mut state = ConsensusState::init(
                graph,
                estimates,
                QuantizerConfig::unit(),
                AlphaSchedule::harmonic(),
                trial.child(1),
            )
            .unwrap();
            for _ in 0..20 {
                let before: f64 = state.estimates().iter().sum();
                state.step().unwrap();
                let after: f64 = state.estimates().iter().sum();
                assert!(
                    (after - before).abs() <= SUM_PRESERVATION_TOL * (1.0 + before.abs()),
                    "sum moved from {before} to {after}"
                );
            }
        }
    }

    /// Dense one-round oracle: `y' = y - alpha * (S_plus - A) x`, with the
    /// weight matrix exported from the balancer and `S_plus` its column
    /// sums.
    fn dense_step_oracle(state: &ConsensusState, quantized: &[f64]) -> Vec<f64> {
        let n = state.graph().node_count();
        let a = state.balancer().weight_matrix();
        let alpha = state.alpha().value(state.round());
        let out_flow: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[j][i]).sum()).collect();
        (0..n)
            .map(|i| {
                let mixed: f64 = (0..n).map(|j| a[i][j] * quantized[j]).sum();
                state.estimates()[i] - alpha * (out_flow[i] * quantized[i] - mixed)
            })
            .collect()
    }

    #[test]
    fn node_wise_update_matches_the_dense_form() {
        for seed in 0..20 {
            let graph = random_graph(seed);
            let trial = SeedStream::new(1000 + seed);
            let estimates = uniform_estimates(6, &trial.child(0));
            let mut state = ConsensusState::init(
                graph,
                estimates,
                QuantizerConfig::unit(),
                AlphaSchedule::harmonic(),
                trial.child(1),
            )
            .unwrap();
            // Walk a few rounds so weights and step scale vary, comparing
            // each one.
            for _ in 0..6 {
                let quantized: Vec<f64> = state
                    .broadcast()
                    .iter()
                    .map(|m| m.quantized_estimate)
                    .collect();
                let expected = dense_step_oracle(&state, &quantized);
                state.step().unwrap();
                for (got, want) in state.estimates().iter().zip(&expected) {
                    assert!(
                        (got - want).abs() <= 1e-12,
                        "node-wise {got} vs dense {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn broadcast_is_pure_and_step_is_reproducible() {
        let graph = random_graph(3);
        let trial = SeedStream::new(77);
        let estimates = uniform_estimates(6, &trial.child(0));
        let state = ConsensusState::init(
            graph,
            estimates,
            QuantizerConfig::unit(),
            AlphaSchedule::harmonic(),
            trial.child(1),
        )
        .unwrap();
        assert_eq!(state.broadcast(), state.broadcast());
        let mut a = state.clone();
        let mut b = state;
        for _ in 0..50 {
            a.step().unwrap();
            b.step().unwrap();
            assert_eq!(a.estimates(), b.estimates());
        }
    }

    #[test]
    fn consensual_start_has_zero_mse_and_stays_on_average() {
        let mut state = ConsensusState::init(
            random_graph(9),
            vec![0.5; 6],
            QuantizerConfig::unit(),
            AlphaSchedule::harmonic(),
            SeedStream::new(4),
        )
        .unwrap();
        assert_eq!(state.mse(), 0.0);
        let summary = run_consensus(&mut state, 0, Some(0.0), |_, _| {}).unwrap();
        assert!(summary.converged);
        assert_eq!(summary.rounds, 0);
        // The mean stays at the initial average along any continued run.
        let mut state2 = ConsensusState::init(
            random_graph(9),
            vec![0.5; 6],
            QuantizerConfig::unit(),
            AlphaSchedule::harmonic(),
            SeedStream::new(4),
        )
        .unwrap();
        let summary2 = run_consensus(&mut state2, 2_000, None, |_, _| {}).unwrap();
        assert!(summary2.max_average_drift <= MEAN_DRIFT_TOL);
    }

    #[test]
    fn run_reports_round_records_with_mse() {
        let trial = SeedStream::new(11);
        let mut state = ConsensusState::init(
            random_graph(2),
            uniform_estimates(6, &trial.child(0)),
            QuantizerConfig::unit(),
            AlphaSchedule::harmonic(),
            trial.child(1),
        )
        .unwrap();
        let mut rounds_seen = 0u64;
        let summary = run_consensus(&mut state, 100, None, |record, view| {
            assert_eq!(record.round, rounds_seen);
            assert!(record.mse.is_some());
            assert!(record.consensus_error.is_some());
            assert_eq!(view.estimates.len(), 6);
            assert_eq!(view.messages.len(), 6);
            for message in view.messages {
                assert!(message.quantized_estimate == 0.0 || message.quantized_estimate == 1.0);
            }
            rounds_seen += 1;
        })
        .unwrap();
        assert_eq!(summary.rounds, 100);
        assert_eq!(rounds_seen, 101);
        assert!(summary.min_estimate.is_finite() && summary.max_estimate.is_finite());
    }
}
