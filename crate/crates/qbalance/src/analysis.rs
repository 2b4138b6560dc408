//! Metrics and run diagnostics.
//!
//! Everything here reads engine snapshots; nothing feeds back into the
//! protocol. The [`InvariantMonitor`] replays, on every round of every run,
//! the exact structural facts the algorithm's convergence argument rests on:
//! the total imbalance only ever drops on transfer-to-negative rounds and
//! then by at least two steps, the sign partition of balances is frozen on
//! all other rounds, and a positional potential over the balance levels
//! strictly increases while the imbalance is large, forcing the next drop
//! within a bounded number of rounds.

use crate::balancing::{DyadicWeightState, SignalVector};
use crate::error::{Error, Result};

/// An exact non-negative dyadic value `numerator * 2^(-exponent)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dyadic {
    pub numerator: u64,
    pub exponent: u32,
}

impl Dyadic {
    pub fn value(&self) -> f64 {
        self.numerator as f64 * (0.5f64).powi(self.exponent as i32)
    }

    pub fn is_zero(&self) -> bool {
        self.numerator == 0
    }
}

/// Per-round metrics snapshot emitted to observers and exporters.
#[derive(Debug, Clone)]
pub struct RoundRecord {
    pub round: u64,
    pub gamma_exponent: u32,
    /// Total imbalance, exact.
    pub imbalance: Dyadic,
    /// Whether some firing node has an out-neighbor with negative balance
    /// this round (the only mechanism by which total imbalance drops).
    pub decreasing_event: bool,
    /// Positional potential over positive balances; `None` when no node has
    /// negative balance (the potential is undefined there).
    pub potential: Option<u128>,
    /// Mean squared deviation from the initial average (consensus runs only).
    pub mse: Option<f64>,
    /// Squared consensus error `sum_i (y_i - y_bar)^2` (consensus runs only).
    pub consensus_error: Option<f64>,
    /// Count of nodes whose one-bit signal fired.
    pub signals_fired: usize,
}

/// Total imbalance `sum_i |b_i|` in exact scaled integers.
pub fn total_imbalance(state: &DyadicWeightState) -> Dyadic {
    let sum: u128 = state
        .balances_scaled()
        .iter()
        .map(|&b| b.unsigned_abs() as u128)
        .sum();
    Dyadic {
        numerator: u64::try_from(sum).expect("total imbalance fits in 64 bits"),
        exponent: state.scale_exponent(),
    }
}

/// True when some node with a firing signal has an out-neighbor with
/// negative balance: the configuration that transfers positive balance onto
/// a deficit and thereby shrinks the total imbalance.
pub fn detect_decreasing_event(state: &DyadicWeightState, signals: &SignalVector) -> bool {
    let graph = state.graph();
    graph.nodes().any(|i| {
        signals.bit(i)
            && graph
                .out_neighbors(i)
                .iter()
                .any(|&j| state.balance_scaled(j) < 0)
    })
}

/// Partition of the nodes by balance sign, with the non-negative side
/// further layered by directed distance to the nearest negative-balance
/// node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelPartition {
    v_plus: Vec<usize>,
    v_minus: Vec<usize>,
    /// `levels[d - 1]` holds the nodes of `v_plus` whose nearest
    /// negative-balance node is exactly `d` directed hops away.
    levels: Vec<Vec<usize>>,
}

impl LevelPartition {
    pub fn v_plus(&self) -> &[usize] {
        &self.v_plus
    }

    pub fn v_minus(&self) -> &[usize] {
        &self.v_minus
    }

    pub fn levels(&self) -> &[Vec<usize>] {
        &self.levels
    }

    pub fn level(&self, depth: usize) -> &[usize] {
        &self.levels[depth - 1]
    }

    /// Largest populated level depth; `None` when there are no negative
    /// balances (all levels empty).
    pub fn n_max(&self) -> Option<usize> {
        if self.levels.is_empty() {
            None
        } else {
            Some(self.levels.len())
        }
    }
}

/// Computes the sign partition and distance levels from exact balances.
pub fn level_partition(state: &DyadicWeightState) -> LevelPartition {
    let graph = state.graph();
    let v_plus: Vec<usize> = graph
        .nodes()
        .filter(|&i| state.balance_scaled(i) >= 0)
        .collect();
    let v_minus: Vec<usize> = graph
        .nodes()
        .filter(|&i| state.balance_scaled(i) < 0)
        .collect();
    let mut levels: Vec<Vec<usize>> = Vec::new();
    if !v_minus.is_empty() {
        for &i in &v_plus {
            let nearest = v_minus.iter().filter_map(|&j| graph.distance(i, j)).min();
            if let Some(depth) = nearest {
                let depth = depth as usize;
                debug_assert!(depth >= 1, "sign sets are disjoint");
                if levels.len() < depth {
                    levels.resize_with(depth, Vec::new);
                }
                levels[depth - 1].push(i);
            }
        }
        while levels.last().is_some_and(Vec::is_empty) {
            levels.pop();
        }
    }
    LevelPartition {
        v_plus,
        v_minus,
        levels,
    }
}

/// The positional potential over positive balances.
///
/// Each level contributes a digit `sum_i min(b_i / step, out_degree(i))`,
/// where the normalized balance `b_i / step` is exactly the stored scaled
/// integer; integrality is structural, not checked. Digits closer to the
/// negative side are more significant: the weight of level `n` is the
/// product of the bases `1 + sum out_degree` over all deeper levels.
///
/// Undefined (and rejected) when no node has negative balance.
pub fn potential(state: &DyadicWeightState, partition: &LevelPartition) -> Result<u128> {
    if partition.v_minus().is_empty() {
        return Err(Error::PotentialUndefined);
    }
    let graph = state.graph();
    let overflow = |_| Error::Overflow {
        round: state.round(),
    };
    let mut level_weight: u128 = 1;
    let mut total: u128 = 0;
    for level in partition.levels().iter().rev() {
        let digit: u128 = level
            .iter()
            .map(|&i| state.balance_scaled(i).min(graph.out_degree(i) as i64) as u128)
            .sum();
        total = digit
            .checked_mul(level_weight)
            .and_then(|term| total.checked_add(term))
            .ok_or(())
            .map_err(overflow)?;
        let base: u128 = 1 + level
            .iter()
            .map(|&i| graph.out_degree(i) as u128)
            .sum::<u128>();
        level_weight = level_weight.checked_mul(base).ok_or(()).map_err(overflow)?;
    }
    Ok(total)
}

/// `node_count^(2 * node_count)`, the a-priori ceiling on the potential;
/// `None` when it exceeds 128 bits (any representable potential is then
/// trivially below it).
pub fn potential_ceiling(node_count: usize) -> Option<u128> {
    let base = node_count as u128;
    let mut out: u128 = 1;
    for _ in 0..2 * node_count {
        out = out.checked_mul(base)?;
    }
    Some(out)
}

/// Mean squared deviation of the estimates from the initial average.
pub fn mse(estimates: &[f64], initial_average: f64) -> f64 {
    consensus_error(estimates, initial_average) / estimates.len() as f64
}

/// Squared consensus error `sum_i (y_i - y_bar)^2`.
pub fn consensus_error(estimates: &[f64], initial_average: f64) -> f64 {
    estimates
        .iter()
        .map(|y| (y - initial_average) * (y - initial_average))
        .sum()
}

/// Empirical rate certificate: the supremum of `k * imbalance(k)` over all
/// recorded rounds `k >= k_start`. Bounded trajectories with a plateau
/// certify an O(1/k) imbalance decay.
pub fn rate_statistic(records: &[RoundRecord], k_start: u64) -> f64 {
    records
        .iter()
        .filter(|r| r.round >= k_start)
        .map(|r| r.round as f64 * r.imbalance.value())
        .fold(0.0, f64::max)
}

pub(crate) fn balance_record(
    state: &DyadicWeightState,
    signals: &SignalVector,
) -> Result<RoundRecord> {
    let partition = level_partition(state);
    let potential = if partition.v_minus().is_empty() {
        None
    } else {
        Some(potential(state, &partition)?)
    };
    debug_assert_eq!(
        state.scale_exponent(),
        crate::schedule::gamma(state.round()).exponent()
    );
    Ok(RoundRecord {
        round: state.round(),
        gamma_exponent: state.scale_exponent(),
        imbalance: total_imbalance(state),
        decreasing_event: detect_decreasing_event(state, signals),
        potential,
        mse: None,
        consensus_error: None,
        signals_fired: signals.fired(),
    })
}

struct RoundSnapshot {
    round: u64,
    gamma_exponent: u32,
    imbalance_numerator: u64,
    decreasing_event: bool,
    potential: Option<u128>,
    signs_non_negative: Vec<bool>,
}

/// Replays the exact per-round facts behind the convergence argument and
/// fails loudly on the first violation.
///
/// Checked on every observed round:
/// - balances sum to zero;
/// - versus the previous round, in common scaled units: the imbalance drops
///   by at least `2 * step` on rounds flagged with a decreasing event and is
///   unchanged otherwise;
/// - the balance sign partition is unchanged on event-free rounds;
/// - while the imbalance is at least `2 N (N - 1) * step` and no event
///   fires, the potential strictly increases by an integer, and it always
///   stays below `N^(2N)`;
/// - from any round where that threshold holds, a decreasing event occurs
///   within `N^(2N)` rounds.
pub struct InvariantMonitor {
    threshold_units: u64,
    ceiling: Option<u128>,
    previous: Option<RoundSnapshot>,
    pending_since: Option<u64>,
    worst_event_gap: Option<u64>,
}

impl InvariantMonitor {
    pub fn new(node_count: usize) -> Self {
        InvariantMonitor {
            threshold_units: 2 * node_count as u64 * (node_count as u64 - 1),
            ceiling: potential_ceiling(node_count),
            previous: None,
            pending_since: None,
            worst_event_gap: None,
        }
    }

    /// Largest observed delay, in rounds, between the imbalance threshold
    /// being crossed without an event and the next decreasing event.
    pub fn worst_event_gap(&self) -> Option<u64> {
        self.worst_event_gap
    }

    pub fn observe(&mut self, state: &DyadicWeightState, record: &RoundRecord) -> Result<()> {
        let round = record.round;
        debug_assert_eq!(round, state.round());

        if state
            .balances_scaled()
            .iter()
            .map(|&b| b as i128)
            .sum::<i128>()
            != 0
        {
            return Err(Error::invariant(round, "balances do not sum to zero"));
        }

        if let (Some(ceiling), Some(u)) = (self.ceiling, record.potential) {
            if u >= ceiling {
                return Err(Error::invariant(
                    round,
                    format!("potential {u} reached its ceiling {ceiling}"),
                ));
            }
        }

        let signs: Vec<bool> = state.balances_scaled().iter().map(|&b| b >= 0).collect();

        if let Some(prev) = &self.previous {
            debug_assert_eq!(prev.round + 1, round, "monitor must see every round");
            // Rescale factor between the two rounds' units.
            let factor = 1i128 << (record.gamma_exponent - prev.gamma_exponent);
            let eps_now = record.imbalance.numerator as i128;
            let eps_prev = prev.imbalance_numerator as i128 * factor;
            if prev.decreasing_event {
                if eps_now > eps_prev - 2 * factor {
                    return Err(Error::invariant(
                        round,
                        format!(
                            "imbalance fell by less than two steps on a transfer round \
                             ({eps_prev} -> {eps_now} in units of 2^-{})",
                            record.gamma_exponent
                        ),
                    ));
                }
            } else {
                if eps_now != eps_prev {
                    return Err(Error::invariant(
                        round,
                        format!(
                            "imbalance changed without a transfer event \
                             ({eps_prev} -> {eps_now} in units of 2^-{})",
                            record.gamma_exponent
                        ),
                    ));
                }
                if signs != prev.signs_non_negative {
                    return Err(Error::invariant(
                        round,
                        "balance sign partition changed without a transfer event",
                    ));
                }
                if prev.imbalance_numerator >= self.threshold_units {
                    match (prev.potential, record.potential) {
                        (Some(before), Some(after)) if after > before => {}
                        (before, after) => {
                            return Err(Error::invariant(
                                round,
                                format!(
                                    "potential failed to increase under large imbalance \
                                     ({before:?} -> {after:?})"
                                ),
                            ));
                        }
                    }
                }
            }
        }

        if record.decreasing_event {
            if let Some(start) = self.pending_since.take() {
                let gap = round - start;
                self.worst_event_gap = Some(self.worst_event_gap.map_or(gap, |g| g.max(gap)));
            }
        } else if record.imbalance.numerator >= self.threshold_units && self.pending_since.is_none()
        {
            self.pending_since = Some(round);
        }
        if let (Some(start), Some(ceiling)) = (self.pending_since, self.ceiling) {
            if (round - start) as u128 > ceiling {
                return Err(Error::invariant(
                    round,
                    format!(
                        "no decreasing event within {ceiling} rounds of the imbalance \
                         threshold being crossed at round {start}"
                    ),
                ));
            }
        }

        self.previous = Some(RoundSnapshot {
            round,
            gamma_exponent: record.gamma_exponent,
            imbalance_numerator: record.imbalance.numerator,
            decreasing_event: record.decreasing_event,
            potential: record.potential,
            signs_non_negative: signs,
        });
        Ok(())
    }
}
