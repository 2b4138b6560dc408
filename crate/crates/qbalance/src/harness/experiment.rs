//! Multi-trial experiment execution and aggregation.

use std::sync::Arc;

use crate::balancing::{run_balancer, DyadicWeightState};
use crate::consensus::{run_consensus, ConsensusState, QuantizerConfig};
use crate::error::{Error, Result};
use crate::graph::Digraph;
use crate::rng::SeedStream;

use super::config::{ExperimentConfig, Mode};

// Stream-derivation tags. Graph realization g draws from
// root/GRAPH/g; trial t on graph g draws its initial values from
// root/TRIAL/g/t/INIT/node and its dither from root/TRIAL/g/t/DITHER.
const GRAPH_STREAM: u64 = 1;
const TRIAL_STREAM: u64 = 2;
const INIT_STREAM: u64 = 0;
const DITHER_STREAM: u64 = 1;

/// Pointwise statistics of the tracked metric across all trials, on the
/// recorded round grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateSeries {
    pub rounds: Vec<u64>,
    pub mean: Vec<f64>,
    pub median: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl AggregateSeries {
    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    fn empty() -> Self {
        AggregateSeries {
            rounds: Vec::new(),
            mean: Vec::new(),
            median: Vec::new(),
            min: Vec::new(),
            max: Vec::new(),
        }
    }
}

/// Per-trial outcome.
#[derive(Debug, Clone)]
pub struct TrialSummary {
    pub graph_index: usize,
    pub trial_index: usize,
    /// Round at which the run stopped.
    pub rounds: u64,
    /// Whether the tolerance (rather than the iteration cap) stopped it.
    pub converged: bool,
    pub initial_metric: f64,
    pub final_metric: f64,
    pub worst_event_gap: Option<u64>,
    /// Estimate extremes over the whole run (consensus mode only).
    pub min_estimate: Option<f64>,
    pub max_estimate: Option<f64>,
    /// Largest deviation of the estimate mean from the initial average over
    /// the run (consensus mode only).
    pub max_average_drift: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub series: AggregateSeries,
    pub trials: Vec<TrialSummary>,
}

/// Collects the tracked metric at the grid rounds; trials that stop early
/// hold their last value on the remaining grid (a stopped balance run is an
/// exact fixed point, so the padding is the true trajectory).
struct SeriesCollector<'a> {
    grid: &'a [u64],
    values: Vec<f64>,
}

impl<'a> SeriesCollector<'a> {
    fn new(grid: &'a [u64]) -> Self {
        SeriesCollector {
            grid,
            values: Vec::with_capacity(grid.len()),
        }
    }

    fn offer(&mut self, round: u64, value: f64) {
        if self.values.len() < self.grid.len() && self.grid[self.values.len()] == round {
            self.values.push(value);
        }
    }

    fn finish(mut self) -> Vec<f64> {
        let pad = *self.values.last().expect("round 0 is always recorded");
        self.values.resize(self.grid.len(), pad);
        self.values
    }
}

fn record_grid(cfg: &ExperimentConfig) -> Vec<u64> {
    let mut grid: Vec<u64> = (0..=cfg.max_iters)
        .step_by(cfg.record_every as usize)
        .collect();
    if *grid.last().expect("grid contains round 0") != cfg.max_iters {
        grid.push(cfg.max_iters);
    }
    grid
}

fn aggregate(grid: Vec<u64>, per_trial: &[Vec<f64>]) -> AggregateSeries {
    let mut series = AggregateSeries {
        rounds: grid,
        mean: Vec::new(),
        median: Vec::new(),
        min: Vec::new(),
        max: Vec::new(),
    };
    let trials = per_trial.len() as f64;
    let mut column = Vec::with_capacity(per_trial.len());
    for idx in 0..series.rounds.len() {
        column.clear();
        column.extend(per_trial.iter().map(|values| values[idx]));
        column.sort_by(|a, b| a.partial_cmp(b).expect("metrics are finite"));
        let mid = column.len() / 2;
        let median = if column.len() % 2 == 1 {
            column[mid]
        } else {
            (column[mid - 1] + column[mid]) / 2.0
        };
        series.mean.push(column.iter().sum::<f64>() / trials);
        series.median.push(median);
        series.min.push(column[0]);
        series.max.push(*column.last().expect("non-empty column"));
    }
    series
}

fn load_fixture_graph(cfg: &ExperimentConfig) -> Result<Option<Arc<Digraph>>> {
    match &cfg.graph_file {
        None => Ok(None),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            Ok(Some(Arc::new(Digraph::from_edge_list(&text)?)))
        }
    }
}

/// Runs the configured experiment: `graph_realizations` seeded graphs times
/// `trials` runs each, aggregated on the recording grid. Deterministic in
/// the master seed; any failing trial fails the experiment with its
/// identity attached.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let root = SeedStream::new(cfg.master_seed);
    let fixture = load_fixture_graph(cfg)?;
    let grid = record_grid(cfg);
    let mut per_trial: Vec<Vec<f64>> = Vec::with_capacity(cfg.graph_realizations * cfg.trials);
    let mut trials: Vec<TrialSummary> = Vec::with_capacity(cfg.graph_realizations * cfg.trials);

    for graph_index in 0..cfg.graph_realizations {
        let graph = match &fixture {
            Some(g) => g.clone(),
            None => Arc::new(Digraph::ring_plus_random(
                cfg.node_count,
                cfg.edge_probability,
                &root.child(GRAPH_STREAM).child(graph_index as u64),
            )?),
        };
        for trial_index in 0..cfg.trials {
            let mut collector = SeriesCollector::new(&grid);
            let summary = run_trial(
                cfg,
                graph.clone(),
                &root,
                graph_index,
                trial_index,
                &mut collector,
            )
            .map_err(|source| Error::Trial {
                graph_index,
                trial_index,
                source: Box::new(source),
            })?;
            per_trial.push(collector.finish());
            trials.push(summary);
        }
    }

    Ok(ExperimentResult {
        config: cfg.clone(),
        series: if per_trial.is_empty() {
            AggregateSeries::empty()
        } else {
            aggregate(grid, &per_trial)
        },
        trials,
    })
}

fn run_trial(
    cfg: &ExperimentConfig,
    graph: Arc<Digraph>,
    root: &SeedStream,
    graph_index: usize,
    trial_index: usize,
    collector: &mut SeriesCollector,
) -> Result<TrialSummary> {
    let trial_stream = root
        .child(TRIAL_STREAM)
        .child(graph_index as u64)
        .child(trial_index as u64);
    match cfg.mode {
        Mode::Balance => {
            let mut state = DyadicWeightState::init(graph)?;
            let mut initial_metric = f64::NAN;
            let summary = run_balancer(&mut state, cfg.tol, cfg.max_iters, |record, _| {
                let eps = record.imbalance.value();
                if record.round == 0 {
                    initial_metric = eps;
                }
                collector.offer(record.round, eps);
            })?;
            Ok(TrialSummary {
                graph_index,
                trial_index,
                rounds: summary.rounds,
                converged: summary.converged,
                initial_metric,
                final_metric: summary.final_imbalance.value(),
                worst_event_gap: summary.worst_event_gap,
                min_estimate: None,
                max_estimate: None,
                max_average_drift: None,
            })
        }
        Mode::Consensus => {
            let quantizer = QuantizerConfig::new(cfg.q_min, cfg.q_max)?;
            let alpha = cfg.alpha_schedule()?;
            let init_stream = trial_stream.child(INIT_STREAM);
            let initial: Vec<f64> = (0..graph.node_count())
                .map(|i| cfg.q_min + init_stream.child(i as u64).unit_f64() * quantizer.width())
                .collect();
            let mut state = ConsensusState::init(
                graph,
                initial,
                quantizer,
                alpha,
                trial_stream.child(DITHER_STREAM),
            )?;
            let mut initial_metric = f64::NAN;
            let summary = run_consensus(&mut state, cfg.max_iters, Some(cfg.tol), |record, _| {
                let mse = record.mse.expect("consensus records carry an MSE");
                if record.round == 0 {
                    initial_metric = mse;
                }
                collector.offer(record.round, mse);
            })?;
            Ok(TrialSummary {
                graph_index,
                trial_index,
                rounds: summary.rounds,
                converged: summary.converged,
                initial_metric,
                final_metric: summary.final_mse,
                worst_event_gap: summary.worst_event_gap,
                min_estimate: Some(summary.min_estimate),
                max_estimate: Some(summary.max_estimate),
                max_average_drift: Some(summary.max_average_drift),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::EmitFormat;

    fn quick_config(mode: Mode) -> ExperimentConfig {
        ExperimentConfig {
            mode,
            node_count: 6,
            edge_probability: 0.5,
            trials: 2,
            graph_realizations: 2,
            max_iters: 50,
            tol: 0.0,
            record_every: 1,
            emit: EmitFormat::Csv,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn balanced_ring_produces_a_flat_zero_series() {
        let cfg = ExperimentConfig {
            edge_probability: 0.0,
            trials: 1,
            graph_realizations: 1,
            max_iters: 20,
            ..quick_config(Mode::Balance)
        };
        let result = run_experiment(&cfg).unwrap();
        assert_eq!(result.series.rounds.len(), 21);
        assert!(result.series.mean.iter().all(|&v| v == 0.0));
        assert!(result.series.max.iter().all(|&v| v == 0.0));
        assert_eq!(result.trials.len(), 1);
        assert!(result.trials[0].converged);
        assert_eq!(result.trials[0].rounds, 0);
    }

    #[test]
    fn fixture_graph_reproduces_the_hand_trajectory() {
        let dir = std::env::temp_dir().join("qbalance-experiment-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("fixture.graph");
        std::fs::write(&path, "3\n0 1\n0 2\n1 2\n2 0\n").unwrap();
        let cfg = ExperimentConfig {
            graph_file: Some(path),
            trials: 1,
            graph_realizations: 1,
            max_iters: 10,
            ..quick_config(Mode::Balance)
        };
        let result = run_experiment(&cfg).unwrap();
        let mut expected = vec![2.0];
        expected.extend(std::iter::repeat_n(0.0, 10));
        assert_eq!(result.series.mean, expected);
        assert_eq!(result.trials[0].rounds, 1);
        assert!(result.trials[0].converged);
    }

    #[test]
    fn aggregate_statistics_are_ordered_pointwise() {
        let result = run_experiment(&quick_config(Mode::Balance)).unwrap();
        for idx in 0..result.series.len() {
            assert!(result.series.min[idx] <= result.series.median[idx]);
            assert!(result.series.median[idx] <= result.series.max[idx]);
            assert!(result.series.min[idx] <= result.series.mean[idx]);
            assert!(result.series.mean[idx] <= result.series.max[idx]);
        }
    }

    #[test]
    fn balance_aggregates_are_non_increasing() {
        let result = run_experiment(&quick_config(Mode::Balance)).unwrap();
        for series in [
            &result.series.mean,
            &result.series.median,
            &result.series.min,
            &result.series.max,
        ] {
            for pair in series.windows(2) {
                assert!(
                    pair[1] <= pair[0],
                    "aggregate rose: {} -> {}",
                    pair[0],
                    pair[1]
                );
            }
        }
    }

    #[test]
    fn experiments_are_deterministic_in_the_master_seed() {
        let cfg = quick_config(Mode::Consensus);
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.series, b.series);
        let different_seed = ExperimentConfig {
            master_seed: 99,
            ..cfg
        };
        let c = run_experiment(&different_seed).unwrap();
        assert_ne!(a.series, c.series);
    }

    #[test]
    fn consensus_trials_report_estimate_bounds() {
        let result = run_experiment(&quick_config(Mode::Consensus)).unwrap();
        for trial in &result.trials {
            let lo = trial.min_estimate.unwrap();
            let hi = trial.max_estimate.unwrap();
            assert!(lo.is_finite() && hi.is_finite() && lo <= hi);
        }
    }

    #[test]
    fn final_grid_round_is_always_recorded() {
        let cfg = ExperimentConfig {
            max_iters: 55,
            record_every: 10,
            trials: 1,
            graph_realizations: 1,
            ..quick_config(Mode::Balance)
        };
        let result = run_experiment(&cfg).unwrap();
        assert_eq!(result.series.rounds, vec![0, 10, 20, 30, 40, 50, 55]);
    }
}
