//! Density sweep for the consensus algorithm: aggregate MSE curves across
//! edge probabilities, exported as CSV.
//!
//!     cargo run --release -p qbalance --example consensus_experiment
//!
//! Uses a reduced trial budget so it finishes in seconds; raise
//! `graph_realizations`/`trials`/`max_iters` (or use the CLI with its
//! defaults) for full-scale curves.

use qbalance::harness::{export_series, run_experiment, EmitFormat, ExperimentConfig, Mode};

fn main() {
    for &p in &[0.2, 0.5, 0.8] {
        let cfg = ExperimentConfig {
            mode: Mode::Consensus,
            edge_probability: p,
            graph_realizations: 20,
            trials: 5,
            max_iters: 10_000,
            record_every: 100,
            master_seed: 1,
            ..ExperimentConfig::default()
        };
        let result = run_experiment(&cfg).expect("experiment");
        let path = format!("consensus_p{:02}.csv", (p * 10.0) as u32);
        export_series(&result, path.as_ref(), EmitFormat::Csv).expect("write CSV");

        let series = &result.series;
        let milestones: Vec<String> = [0u64, 100, 1_000, 10_000]
            .iter()
            .map(|&k| {
                let idx = series.rounds.iter().position(|&r| r == k).expect("on grid");
                format!("k={k}: {:.3e}", series.mean[idx])
            })
            .collect();
        println!("p={p}: mean MSE {}; wrote {path}", milestones.join(", "));
    }
}
