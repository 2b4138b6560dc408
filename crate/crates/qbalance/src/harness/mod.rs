//! Experiment configuration, multi-trial execution, and export.
//!
//! An experiment runs one of the two algorithms over a grid of seeded graph
//! realizations and trials, records a subsampled metric trajectory per
//! trial (total imbalance or MSE), and aggregates pointwise statistics
//! across trials. Identical configs produce byte-identical exports.

mod config;
mod experiment;
mod export;

pub use config::{
    load_config, parse_config_file, parse_settings, EmitFormat, ExperimentConfig, Mode,
    MAX_ITERS_LIMIT,
};
pub use experiment::{run_experiment, AggregateSeries, ExperimentResult, TrialSummary};
pub use export::{export_series, render_csv, render_json};
