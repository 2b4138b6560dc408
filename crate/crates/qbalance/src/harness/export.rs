//! Series export: CSV for plotting pipelines, JSON with full provenance.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::schedule;

use super::config::{EmitFormat, Mode};
use super::experiment::ExperimentResult;

/// CSV rendering with the fixed column set
/// `k,metric_mean,metric_median,metric_min,metric_max,gamma,alpha`.
/// The alpha column is blank in balance mode. An empty series renders as
/// the header line only.
pub fn render_csv(result: &ExperimentResult) -> String {
    let mut out = String::from("k,metric_mean,metric_median,metric_min,metric_max,gamma,alpha\n");
    let alpha = match result.config.mode {
        Mode::Balance => None,
        Mode::Consensus => result.config.alpha_schedule().ok(),
    };
    let series = &result.series;
    for idx in 0..series.len() {
        let k = series.rounds[idx];
        let alpha_cell = alpha
            .as_ref()
            .map(|sched| sched.value(k).to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{k},{},{},{},{},{},{alpha_cell}\n",
            series.mean[idx],
            series.median[idx],
            series.min[idx],
            series.max[idx],
            schedule::gamma(k).value(),
        ));
    }
    out
}

#[derive(Serialize)]
struct JsonRow {
    k: u64,
    metric_mean: f64,
    metric_median: f64,
    metric_min: f64,
    metric_max: f64,
    gamma: f64,
    alpha: Option<f64>,
}

#[derive(Serialize)]
struct JsonDocument<'a> {
    config: &'a super::config::ExperimentConfig,
    series: Vec<JsonRow>,
}

/// JSON rendering: the same rows as the CSV plus the full config (including
/// the master seed) for provenance.
pub fn render_json(result: &ExperimentResult) -> Result<String> {
    let alpha = match result.config.mode {
        Mode::Balance => None,
        Mode::Consensus => result.config.alpha_schedule().ok(),
    };
    let series = &result.series;
    let rows = (0..series.len())
        .map(|idx| {
            let k = series.rounds[idx];
            JsonRow {
                k,
                metric_mean: series.mean[idx],
                metric_median: series.median[idx],
                metric_min: series.min[idx],
                metric_max: series.max[idx],
                gamma: schedule::gamma(k).value(),
                alpha: alpha.as_ref().map(|sched| sched.value(k)),
            }
        })
        .collect();
    let doc = JsonDocument {
        config: &result.config,
        series: rows,
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    Ok(text)
}

/// Writes the series to `path` in the requested format.
pub fn export_series(result: &ExperimentResult, path: &Path, format: EmitFormat) -> Result<()> {
    let body = match format {
        EmitFormat::Csv => render_csv(result),
        EmitFormat::Json => render_json(result)?,
    };
    std::fs::write(path, body).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
