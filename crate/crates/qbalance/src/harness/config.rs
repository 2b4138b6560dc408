//! Experiment configuration: defaults, flat key=value files, and flag
//! overrides with field-level validation.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::schedule::AlphaSchedule;

/// Hard cap on configured run length (2^40 rounds).
pub const MAX_ITERS_LIMIT: u64 = 1 << 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Balance,
    Consensus,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Balance => "balance",
            Mode::Consensus => "consensus",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EmitFormat {
    Csv,
    Json,
}

/// Full description of an experiment. Field names double as the config-file
/// and flag keys.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Number of nodes (key `n`).
    #[serde(rename = "n")]
    pub node_count: usize,
    /// Probability of each extra directed edge (key `p`).
    #[serde(rename = "p")]
    pub edge_probability: f64,
    /// Independent initial-value/dither realizations per graph.
    pub trials: usize,
    /// Independent seeded graphs.
    pub graph_realizations: usize,
    pub max_iters: u64,
    /// Stopping tolerance on the tracked metric; 0 stops only on an exact
    /// zero, which the balance metric reaches.
    pub tol: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub alpha_a0: f64,
    pub alpha_tau: f64,
    pub master_seed: u64,
    /// Subsampling stride for recorded trajectories; invariant checks still
    /// run on every round internally.
    pub record_every: u64,
    pub emit: EmitFormat,
    /// Optional fixture graph in the edge-list text format; overrides the
    /// random generator when set.
    pub graph_file: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: Mode::Balance,
            node_count: 6,
            edge_probability: 0.5,
            trials: 100,
            graph_realizations: 100,
            max_iters: 100_000,
            tol: 0.0,
            q_min: 0.0,
            q_max: 1.0,
            alpha_a0: 1.0,
            alpha_tau: 1.0,
            master_seed: 0,
            record_every: 100,
            emit: EmitFormat::Csv,
            graph_file: None,
        }
    }
}

impl ExperimentConfig {
    pub fn alpha_schedule(&self) -> Result<AlphaSchedule> {
        AlphaSchedule::new(self.alpha_a0, self.alpha_tau)
            .map_err(|e| Error::config("alpha_a0/alpha_tau", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_count < 2 {
            return Err(Error::config("n", "node count must be at least 2"));
        }
        if !(0.0..=1.0).contains(&self.edge_probability) {
            return Err(Error::config("p", "probability must lie in [0, 1]"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be positive"));
        }
        if self.graph_realizations == 0 {
            return Err(Error::config("graph_realizations", "must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::config("max_iters", "must be positive"));
        }
        // Keeps the dyadic step exponent at or below 40, leaving ample
        // headroom before scaled weights could overflow 64-bit integers
        // (checked arithmetic still guards the engine).
        if self.max_iters > MAX_ITERS_LIMIT {
            return Err(Error::config(
                "max_iters",
                format!("must be at most {MAX_ITERS_LIMIT} (2^40)"),
            ));
        }
        if self.record_every == 0 {
            return Err(Error::config("record_every", "must be positive"));
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return Err(Error::config("tol", "must be non-negative"));
        }
        if self.mode == Mode::Consensus {
            if self.q_min >= self.q_max || self.q_min.is_nan() || self.q_max.is_nan() {
                return Err(Error::config("q_min/q_max", "requires q_min < q_max"));
            }
            self.alpha_schedule()?;
        }
        Ok(())
    }
}

/// Parses a flat `key=value` config file body. `#` starts a comment; blank
/// lines are skipped.
pub fn parse_settings(text: &str) -> Result<Vec<(String, String)>> {
    let mut settings = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::config(
                "config",
                format!("line {}: expected `key=value`, got `{line}`", idx + 1),
            )
        })?;
        settings.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(settings)
}

/// Reads and parses a config file.
pub fn parse_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_settings(&text)
}

fn apply_setting(cfg: &mut ExperimentConfig, key: &str, value: &str) -> Result<()> {
    fn parsed<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
        value
            .parse()
            .map_err(|_| Error::config(key, format!("invalid value `{value}`")))
    }
    match key {
        "mode" => {
            cfg.mode = match value {
                "balance" => Mode::Balance,
                "consensus" => Mode::Consensus,
                _ => return Err(Error::config(key, "expected `balance` or `consensus`")),
            }
        }
        "n" => cfg.node_count = parsed(key, value)?,
        "p" => cfg.edge_probability = parsed(key, value)?,
        "trials" => cfg.trials = parsed(key, value)?,
        "graph_realizations" => cfg.graph_realizations = parsed(key, value)?,
        "max_iters" => cfg.max_iters = parsed(key, value)?,
        "tol" => cfg.tol = parsed(key, value)?,
        "q_min" => cfg.q_min = parsed(key, value)?,
        "q_max" => cfg.q_max = parsed(key, value)?,
        "alpha_a0" => cfg.alpha_a0 = parsed(key, value)?,
        "alpha_tau" => cfg.alpha_tau = parsed(key, value)?,
        "master_seed" => cfg.master_seed = parsed(key, value)?,
        "record_every" => cfg.record_every = parsed(key, value)?,
        "emit" => {
            cfg.emit = match value {
                "csv" => EmitFormat::Csv,
                "json" => EmitFormat::Json,
                _ => return Err(Error::config(key, "expected `csv` or `json`")),
            }
        }
        "graph_file" => cfg.graph_file = Some(PathBuf::from(value)),
        _ => return Err(Error::config(key, "unknown key")),
    }
    Ok(())
}

/// Builds a validated config from defaults, an optional config file, and
/// flag overrides, in that precedence order. `mode`, when given, wins over
/// any `mode` key (it comes from the CLI subcommand).
pub fn load_config(
    config_file: Option<&Path>,
    overrides: &[(String, String)],
    mode: Option<Mode>,
) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = config_file {
        for (key, value) in parse_config_file(path)? {
            apply_setting(&mut cfg, &key, &value)?;
        }
    }
    for (key, value) in overrides {
        apply_setting(&mut cfg, key, value)?;
    }
    if let Some(mode) = mode {
        cfg.mode = mode;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_yields_the_documented_defaults() {
        let cfg = load_config(None, &[], None).unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.node_count, 6);
        assert_eq!(cfg.edge_probability, 0.5);
        assert_eq!(cfg.trials, 100);
        assert_eq!(cfg.graph_realizations, 100);
        assert_eq!(cfg.max_iters, 100_000);
        assert_eq!(cfg.tol, 0.0);
        assert_eq!((cfg.q_min, cfg.q_max), (0.0, 1.0));
        assert_eq!((cfg.alpha_a0, cfg.alpha_tau), (1.0, 1.0));
    }

    #[test]
    fn out_of_range_probability_is_rejected() {
        let err = load_config(None, &[("p".into(), "1.5".into())], None).unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "p"));
    }

    #[test]
    fn oversized_run_length_is_rejected() {
        let overrides = vec![("max_iters".into(), (MAX_ITERS_LIMIT + 1).to_string())];
        let err = load_config(None, &overrides, None).unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "max_iters"));
    }

    #[test]
    fn inverted_quantizer_range_is_rejected_in_consensus_mode() {
        let overrides = vec![("q_min".into(), "2".into()), ("q_max".into(), "1".into())];
        let err = load_config(None, &overrides, Some(Mode::Consensus)).unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "q_min/q_max"));
        // The same range is fine in balance mode, where no quantizer runs.
        assert!(load_config(None, &overrides, Some(Mode::Balance)).is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected_with_the_key_name() {
        let err = load_config(None, &[("pp".into(), "1".into())], None).unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "pp"));
    }

    #[test]
    fn alpha_constraints_are_enforced_in_consensus_mode() {
        let overrides = vec![("alpha_tau".into(), "0.4".into())];
        assert!(load_config(None, &overrides, Some(Mode::Consensus)).is_err());
        let overrides = vec![("alpha_a0".into(), "0".into())];
        assert!(load_config(None, &overrides, Some(Mode::Consensus)).is_err());
    }

    #[test]
    fn flags_override_file_values() {
        let dir = std::env::temp_dir().join("qbalance-config-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("exp.cfg");
        std::fs::write(&path, "# fixture\nn = 8\np = 0.2\ntrials=3\n").unwrap();
        let cfg = load_config(
            Some(&path),
            &[("p".into(), "0.9".into())],
            Some(Mode::Balance),
        )
        .unwrap();
        assert_eq!(cfg.node_count, 8);
        assert_eq!(cfg.edge_probability, 0.9);
        assert_eq!(cfg.trials, 3);
    }

    #[test]
    fn malformed_lines_carry_line_numbers() {
        let err = parse_settings("n = 6\nbogus line\n").unwrap_err();
        let text = err.to_string();
        assert!(text.contains("line 2"), "{text}");
    }

    #[test]
    fn subcommand_mode_wins_over_file_mode() {
        let dir = std::env::temp_dir().join("qbalance-config-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("mode.cfg");
        std::fs::write(&path, "mode = consensus\n").unwrap();
        let cfg = load_config(Some(&path), &[], Some(Mode::Balance)).unwrap();
        assert_eq!(cfg.mode, Mode::Balance);
        let cfg = load_config(Some(&path), &[], None).unwrap();
        assert_eq!(cfg.mode, Mode::Consensus);
    }
}
