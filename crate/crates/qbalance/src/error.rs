//! Crate-wide error type.

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("node count must be at least {min}, got {got}")]
    NodeCount { got: usize, min: usize },
    #[error("edge probability must lie in [0, 1], got {0}")]
    EdgeProbability(f64),
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("edge endpoint {node} out of range for {node_count} nodes")]
    NodeOutOfRange { node: usize, node_count: usize },
    #[error("graph is not strongly connected")]
    NotStronglyConnected,
    #[error("edge list line {line}: {message}")]
    EdgeListParse { line: usize, message: String },

    #[error("step-size scale a0 must be positive and finite, got {0}")]
    AlphaScale(f64),
    #[error("step-size exponent tau must lie in (1/2, 1], got {0}")]
    AlphaExponent(f64),

    #[error("quantizer range requires q_min < q_max, got [{q_min}, {q_max}]")]
    QuantizerRange { q_min: f64, q_max: f64 },
    /// The initial average lies outside the quantization range, so the
    /// consensus target carries no information the quantizer can express.
    #[error("initial average {average} lies outside the quantizer range [{q_min}, {q_max}]")]
    NonInformativeAverage {
        average: f64,
        q_min: f64,
        q_max: f64,
    },
    #[error("estimate vector has length {got}, expected {expected}")]
    EstimateLength { got: usize, expected: usize },
    #[error("estimate for node {node} is not finite")]
    EstimateNotFinite { node: usize },

    #[error("tolerance must be non-negative, got {0}")]
    NegativeTolerance(f64),

    #[error("scaled-integer overflow at round {round}; lower max_iters or the run length")]
    Overflow { round: u64 },
    #[error("potential is undefined: no node has negative balance")]
    PotentialUndefined,
    #[error("invariant violated at round {round}: {message}")]
    Invariant { round: u64, message: String },

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("graph {graph_index}, trial {trial_index}: {source}")]
    Trial {
        graph_index: usize,
        trial_index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to encode JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn invariant(round: u64, message: impl Into<String>) -> Self {
        Error::Invariant {
            round,
            message: message.into(),
        }
    }

    /// True when the error reports a broken runtime invariant rather than a
    /// rejected input. The CLI maps these to a distinct exit code.
    pub fn is_invariant_violation(&self) -> bool {
        match self {
            Error::Invariant { .. } | Error::Overflow { .. } => true,
            Error::Trial { source, .. } => source.is_invariant_violation(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
