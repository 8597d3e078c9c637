use thiserror::Error;

use crate::metric::PointId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed JSON: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("unknown point id {0}")]
    UnknownPoint(PointId),

    #[error("negative weight {weight} for terminal {terminal}")]
    NegativeWeight { terminal: PointId, weight: f64 },

    #[error("not a metric: {0}")]
    NonMetric(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid arborescence: {0}")]
    Structure(String),

    #[error("arborescence has no edges")]
    EdgelessTree,

    #[error("edge ending at node {0} is not part of the arborescence")]
    UnknownEdge(usize),

    #[error("terminal set is empty")]
    NoTerminals,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
