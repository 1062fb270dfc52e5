use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by the command-line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Io,
    Config,
    Data,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric at ({row}, {col})")]
    Asymmetric { row: usize, col: usize },

    #[error("negative distance {value} at ({row}, {col})")]
    NegativeDistance { row: usize, col: usize, value: f64 },

    #[error("correlation {value} at ({row}, {col}) is outside [-1, 1]")]
    CorrelationOutOfRange { row: usize, col: usize, value: f64 },

    #[error("graph needs at least {min} nodes, got {got}")]
    TooFewNodes { min: usize, got: usize },

    #[error("self-loop on node {0}")]
    SelfLoop(usize),

    #[error("node index {0} is out of range")]
    UnknownNode(usize),

    #[error("unknown node id {0:?}")]
    UnknownNodeId(String),

    #[error("duplicate node id {0:?}")]
    DuplicateNodeId(String),

    #[error("invalid edge weight {0}")]
    InvalidWeight(f64),

    #[error("graph is disconnected")]
    Disconnected,

    #[error("nodes {0} and {1} are in different components")]
    DisconnectedPair(usize, usize),

    #[error("edge ({0}, {1}) is not present in the base graph")]
    NotSubgraph(usize, usize),

    #[error("edge ({0}, {1}) carries no correlation")]
    MissingCorrelation(usize, usize),

    #[error("edge ({0}, {1}) already exists")]
    EdgeExists(usize, usize),

    #[error("node {0} has no neighbours")]
    IsolatedNode(usize),

    #[error("graph has no edges")]
    NoEdges,

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("instance exceeds the exhaustive-search budget: {0}")]
    OracleBudget(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("series {a} and {b} share only {overlap} observations (need 3)")]
    InsufficientOverlap { a: String, b: String, overlap: usize },

    #[error("price history spans {got} dates but the window needs {needed}")]
    InsufficientData { needed: usize, got: usize },

    #[error("window ending {date} keeps {got} tickers with data (need 2)")]
    TooFewTickers { date: String, got: usize },

    #[error("series is constant")]
    ConstantSeries,

    #[error("series of length {len} is too short for lag {max_lag}")]
    SeriesTooShort { len: usize, max_lag: usize },

    #[error("no connected subset of size {0} could be formed")]
    NoConnectedSubset(usize),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: u64, reason: String },

    #[error("line {line}: duplicate row for ({date}, {ticker})")]
    DuplicateKey { line: u64, date: String, ticker: String },

    #[error("line {line}: non-positive price {value}")]
    NonPositivePrice { line: u64, value: f64 },

    #[error("line {line}: unparseable date {value:?}")]
    BadDate { line: u64, value: String },

    #[error("window {start}..={end} contains no dates")]
    EmptyWindow { start: String, end: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io { .. } | Error::Csv(_) | Error::Json(_) => ErrorClass::Io,
            Error::InvalidConfig(_)
            | Error::TooFewNodes { .. }
            | Error::InsufficientData { .. }
            | Error::OracleBudget(_)
            | Error::UnknownNodeId(_) => ErrorClass::Config,
            _ => ErrorClass::Data,
        }
    }
}
