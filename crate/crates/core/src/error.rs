//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate edge ({from}, {to})")]
    DuplicateEdge { from: usize, to: usize },
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("node index {index} out of range for graph with {node_count} nodes")]
    IndexOutOfRange { index: usize, node_count: usize },
    #[error("edge ({from}, {to}) has non-finite weight {weight}")]
    NonFiniteWeight { from: usize, to: usize, weight: f64 },
    #[error("invalid graph family parameters: {0}")]
    InvalidFamilyParams(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite state at t = {time}: entry {index} is {value}")]
    NonFiniteState {
        time: f64,
        index: usize,
        value: f64,
    },
    #[error("invalid integration config: {0}")]
    InvalidIntegrationConfig(String),
    #[error("invalid resolution list: {0}")]
    InvalidResolutionList(String),
    #[error("SVD did not converge")]
    ConvergenceFailure,
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("covariance factorization failed")]
    FactorizationFailure,
    #[error("covariance matrix is singular even after jitter up to {max_jitter:e}")]
    SingularCovariance { max_jitter: f64 },
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("invalid training data: {0}")]
    InvalidTrainingData(String),
    #[error("optimization budget must be at least 1")]
    ZeroBudget,
    #[error("degenerate train/test split: {0}")]
    DegenerateSplit(String),
    #[error("invalid experiment config: {0}")]
    InvalidExperimentConfig(String),
    #[error("parse error in {file}: {message}")]
    ParseError { file: String, message: String },
    #[error("observation references unknown node {index} (graph has {node_count} nodes)")]
    UnknownNode { index: usize, node_count: usize },
    #[error("no observations in {0}")]
    EmptyData(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
