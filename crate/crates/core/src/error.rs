use thiserror::Error;

/// Errors raised by the library. Every variant corresponds to a violated
/// precondition or a malformed input; none are transient.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("graph has no vertices")]
    EmptyGraph,
    #[error("graph is not connected")]
    Disconnected,
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("duplicate vertex `{0}`")]
    DuplicateVertex(String),
    #[error("self-loop at `{0}`")]
    SelfLoop(String),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(String, String),
    #[error("walk is empty")]
    EmptyWalk,
    #[error("walk step {index} is not an edge: {from} -> {to}")]
    NotAdjacent {
        index: usize,
        from: String,
        to: String,
    },
    #[error("walk step {index} uses one-way edge {from} -> {to} backwards")]
    WrongWay {
        index: usize,
        from: String,
        to: String,
    },
    #[error("walk step {index} ({from} -> {to}) is not a {color} edge")]
    WrongColor {
        index: usize,
        from: String,
        to: String,
        color: String,
    },
    #[error("walks live on different graphs")]
    GraphMismatch,
    #[error("schedule is illegal at move {index}: {reason}")]
    IllegalSchedule { index: usize, reason: String },
    #[error("no suitable pivot vertex: {0}")]
    NoPivot(String),
    #[error("resource guard exceeded: {0}")]
    Guard(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
