use crate::graph::NodeId;

/// Errors produced across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),

    #[error("edge ({0}, {1}) is not present")]
    MissingEdge(NodeId, NodeId),

    #[error("edge ({0}, {1}) references a node outside the node set")]
    DanglingEdge(NodeId, NodeId),

    #[error("self-loop on node {0} rejected")]
    SelfLoop(NodeId),

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(NodeId, NodeId),

    #[error("invalid isomorphism: {0}")]
    InvalidIso(String),

    #[error("{what} exceeds capacity ({size} > {cap})")]
    Capacity {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("edge ({0}, {1}) has no solved class and lazy solving is disabled")]
    ClassMiss(NodeId, NodeId),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("generation gave up after {attempts} attempts: {what}")]
    Generation { attempts: usize, what: String },

    #[error("invalid representation spec `{0}`")]
    RepSpec(String),

    #[error("invalid architecture spec `{0}`")]
    NetSpec(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(path: impl Into<String>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
