use crate::geo::NodeId;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed {what}: {message}")]
    Parse { what: &'static str, message: String },

    #[error("coordinate out of range for node {node}: ({latitude}, {longitude})")]
    CoordinateOutOfRange {
        node: NodeId,
        latitude: f64,
        longitude: f64,
    },

    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),

    #[error("unknown node {0}")]
    UnknownNode(NodeId),

    #[error("self-loop link at node {0}")]
    SelfLoop(NodeId),

    #[error("duplicate link {0}-{1}")]
    DuplicateLink(NodeId, NodeId),

    #[error("topology needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),

    #[error("topology is disconnected: node {0} unreachable from node {1}")]
    Disconnected(NodeId, NodeId),

    #[error("no link between {0} and {1}")]
    MissingLink(NodeId, NodeId),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("switch {0} unassigned")]
    UnassignedSwitch(NodeId),

    #[error("switch {0} assigned to more than one controller")]
    DuplicateAssignment(NodeId),

    #[error("unknown controller {0}")]
    UnknownController(NodeId),

    #[error("invalid failure scenario: {0}")]
    InvalidScenario(String),

    #[error("controller {controller} own-domain load {load} exceeds capacity {capacity}")]
    DomainOverloaded {
        controller: NodeId,
        load: u64,
        capacity: u32,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("search space of {size} exceeds the bound of {limit}")]
    SearchSpaceTooLarge { size: f64, limit: f64 },

    #[error("inconclusive: budget exhausted after {nodes} nodes without a feasible solution")]
    Inconclusive { nodes: u64 },

    #[error("unknown format {0:?}")]
    UnknownFormat(String),

    #[error("empty report list")]
    EmptyReport,
}

impl Error {
    pub(crate) fn parse(what: &'static str, message: impl Into<String>) -> Self {
        Error::Parse {
            what,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
