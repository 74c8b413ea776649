use thiserror::Error;

/// Errors produced while building networks, cutting graphs, or running solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("flow `{flow}` references unknown node `{node}`")]
    UnknownNode { flow: String, node: String },

    #[error("unknown node id `{0}`")]
    NoSuchNode(String),

    #[error("unknown flow id `{0}`")]
    NoSuchFlow(String),

    #[error("flow `{flow}` visits node `{node}` more than once")]
    DuplicatePathNode { flow: String, node: String },

    #[error("flow `{0}` has an empty path")]
    EmptyPath(String),

    #[error("`{what}` of `{id}` must be positive, got {value}")]
    NonPositiveRate {
        id: String,
        what: &'static str,
        value: f64,
    },

    #[error("`{what}` of `{id}` must be finite and non-negative, got {value}")]
    NegativeParameter {
        id: String,
        what: &'static str,
        value: f64,
    },

    #[error("node `{0}` has latency + packetization = 0; its delay bound at zero load would be 0")]
    ZeroJitterFloor(String),

    #[error("edge `{tail}>{head}` is not a transit edge of the network")]
    EdgeNotTransit { tail: String, head: String },

    #[error("flow `{flow}` is not carried by edge `{tail}>{head}`")]
    FlowNotOnEdge {
        flow: String,
        tail: String,
        head: String,
    },

    #[error("no delay value supplied for upstream node `{0}`")]
    MissingDelay(String),

    #[error("transit flow `{flow}` at node `{node}` has no covered in-edge")]
    MissingInEdge { flow: String, node: String },

    #[error("vector length {got} does not match expected {expected} ({context})")]
    IndexMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("edge set is not a cut: a directed cycle remains through node `{0}`")]
    NotACut(String),

    #[error("exhaustive cut search is capped at {cap} transit edges; network has {edges}")]
    TooLargeForExhaustive { cap: usize, edges: usize },

    #[error("network is not locally stable: node `{node}` has utilization {utilization}")]
    UnstableNetwork { node: String, utilization: f64 },

    #[error("schedule never visits node `{0}`")]
    ScheduleViolatesHd(String),

    #[error("delay model of node `{0}` has more than one affine form; the system is not affine")]
    NotAffine(String),

    #[error("linear system is numerically singular (pivot {pivot:.3e} at column {column}) although the spectral radius is {rho}")]
    SingularSystem {
        column: usize,
        pivot: f64,
        rho: f64,
    },

    #[error("power iteration did not settle within {steps} steps; last estimate {estimate}")]
    NoConvergence { steps: usize, estimate: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("failed to parse network description: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv output failed: {0}")]
    Csv(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
