use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("edge ({0}, {1}) has an endpoint outside 0..{2}")]
    EndpointOutOfRange(usize, usize, usize),
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("node {node} is outside 0..{n}")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("graph must have at least one node")]
    EmptyGraph,
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("no connected graph after {attempts} draws")]
    RedrawBudgetExhausted { attempts: usize },
    #[error("subset is empty")]
    EmptySubset,
    #[error("node {0} has no neighbours")]
    IsolatedNode(usize),
    #[error("graph is not connected")]
    NotConnected,
    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },
    #[error("payoffs violate the coordination ordering z>x, w>y, w>x, z>y, w>0, z>0")]
    NotCoordination,
    #[error("payoffs lack the risk/efficiency conflict z>w>x>y, w+x>z+y")]
    NoRiskEfficiencyConflict,
    #[error("payoffs are not of the symmetric (h, l) form with h > l")]
    NotSymmetric,
    #[error("brute-force enumeration is capped at {cap} agents, graph has {n}")]
    TooManyAgents { n: usize, cap: usize },
    #[error("expected {expected} per-agent values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("prediction undefined: {0}")]
    PredictionUndefined(&'static str),
    #[error("spectrum is (nearly) defective: eigenvalue gap {gap:e}")]
    NearDefective { gap: f64 },
    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
}
