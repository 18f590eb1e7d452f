use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in the core library.
///
/// Agent indices carried by variants are zero-based; `Display` renders them
/// one-based (`v1`, `v2`, ...) to match the edge-list file format.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("agent index {index} out of range for a graph with {n} agents")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("graph must have at least one agent")]
    EmptyGraph,
    #[error("graph is not strongly connected: no path from v{} to v{}", .from + 1, .to + 1)]
    NotStronglyConnected { from: usize, to: usize },
    #[error("agent v{} has no self-loop", .0 + 1)]
    MissingSelfLoop(usize),
    #[error("edge list line {line}: {reason}")]
    EdgeListParse { line: usize, reason: String },

    #[error("delay {delay} on v{}->v{} exceeds the bound {bound}", .from + 1, .to + 1)]
    DelayOutOfBounds { from: usize, to: usize, delay: usize, bound: usize },
    #[error("active sender v{} has no delay assigned for its edge to v{}", .from + 1, .to + 1)]
    MissingDelayAssignment { from: usize, to: usize },
    #[error("delay assigned on v{}->v{} but that is not an out-edge of an active sender", .from + 1, .to + 1)]
    UnexpectedDelayAssignment { from: usize, to: usize },
    #[error("self-delay of v{} must be 0, got {delay}", .agent + 1)]
    NonzeroSelfDelay { agent: usize, delay: usize },
    #[error("matrix is not column stochastic (defect {defect:e})")]
    NotColumnStochastic { defect: f64 },

    #[error("infeasible schedule policy: {0}")]
    InfeasiblePolicy(String),
    #[error("schedule parse error on line {line}: {reason}")]
    ScheduleParse { line: usize, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("de-biased estimate of real agent v{} is undefined (zero weight) at index {k}", .agent + 1)]
    DebiasUndefinedForRealNode { agent: usize, k: usize },
    #[error("need at least {needed} positive samples to fit a rate, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("non-finite input: {0}")]
    NonFinite(String),
    #[error("invalid condition-number target {0}")]
    InvalidTarget(f64),
    #[error("linear system is singular or indefinite: {0}")]
    SingularSystem(String),
    #[error("invalid objective: {0}")]
    InvalidObjective(String),

    #[error("step size {step:e} of v{} at index {k} exceeds the theoretical bound {bound:e}", .agent + 1)]
    StepSizeExceedsBound { agent: usize, k: usize, step: f64, bound: f64 },
    #[error("invalid step-size policy: {0}")]
    InvalidPolicy(String),

    #[error("run has no time indices")]
    EmptyRun,
    #[error("cumulative step mass is zero for every agent; re-weighting undefined")]
    DegenerateWeights,
    #[error("distance bound violated: actual {actual:e} > bound {bound:e}")]
    BoundViolated { actual: f64, bound: f64 },

    #[error("threaded run stalled for longer than the watchdog: {0}")]
    Deadlock(String),
    #[error("inbox of v{} overflowed its capacity {capacity}", .agent + 1)]
    QueueOverflow { agent: usize, capacity: usize },
    #[error("event log is incomplete: {0}")]
    IncompleteLog(String),
    #[error("invalid runtime configuration: {0}")]
    InvalidRuntimeConfig(String),

    #[error("csv: {0}")]
    Csv(String),
}
