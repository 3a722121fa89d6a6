use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex budget exceeded: {requested} vertices requested, budget is {budget}")]
    BudgetExceeded { requested: usize, budget: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid measure at vertex {0}: mu must be positive and finite")]
    InvalidMeasure(usize),

    #[error("invalid conductance on edge ({0}, {1})")]
    InvalidConductance(usize, usize),

    #[error("invalid length on edge ({0}, {1})")]
    InvalidLength(usize, usize),

    #[error("invalid edge ({0}, {1}): self-loop, duplicate or out-of-range endpoint")]
    InvalidEdge(usize, usize),

    #[error("disconnected graph: {components} components")]
    Disconnected { components: usize },

    #[error("vertex {vertex} out of range for a space with {count} vertices")]
    VertexOutOfRange { vertex: usize, count: usize },

    #[error("misaligned field: expected {expected} values for space {space_id:016x}, got {found} values for space {field_space:016x}")]
    MisalignedField {
        expected: usize,
        found: usize,
        space_id: u64,
        field_space: u64,
    },

    #[error("non-finite field value at vertex {0}")]
    NonFiniteValue(usize),

    #[error("index set is not strictly increasing or references a missing vertex")]
    InvalidIndexSet,

    #[error("map evaluation failed at value {value}: {reason}")]
    MapEvaluation { value: f64, reason: &'static str },

    #[error("no admissible test function at vertex {0}")]
    NoAdmissibleTestFunction(usize),

    #[error("linear solver did not converge: relative residual {residual:e} after {iterations} iterations")]
    SolverNonConvergence { residual: f64, iterations: usize },

    #[error("negative initial datum {value} at vertex {vertex}")]
    NegativeInitialData { vertex: usize, value: f64 },

    #[error("nonpositive value {value} at vertex {vertex}, frame {frame}")]
    NonPositive {
        vertex: usize,
        frame: usize,
        value: f64,
    },

    #[error("time series: {0}")]
    TimeSeries(String),

    #[error("empty evaluation window")]
    EmptyWindow,

    #[error("ball of radius {radius} around vertex {center} reaches the boundary of the space")]
    BallExceedsSpace { center: usize, radius: f64 },

    #[error("region contains boundary vertex {0}")]
    RegionTouchesBoundary(usize),

    #[error("maximum is not attained inside the region: inside {inside}, outside {outside}")]
    MaximumNotInRegion { inside: f64, outside: f64 },

    #[error("empty boundary with unbalanced right-hand side (mu-mean {0:e})")]
    UnbalancedRhs(f64),

    #[error("wrong space type: expected `{expected}`, found `{found}`")]
    WrongSpaceType { expected: &'static str, found: String },

    #[error("missing constant for bound {0}")]
    MissingConstant(&'static str),

    #[error("schema version mismatch: expected {expected}, found {found}")]
    SchemaMismatch { expected: u32, found: u32 },

    #[error("corrupt file: {0}")]
    Corrupt(String),

    #[error("sweep point {index} (axis value {value}): {source}")]
    SweepPoint {
        index: usize,
        value: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
