use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("record {at}: index {value} out of range for {what} (limit {limit})")]
    IndexOutOfRange {
        at: usize,
        what: &'static str,
        value: u64,
        limit: u64,
    },
    #[error("record {at}: self-loop on node {node}")]
    SelfLoop { at: usize, node: u32 },
    #[error("record {at}: reporter {reporter} is not eligible to report {ego}->{alter}")]
    MaskViolation {
        at: usize,
        ego: u32,
        alter: u32,
        reporter: u32,
    },
    #[error("record {at}: count {value} does not fit in 32 bits")]
    CountOverflow { at: usize, value: u64 },
    #[error("invalid mask: {0}")]
    InvalidMask(String),
    #[error("{name}[{index}] = {value} must be strictly positive")]
    NonPositiveParameter {
        name: &'static str,
        index: usize,
        value: f64,
    },
    #[error("prior for dyad {dyad:?} sums to {sum}, expected 1")]
    SimplexViolation { dyad: Option<(u32, u32)>, sum: f64 },
    #[error("{what}: expected length {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite ELBO at iteration {iteration}: {reason}")]
    NonFiniteElbo { iteration: usize, reason: String },
    #[error("point estimates require K = 2, got K = {0}")]
    UnsupportedK(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid probability {name} = {value}")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("reciprocity target {target} unreachable (achievable range [{min:.4}, {max:.4}], last {achieved:.4})")]
    TargetUnreachable {
        target: f64,
        achieved: f64,
        min: f64,
        max: f64,
    },
    #[error("network shapes differ: {0} vs {1} nodes")]
    ShapeMismatch(usize, usize),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty sample")]
    EmptySample,
    #[error("reporter {0} made no nominations")]
    NoNominations(u32),
}
