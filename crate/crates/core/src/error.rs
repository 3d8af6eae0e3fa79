use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("not a tree: {0}")]
    NonTree(String),
    #[error("bad numbering: vertex {vertex} has parent {parent}, need parent < vertex")]
    BadNumbering { vertex: usize, parent: usize },
    #[error("bad labels: {0}")]
    BadLabels(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("infeasible decomposition: {0}")]
    InfeasibleDecomposition(String),
    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),
    #[error("rank deficient matrix")]
    RankDeficient,
    #[error("singular block in partitioned inverse")]
    SingularBlock,
    #[error("singular rank-one update: 1 + trace(E Ginv) ~ 0")]
    SingularUpdate,
    #[error("infeasible constrained problem")]
    Infeasible,
    #[error("unbounded problem")]
    Unbounded,
    #[error("index {0} is in the active set")]
    IndexInActiveSet(usize),
    #[error("offset {offset} out of range for zone of size {bound}")]
    OffsetOutOfRange { offset: usize, bound: usize },
    #[error("gamma must be > 1, got {0}")]
    BadGamma(f64),
    #[error("problem too large: n = {n} exceeds enumeration cap {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("constraint is infeasible (empty active set)")]
    InfeasibleConstraint,
    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),
    #[error("odd interior gap, tight witness needs even interior gaps")]
    OddInteriorGap,
    #[error("tree not large enough: {0}")]
    NotLargeEnough(String),
    #[error("empty active set")]
    EmptyS,
    #[error("did not converge after {iterations} iterations")]
    NotConverged { iterations: usize },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("complement of the active set is empty")]
    EmptyComplement,
    #[error("gap condition violated: {0}")]
    GapConditionViolated(String),
}
