use thiserror::Error;

/// Errors raised by the simulation core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("numerical integration produced a non-finite value at entry ({row}, {col})")]
    NumericalIntegration { row: usize, col: usize },

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("similarity undefined for a zero-norm covariance")]
    UndefinedSimilarity,

    #[error("basis columns are not orthonormal (deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("LP size cap exceeded: {vertices} vertices > cap {cap}")]
    LpSizeCap { vertices: usize, cap: usize },

    #[error("LP solver failed: {0}")]
    LpSolver(String),

    #[error("fixed-point iteration did not converge after {iterations} iterations (last relative change {last_change:e})")]
    NonConvergence { iterations: usize, last_change: f64 },

    #[error("degenerate fixed point: {streams} streams on an effective rank of {rank}")]
    DegenerateFixedPoint { streams: usize, rank: usize },

    #[error("deterministic-equivalent breakdown: coupling denominator {denominator:e} for source group {source_group}")]
    CouplingBreakdown { source_group: usize, denominator: f64 },

    #[error("singular effective channel (rank deficient ZF inversion)")]
    SingularChannel,

    #[error("dimensionality bottleneck: group {group} has b_g = {dim} < S_g = {streams}")]
    DimensionalityBottleneck { group: usize, dim: usize, streams: usize },

    #[error("infeasible stream allocation: {0}")]
    Infeasible(String),

    #[error("reducible CNF formula: {0}")]
    ReducibleFormula(String),

    #[error("DIMACS parse error on line {line}: {message}")]
    Dimacs { line: usize, message: String },

    #[error("reduction parameters infeasible: {0}")]
    ReductionParameters(String),

    #[error("instance too large for exhaustive enumeration: {size} > {cap}")]
    EnumerationCap { size: usize, cap: usize },

    #[error("evaluator failed: {0}")]
    Evaluator(String),
}

impl Error {
    /// Size-cap violations are reported with their own CLI exit code.
    pub fn is_size_cap(&self) -> bool {
        matches!(self, Error::LpSizeCap { .. } | Error::EnumerationCap { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
