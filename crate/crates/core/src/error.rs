use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("covering condition fails: margin {margin}")]
    CoveringCondition { margin: f64 },
    #[error("cell indicator is empty for configuration {0}")]
    EmptyCell(String),
    #[error("cell has {size} nodes, above the cap of {cap}")]
    CellTooLarge { size: usize, cap: usize },
    #[error("linear solver breakdown: {0}")]
    SolverBreakdown(String),
    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("window holds {count} eigenpairs, above the budget of {budget}")]
    TooManyEigenpairs { count: usize, budget: usize },
    #[error("dimension {dim} is too large for dense decomposition (cap {cap})")]
    TooLargeForDense { dim: usize, cap: usize },
    #[error("cutoff order {order} is outside the supported range 2..={max}")]
    CutoffOrder { order: usize, max: usize },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
}

impl Error {
    /// True for failures of a numerical kernel (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SolverBreakdown(_)
                | Error::NotConverged { .. }
                | Error::TooManyEigenpairs { .. }
                | Error::TooLargeForDense { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
