use thiserror::Error;

use crate::embedding::RealizabilityReport;

/// Errors raised anywhere in the analysis pipeline.
///
/// Every variant maps to a stable machine-readable [`Error::code`].
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is not square ({rows} rows, row {row} has {cols} entries)")]
    NotSquare {
        rows: usize,
        row: usize,
        cols: usize,
    },
    #[error("a chain needs at least two states, got {0}")]
    TooFewStates(usize),
    #[error("expected {expected} values, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("row {row} sums to {sum}, not 1")]
    RowSumViolation { row: usize, sum: f64 },
    #[error("entry ({row}, {col}) = {value} is outside [0, 1]")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("chain is not irreducible: {0}")]
    NotIrreducible(String),
    #[error("chain is periodic with period {0}")]
    Periodic(usize),
    #[error("linear solver failed: {0}")]
    SolverFailure(String),
    #[error("state {0} has equilibrium weight below its Laplacian diagonal")]
    InfeasibleDiagonal(usize),
    #[error("measure is inconsistent with the Laplacian: {0}")]
    InconsistentMeasure(String),
    #[error("Laplacian is malformed: {0}")]
    InvalidLaplacian(String),
    #[error("series did not converge after {terms} terms (last term {residual:e})")]
    NotConverged { terms: usize, residual: f64 },
    #[error("test vector has total mass {0:e}, expected 0")]
    NotMassZero(f64),
    #[error("state index {index} out of range for {n} states")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("source and target must be distinct states (both {0})")]
    SameState(usize),
    #[error("matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("negative squared distance at ({0}, {1})")]
    NegativeDistance(usize, usize),
    #[error("nonzero diagonal entry at {0}")]
    NonzeroDiagonal(usize),
    #[error("squared-distance matrix is not realizable (min eigenvalue {:e})", .0.min_eigenvalue)]
    NotRealizable(Box<RealizabilityReport>),
    #[error("chain is not time-reversible (detailed-balance defect {0:e})")]
    NotReversible(f64),
    #[error("potential must be 1 at the source and 0 at the target")]
    InvalidPotential,
    #[error("invalid circulation: {0}")]
    InvalidCirculation(String),
    #[error("only {0} renewals observed, need at least 30")]
    TooFewRenewals(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

impl Error {
    /// Stable identifier used in machine-readable error reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NotSquare { .. } => "not_square",
            Error::TooFewStates(_) => "too_few_states",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::RowSumViolation { .. } => "row_sum_violation",
            Error::NegativeEntry { .. } => "negative_entry",
            Error::NonFinite { .. } => "non_finite",
            Error::NotIrreducible(_) => "not_irreducible",
            Error::Periodic(_) => "periodic",
            Error::SolverFailure(_) => "solver_failure",
            Error::InfeasibleDiagonal(_) => "infeasible_diagonal",
            Error::InconsistentMeasure(_) => "inconsistent_measure",
            Error::InvalidLaplacian(_) => "invalid_laplacian",
            Error::NotConverged { .. } => "not_converged",
            Error::NotMassZero(_) => "not_mass_zero",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::SameState(_) => "same_state",
            Error::NotSymmetric(..) => "not_symmetric",
            Error::NegativeDistance(..) => "negative_distance",
            Error::NonzeroDiagonal(_) => "nonzero_diagonal",
            Error::NotRealizable(_) => "not_realizable",
            Error::NotReversible(_) => "not_reversible",
            Error::InvalidPotential => "invalid_potential",
            Error::InvalidCirculation(_) => "invalid_circulation",
            Error::TooFewRenewals(_) => "too_few_renewals",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Parse { .. } => "parse_error",
        }
    }

    /// True for failures of the numerical machinery rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SolverFailure(_) | Error::NotConverged { .. } | Error::TooFewRenewals(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_index(index: usize, n: usize) -> Result<()> {
    if index < n {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { index, n })
    }
}

pub(crate) fn check_pair(a: usize, b: usize, n: usize) -> Result<()> {
    check_index(a, n)?;
    check_index(b, n)?;
    if a == b {
        return Err(Error::SameState(a));
    }
    Ok(())
}
