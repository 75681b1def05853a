use thiserror::Error;

use crate::solver::SolveReport;

/// Errors produced by the solvers, oracles, and control builders.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("inner minimization did not converge after {iterations} iterations (best value {best_value}, gradient norm {gradient_norm:e})")]
    InnerNonConvergence {
        iterations: usize,
        best_value: f64,
        gradient_norm: f64,
    },

    #[error("specification cost contract violated: {0}")]
    SpecCostContract(String),

    #[error("non-finite iterate at iteration {iteration}; reduce the step size (eta = {eta})")]
    NumericalDivergence { iteration: usize, eta: f64 },

    #[error("solver hit the iteration cap ({iterations}) without converging (max residual {max_residual:e})")]
    NotConverged {
        iterations: usize,
        max_residual: f64,
        report: Box<SolveReport>,
    },

    #[error("oracle inconsistency: {0}")]
    OracleInconsistency(String),

    #[error("every grid point is infeasible; widen the slack grid")]
    InsufficientGrid,

    #[error("finite-difference stencil leaves the feasible region at slack coordinate {coordinate}")]
    Stencil { coordinate: usize },

    #[error("constraint difficulty undefined: both nominal and relaxed problems are infeasible")]
    UndefinedDifficulty,

    #[error("MPC tick {step} failed: {source}")]
    Tick {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        });
    }
    Ok(())
}
