use thiserror::Error;

/// Errors produced by the estimation and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter {value} outside the manifold domain [{lo}, {hi}]")]
    OutOfDomain { value: f64, lo: f64, hi: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is singular or numerically rank deficient (condition estimate {cond:.3e})")]
    RankDeficient { cond: f64 },

    #[error("interaction matrix is singular (condition estimate {cond:.3e}); sources at or below the resolution limit")]
    SingularInteraction { cond: f64 },

    #[error("solver did not converge within {iterations} iterations (KKT residual {kkt_residual:.3e})")]
    NonConvergence {
        iterations: usize,
        kkt_residual: f64,
    },

    #[error(
        "grid solver hit the sweep cap at {iterations} sweeps \
         (best KKT residual {kkt_residual:.3e}); best iterate attached"
    )]
    GridSolverStalled {
        iterations: usize,
        kkt_residual: f64,
        best: Box<crate::grid_lasso::GridLassoSolution>,
    },

    #[error("problem infeasible: {0}")]
    Infeasible(String),

    #[error(
        "optimality certification failed after {rounds} refinement rounds: \
         dual peak {violation:.9e} at theta = {theta:.9} \
         (alignment {alignment:.3e}, stationarity {stationarity:.3e}, lambda {lambda:.6e})"
    )]
    CertificationFailed {
        rounds: usize,
        theta: f64,
        violation: f64,
        alignment: f64,
        stationarity: f64,
        lambda: f64,
    },

    #[error("scenario is not consistent: no finite regularization value exists")]
    InconsistentScenario,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
