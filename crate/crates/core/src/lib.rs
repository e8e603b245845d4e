//! Continuous-LASSO sparse estimation for sensor-array direction-of-arrival
//! problems.
//!
//! The crate provides, end to end:
//!
//! - the array signal model (steering manifolds, observation synthesis,
//!   sample statistics) in [`array`];
//! - a certified fixed-grid group-LASSO solver in [`grid_lasso`];
//! - the continuous (off-grid) estimator with its optimality certificate in
//!   [`class`];
//! - the first-order perturbation machinery in [`perturbation`];
//! - consistency tests and the asymptotic ULA resolution analysis in
//!   [`consistency`];
//! - regularization selection, extreme-value moments and closed-form
//!   bias/covariance predictors in [`performance`];
//! - reference estimators (NLLS maximum likelihood, conventional
//!   beamforming) in [`baselines`];
//! - a reproducible Monte Carlo engine in [`experiments`].

pub mod array;
pub mod class;
pub mod consistency;
pub mod error;
pub mod grid_lasso;
pub mod linalg;
pub mod matio;
pub mod performance;
pub mod perturbation;
pub mod poly;
pub mod scan;

pub use array::{
    build_matrices, generate_observation, phi_from_theta, sample_correlation, steering_derivative,
    steering_vector, theta_from_phi, AngleUnit, Interval, Manifold, NoiseCovariance, NoiseModel,
    Observation, PlanarArray, SparseRepresentation, UlaElectrical,
};
pub use class::{
    grid_fineness, properness_max_count, reduce_representation, set_distance, solve_class,
    verify_class_optimality, ClassCertificate, ClassOptions, ClassSolution, MaxCountReport,
};
pub use consistency::{
    asymptotic_consistency_test, asymptotic_kernels, check_consistency,
    resolution_threshold_search, AsymptoticKernels, ConsistencyVerdict, DprimeScan, XiSampler,
};
pub use error::{Error, Result};
pub use grid_lasso::{
    kkt_check, lambda_max, solve_group_lasso, solve_noiseless_bp, Grid, GridLassoSolution,
    KktReport, SolverOptions,
};
pub use linalg::C64;
pub use performance::{
    extreme_value_moments, lambda_approx, optimal_lambda_exact, predict_performance,
    LambdaMoments, MomentSource, PerformancePrediction, EMPIRICAL_GAMMA, EULER_GAMMA,
};
pub use perturbation::{build_expansion, PerturbationExpansion};
