//! Classical shadows from generalized qubit and qudit measurements.
//!
//! The crate covers the full pipeline: Hermitian operators and measurement
//! effects, the least-square shadow channel, squared shadow norms, Monte Carlo
//! estimation on product states and simulated-annealing search for
//! measurements with small shadow norms.

pub mod channel;
pub mod error;
pub mod io;
pub mod norm;
pub mod operator;
pub mod optimize;
pub mod povm;
pub mod random;
pub mod rng;
pub mod sampling;
pub mod targets;

pub use channel::{
    bloch_least_squares, classical_shadows, classical_shadows_symmetric, frame_operator,
    least_squares_estimate, BlochLeastSquares, ClassicalShadowSet, FrameSuperoperator,
};
pub use error::{Error, Result};
pub use norm::{
    average_squared_norm, estimator_variance, factorized_squared_norm, max_projection_norm_grid,
    octahedron_bound, squared_shadow_norm, LogProduct, NormReport, QubitNormEvaluator,
};
pub use operator::{tensor, tensor_all, BlochVector, HermitianOperator, OperatorBasis};
pub use optimize::{
    anneal_factorized, anneal_single_qubit, objective, AnnealConfig, OptimizationResult,
};
pub use povm::{Povm, QubitPovmParams, Solid, SymmetryCoefficients};
pub use sampling::{
    estimate_mean, sample_outcomes, single_shot_estimate, EstimatorConfig, OutcomeRecord,
    SimulationSummary,
};
