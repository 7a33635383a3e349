//! critvis: critical-visibility analysis of two-particle correlations.
//!
//! Given a matrix of correlation values - ideal quantum predictions built
//! from measurement settings, or raw experimental data - the solver finds
//! the largest visibility `V` at which `V Q` is still a mixture of
//! deterministic local strategies, i.e. still admits a local hidden
//! variable model. It returns the optimum together with a primal model and
//! a dual Bell-inequality certificate, both independently checkable.

pub mod cli;
pub mod io;
pub mod lp;
pub mod predictions;
pub mod scans;
pub mod strategies;

pub use lp::{
    auto_backend, backend_by_name, registry, solve_auto, solve_column_generation, solve_dense,
    verify_model, verify_witness, BellWitness, Diagnostics, LhvModel, LpProblem, ModelCheck,
    SolveError, SolveResult, SolveStatus, SolverBackend, WitnessCheck,
};
pub use predictions::{
    build_prediction_matrix, correlation, joint_probability, Origin, PredictionMatrix, Setting,
    SettingsError, SettingsSpec, Visibility,
};
pub use strategies::{
    canonicalize, enumerate_canonical, strategy_column, SignVector, StrategyError, StrategyPair,
};
