//! Simulation models and the Monte Carlo experiment harness.

mod bivariate;
mod experiment;
mod models;

pub use bivariate::{
    in_rings, simulate_normals, simulate_rings, NormalsVariant, PlanarSample, BALL_CENTER, RING_INNER, RING_OUTER,
    SECOND_RING_CENTER,
};
pub use experiment::{
    data_fingerprint, evaluate_split, run_experiment, run_once, run_resampling, stratified_split, with_derivative, ExperimentSpec,
    ExperimentTable, ResamplingSpec, RunResult, CURVE_COMPONENTS,
};
pub use models::{gp_cholesky, gp_sample, model_mean, simulate_model, simulate_test, SimConfig, SimModel};
