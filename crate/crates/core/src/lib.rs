#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod classify;
pub mod ddg;
pub mod depth;
pub mod energy;
pub mod fdata;
pub mod linalg;
pub mod rng;
mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::{euclidean, gaussian_kernel, quantile_sorted, sort_scalars, squared_euclidean, Scalar};

/// Double-precision versions of the main data types.
pub type FunctionalData64 = fdata::FunctionalData<f64>;
pub type MultiFunctionalData64 = fdata::MultiFunctionalData<f64>;
pub type LabeledFunctionalData64 = fdata::LabeledFunctionalData<f64>;
pub type DepthFeatureMatrix64 = ddg::DepthFeatureMatrix<f64>;
pub type DdgTransform64 = ddg::DdgTransform<f64>;
pub type TrainedClassifier64 = classify::TrainedClassifier<f64>;
pub type DepthModel64 = depth::DepthModel<f64>;
