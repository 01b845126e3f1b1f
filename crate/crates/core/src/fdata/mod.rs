//! Functional data containers, grid arithmetic, splines and CSV I/O.

mod bspline;
mod dataset;
mod grid;
mod impute;
mod io;
mod spline;

pub use bspline::BSplineBasis;
pub use dataset::{FunctionalData, LabeledFunctionalData, MultiFunctionalData};
pub(crate) use dataset::group_counts;
pub use grid::{l2_metric, trapezoid_integral, Grid};
pub use impute::{impute_missing, MIN_IMPUTATION_POINTS};
pub use io::{
    format_scalar, load_csv, load_labels, read_csv, read_labels, save_csv, save_labels, write_csv,
    write_labels, CsvLayout,
};
pub use spline::{derivative, derivative_with, DerivativeMethod, DerivativeOperator};
