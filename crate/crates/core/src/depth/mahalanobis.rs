use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::Scalar;

/// Relative ridge added to singular covariance matrices.
pub const MAHALANOBIS_RIDGE: f64 = 1e-8;

/// p-variate Mahalanobis depth `1 / (1 + (v - m)^T S^{-1} (v - m))` against a
/// frozen reference sample (rows are observations).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct MahalanobisReference<T: Scalar> {
    mean: Array1<T>,
    /// Lower Cholesky factor of the (possibly ridged) covariance; `None`
    /// when every reference observation is identical.
    chol: Option<Array2<T>>,
    ridge: T,
}

impl<T: Scalar> MahalanobisReference<T> {
    pub fn fit(sample: ArrayView2<T>) -> Result<Self> {
        if sample.nrows() == 0 {
            return Err(Error::Parameter("Mahalanobis depth needs a nonempty sample".into()));
        }
        let mean = sample
            .mean_axis(Axis(0))
            .ok_or_else(|| Error::Parameter("empty sample".into()))?;
        let cov = linalg::sample_covariance(sample, mean.view());
        let (chol, ridge) = match linalg::regularized_cholesky(cov.view(), T::lit(MAHALANOBIS_RIDGE)) {
            Some((l, r)) => (Some(l), r),
            None => (None, T::zero()),
        };
        Ok(MahalanobisReference { mean, chol, ridge })
    }

    pub fn mean(&self) -> ArrayView1<'_, T> {
        self.mean.view()
    }

    /// Ridge that was added to the covariance diagonal (zero if none).
    pub fn ridge(&self) -> T {
        self.ridge
    }

    pub fn depth(&self, v: ArrayView1<T>) -> Result<T> {
        let diff = &v - &self.mean;
        match &self.chol {
            Some(l) => Ok(T::one() / (T::one() + linalg::mahalanobis_sq(l.view(), diff.view()))),
            None if diff.iter().all(|d| *d == T::zero()) => Ok(T::one()),
            None => Err(Error::DegenerateScale),
        }
    }

    pub fn depth_slice(&self, v: &[T]) -> Result<T> {
        self.depth(ArrayView1::from(v))
    }
}
