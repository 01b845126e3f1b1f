//! Gaussian discriminant analysis with pooled (linear) or per-class
//! (quadratic) covariance.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::softmax_row;
use crate::error::{Error, Result};
use crate::fdata::group_counts;
use crate::linalg;
use crate::Scalar;

/// Relative ridge for near-singular covariance matrices.
pub const DISCRIMINANT_RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
struct ClassDensity<T: Scalar> {
    log_prior: T,
    mean: Array1<T>,
    chol: Array2<T>,
    half_logdet: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct DiscriminantModel<T: Scalar> {
    quadratic: bool,
    classes: Vec<ClassDensity<T>>,
}

fn factor<T: Scalar>(cov: &Array2<T>) -> Result<Array2<T>> {
    match linalg::regularized_cholesky(cov.view(), T::lit(DISCRIMINANT_RIDGE)) {
        Some((l, _)) => Ok(l),
        // every feature constant: fall back to the identity
        None => Ok(Array2::eye(cov.nrows())),
    }
}

impl<T: Scalar> DiscriminantModel<T> {
    pub fn fit(features: ArrayView2<T>, labels: &[usize], n_groups: usize, quadratic: bool) -> Result<Self> {
        let (n, dim) = features.dim();
        let counts = group_counts(labels, n_groups);
        if let Some(c) = counts.iter().position(|&c| c == 0) {
            return Err(Error::Fit(format!("class {c} has no training points")));
        }
        if quadratic {
            if let Some(c) = counts.iter().position(|&c| c < dim + 1) {
                return Err(Error::Fit(format!(
                    "class {c} has {} points, quadratic discriminant needs at least {}; use the linear flavor",
                    counts[c],
                    dim + 1
                )));
            }
        } else if n < n_groups + 1 {
            return Err(Error::Fit("too few points for a pooled covariance".into()));
        }
        let rows_of = |c: usize| -> Vec<usize> { (0..n).filter(|&i| labels[i] == c).collect() };
        let means: Vec<Array1<T>> = (0..n_groups)
            .map(|c| features.select(Axis(0), &rows_of(c)).mean_axis(Axis(0)).expect("nonempty"))
            .collect();
        let scatter = |c: usize| -> Array2<T> {
            let x = features.select(Axis(0), &rows_of(c));
            let centered = &x - &means[c];
            centered.t().dot(&centered)
        };
        let covs: Vec<Array2<T>> = if quadratic {
            (0..n_groups).map(|c| scatter(c).mapv(|v| v / T::from_count(counts[c] - 1))).collect()
        } else {
            let mut pooled = Array2::<T>::zeros((dim, dim));
            for c in 0..n_groups {
                pooled += &scatter(c);
            }
            let denom = T::from_count(n - n_groups);
            pooled.mapv_inplace(|v| v / denom);
            vec![pooled; n_groups]
        };
        let total = T::from_count(n);
        let mut classes = Vec::with_capacity(n_groups);
        for c in 0..n_groups {
            let chol = factor(&covs[c])?;
            let half_logdet = linalg::cholesky_logdet(chol.view()) / T::lit(2.0);
            classes.push(ClassDensity {
                log_prior: (T::from_count(counts[c]) / total).ln(),
                mean: means[c].clone(),
                chol,
                half_logdet,
            });
        }
        Ok(DiscriminantModel { quadratic, classes })
    }

    pub fn is_quadratic(&self) -> bool {
        self.quadratic
    }

    /// Log prior plus log gaussian density, up to a common constant.
    pub fn log_scores(&self, x: ArrayView1<T>) -> Vec<T> {
        self.classes
            .iter()
            .map(|c| {
                let d = &x - &c.mean;
                c.log_prior - c.half_logdet - linalg::mahalanobis_sq(c.chol.view(), d.view()) / T::lit(2.0)
            })
            .collect()
    }

    pub fn posterior_row(&self, x: ArrayView1<T>) -> Vec<T> {
        softmax_row(&self.log_scores(x))
    }
}
