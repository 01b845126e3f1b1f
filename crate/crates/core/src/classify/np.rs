//! Nadaraya-Watson class posteriors with a gaussian kernel.

use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{quantile_sorted, sort_scalars, squared_euclidean, Scalar};

/// Quantile of the pairwise feature distances used as the starting bandwidth.
pub const NP_BANDWIDTH_QUANTILE: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct NpModel<T: Scalar> {
    points: Vec<Vec<T>>,
    labels: Vec<usize>,
    n_groups: usize,
    h: T,
}

fn posterior<T: Scalar>(
    points: &[Vec<T>],
    labels: &[usize],
    n_groups: usize,
    h: T,
    x: &[T],
    skip: Option<usize>,
) -> (usize, Vec<T>) {
    let mut mass = vec![T::zero(); n_groups];
    let mut nearest = (T::infinity(), usize::MAX);
    let two_h2 = T::lit(2.0) * h * h;
    for (i, p) in points.iter().enumerate() {
        if Some(i) == skip {
            continue;
        }
        let d2 = squared_euclidean(p, x);
        if d2 < nearest.0 {
            nearest = (d2, i);
        }
        mass[labels[i]] += (-d2 / two_h2).exp();
    }
    let total: T = mass.iter().copied().sum();
    if !(total > T::zero()) {
        let c = labels[nearest.1];
        let mut post = vec![T::zero(); n_groups];
        post[c] = T::one();
        return (c, post);
    }
    let post: Vec<T> = mass.iter().map(|&m| m / total).collect();
    let mut c = 0;
    for (k, &p) in post.iter().enumerate() {
        if p > post[c] {
            c = k;
        }
    }
    (c, post)
}

impl<T: Scalar> NpModel<T> {
    /// `bandwidth = None` starts from the 15% quantile `h0` of the pairwise
    /// distances and keeps the leave-one-out best of
    /// `h0 * {1, 2^-0.5, 2^0.5, 2^-1, 2}` (first listed wins ties).
    pub fn fit(features: ArrayView2<T>, labels: &[usize], n_groups: usize, bandwidth: Option<T>) -> Result<Self> {
        let n = features.nrows();
        if n < 2 {
            return Err(Error::Fit("kernel classifier needs at least two training points".into()));
        }
        let points: Vec<Vec<T>> = features.rows().into_iter().map(|r| r.to_vec()).collect();
        let h = match bandwidth {
            Some(h) if !(h > T::zero()) || !h.is_finite() => return Err(Error::Bandwidth(h.as_f64())),
            Some(h) => h,
            None => {
                let mut d: Vec<T> = (0..n)
                    .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                    .map(|(i, j)| squared_euclidean(&points[i], &points[j]).sqrt())
                    .collect();
                sort_scalars(&mut d);
                let mut h0 = quantile_sorted(&d, T::lit(NP_BANDWIDTH_QUANTILE));
                if !(h0 > T::zero()) {
                    h0 = d.iter().copied().find(|v| *v > T::zero()).unwrap_or(T::one());
                }
                let grid: Vec<T> = [0.0, -0.5, 0.5, -1.0, 1.0].iter().map(|&e| h0 * T::lit(2f64.powf(e))).collect();
                let errors: Vec<usize> = grid
                    .iter()
                    .map(|&h| {
                        (0..n)
                            .into_par_iter()
                            .filter(|&i| posterior(&points, labels, n_groups, h, &points[i], Some(i)).0 != labels[i])
                            .count()
                    })
                    .collect();
                let best = (0..grid.len()).min_by_key(|&k| (errors[k], k)).expect("grid");
                grid[best]
            }
        };
        Ok(NpModel { points, labels: labels.to_vec(), n_groups, h })
    }

    pub fn bandwidth(&self) -> T {
        self.h
    }

    pub fn predict_row(&self, x: &[T]) -> (usize, Vec<T>) {
        posterior(&self.points, &self.labels, self.n_groups, self.h, x, None)
    }
}
