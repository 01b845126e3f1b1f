//! k-nearest-neighbour majority vote in feature space.

use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{squared_euclidean, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct KnnModel<T: Scalar> {
    points: Vec<Vec<T>>,
    labels: Vec<usize>,
    n_groups: usize,
    k: usize,
}

/// Neighbours sorted by distance, ties by training index.
fn neighbours<T: Scalar>(points: &[Vec<T>], x: &[T], skip: Option<usize>) -> Vec<(T, usize)> {
    let mut d: Vec<(T, usize)> = points
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(i, p)| (squared_euclidean(p, x), i))
        .collect();
    d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
    d
}

/// Majority class among the first `k` neighbours; ties go to the class of
/// the nearest neighbour among the tied classes.
fn vote(sorted: &[(f64, usize)], labels: &[usize], n_groups: usize, k: usize) -> (usize, Vec<usize>) {
    let mut votes = vec![0usize; n_groups];
    for &(_, i) in &sorted[..k] {
        votes[labels[i]] += 1;
    }
    let top = *votes.iter().max().expect("classes");
    let winner = sorted[..k]
        .iter()
        .map(|&(_, i)| labels[i])
        .find(|&c| votes[c] == top)
        .expect("a voting class");
    (winner, votes)
}

fn as_f64<T: Scalar>(d: Vec<(T, usize)>) -> Vec<(f64, usize)> {
    d.into_iter().map(|(v, i)| (v.as_f64(), i)).collect()
}

impl<T: Scalar> KnnModel<T> {
    /// `k = None` selects an odd `k` in `1, 3, ..., 2 floor(sqrt N) + 1` by
    /// leave-one-out error, the smallest on ties.
    pub fn fit(features: ArrayView2<T>, labels: &[usize], n_groups: usize, k: Option<usize>) -> Result<Self> {
        let n = features.nrows();
        if n < 2 {
            return Err(Error::Fit("kNN needs at least two training points".into()));
        }
        let points: Vec<Vec<T>> = features.rows().into_iter().map(|r| r.to_vec()).collect();
        let k = match k {
            Some(k) if k == 0 || k > n => {
                return Err(Error::Parameter(format!("k = {k} outside 1..={n}")));
            }
            Some(k) => k,
            None => {
                let kmax = (2 * (n as f64).sqrt().floor() as usize + 1).min(n - 1);
                let ks: Vec<usize> = (1..=kmax).step_by(2).collect();
                let errors: Vec<Vec<usize>> = (0..n)
                    .into_par_iter()
                    .map(|i| {
                        let nb = as_f64(neighbours(&points, &points[i], Some(i)));
                        ks.iter().map(|&k| usize::from(vote(&nb, labels, n_groups, k).0 != labels[i])).collect()
                    })
                    .collect();
                let totals: Vec<usize> = (0..ks.len()).map(|j| errors.iter().map(|e| e[j]).sum()).collect();
                let best = (0..ks.len()).min_by_key(|&j| (totals[j], j)).expect("k grid nonempty");
                ks[best]
            }
        };
        Ok(KnnModel { points, labels: labels.to_vec(), n_groups, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn predict_row(&self, x: &[T]) -> (usize, Vec<T>) {
        let nb = as_f64(neighbours(&self.points, x, None));
        let (c, votes) = vote(&nb, &self.labels, self.n_groups, self.k);
        let k = T::from_count(self.k);
        (c, votes.into_iter().map(|v| T::from_count(v) / k).collect())
    }
}
