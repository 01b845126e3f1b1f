//! Distance covariance and correlation, and depth selection by distance
//! correlation with the class labels.

use std::io::Write;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdata::{FunctionalData, MultiFunctionalData};
use crate::{euclidean, Scalar};

/// Symmetric matrix of pairwise distances with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix<T: Scalar> {
    entries: Array2<T>,
}

impl<T: Scalar> DistanceMatrix<T> {
    fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("distance matrix of an empty sample".into()));
        }
        let mut entries = Array2::zeros((n, n));
        for i in 0..n {
            for j in (i + 1)..n {
                let d = f(i, j);
                entries[[i, j]] = d;
                entries[[j, i]] = d;
            }
        }
        Ok(DistanceMatrix { entries })
    }

    /// Validates an externally computed matrix.
    pub fn from_entries(entries: Array2<T>) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 || entries.ncols() != n {
            return Err(Error::Dimension("distance matrix must be square and nonempty".into()));
        }
        let tol = T::lit(1e-12);
        for i in 0..n {
            if entries[[i, i]] != T::zero() {
                return Err(Error::Parameter("distance matrix diagonal must be zero".into()));
            }
            for j in 0..n {
                let (a, b) = (entries[[i, j]], entries[[j, i]]);
                if !(a >= T::zero()) || (a - b).abs() > tol * T::one().max(a.abs()) {
                    return Err(Error::Parameter("distance matrix must be symmetric and nonnegative".into()));
                }
            }
        }
        Ok(DistanceMatrix { entries })
    }

    /// L2 distances between curves.
    pub fn functional(data: &FunctionalData<T>) -> Result<Self> {
        data.require_complete()?;
        let grid = data.grid();
        Self::from_fn(data.n_curves(), |i, j| grid.l2_distance_sq_unchecked(data.curve(i), data.curve(j)).sqrt())
    }

    /// Product metric `sqrt(sum_j m_j^2)` over all components.
    pub fn multi_functional(data: &MultiFunctionalData<T>) -> Result<Self> {
        for c in data.components() {
            c.require_complete()?;
        }
        Self::from_fn(data.n_curves(), |i, k| {
            data.components()
                .iter()
                .map(|c| c.grid().l2_distance_sq_unchecked(c.curve(i), c.curve(k)))
                .sum::<T>()
                .sqrt()
        })
    }

    /// Euclidean distances between the rows of `x`.
    pub fn euclidean(x: ArrayView2<T>) -> Result<Self> {
        let rows: Vec<Vec<T>> = x.rows().into_iter().map(|r| r.to_vec()).collect();
        Self::from_fn(rows.len(), |i, j| euclidean(&rows[i], &rows[j]))
    }

    /// Distances between one-hot encoded labels: `sqrt(2)` across classes.
    pub fn labels(labels: &[usize]) -> Result<Self> {
        let d = T::lit(std::f64::consts::SQRT_2);
        Self::from_fn(labels.len(), |i, j| if labels[i] == labels[j] { T::zero() } else { d })
    }

    pub fn len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.nrows() == 0
    }

    pub fn entries(&self) -> &Array2<T> {
        &self.entries
    }

    fn double_centered(&self) -> Array2<T> {
        let n = self.len();
        let nn = T::from_count(n);
        let row: Vec<T> = (0..n).map(|i| self.entries.row(i).sum() / nn).collect();
        let grand = row.iter().copied().sum::<T>() / nn;
        Array2::from_shape_fn((n, n), |(i, j)| self.entries[[i, j]] - row[i] - row[j] + grand)
    }

    fn u_centered(&self) -> Array2<T> {
        let n = self.len();
        let row: Vec<T> = (0..n).map(|i| self.entries.row(i).sum()).collect();
        let total = row.iter().copied().sum::<T>();
        let n2 = T::from_count(n - 2);
        let n1n2 = T::from_count((n - 1) * (n - 2));
        Array2::from_shape_fn((n, n), |(i, j)| {
            if i == j {
                T::zero()
            } else {
                self.entries[[i, j]] - row[i] / n2 - row[j] / n2 + total / n1n2
            }
        })
    }
}

/// Distance correlation together with the degenerate-variance flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dcor<T> {
    pub value: T,
    /// One of the samples has zero distance variance; `value` is then 0.
    pub degenerate: bool,
}

fn products<T: Scalar>(a: &Array2<T>, b: &Array2<T>) -> T {
    a.iter().zip(b.iter()).map(|(&x, &y)| x * y).sum()
}

/// Distance correlation of two samples given by their distance matrices.
///
/// The biased version is `sqrt(V_ab^2 / sqrt(V_aa^2 V_bb^2))` from double
/// centered matrices and lies in `[0, 1]`. The bias-corrected version uses
/// U-centering, estimates the squared correlation, and may be slightly
/// negative.
pub fn dcor<T: Scalar>(a: &DistanceMatrix<T>, b: &DistanceMatrix<T>, corrected: bool) -> Result<Dcor<T>> {
    let n = a.len();
    if b.len() != n {
        return Err(Error::Dimension(format!("distance matrices of size {n} and {}", b.len())));
    }
    let min_n = if corrected { 4 } else { 2 };
    if n < min_n {
        return Err(Error::Parameter(format!("distance correlation needs at least {min_n} objects, got {n}")));
    }
    let degenerate = Dcor { value: T::zero(), degenerate: true };
    if a.entries.iter().all(|v| *v == T::zero()) || b.entries.iter().all(|v| *v == T::zero()) {
        return Ok(degenerate);
    }
    let (ca, cb) = if corrected { (a.u_centered(), b.u_centered()) } else { (a.double_centered(), b.double_centered()) };
    let vaa = products(&ca, &ca);
    let vbb = products(&cb, &cb);
    if !(vaa > T::zero() && vbb > T::zero()) {
        return Ok(degenerate);
    }
    let r = products(&ca, &cb) / (vaa * vbb).sqrt();
    let value = if corrected { r } else { r.max(T::zero()).min(T::one()).sqrt() };
    Ok(Dcor { value, degenerate: false })
}

/// Distance correlations of each candidate feature block with the labels and
/// with each other.
#[derive(Debug, Clone, PartialEq)]
pub struct DcorTable<T: Scalar> {
    pub names: Vec<String>,
    /// `dcor(candidate, labels)`.
    pub with_labels: Vec<T>,
    /// `dcor(candidate_i, candidate_j)`.
    pub pairwise: Array2<T>,
}

impl<T: Scalar> DcorTable<T> {
    /// Bias-corrected distance correlations; candidates are `N x G_k` blocks.
    pub fn compute(candidates: &[(String, Array2<T>)], labels: &[usize]) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::Parameter("no candidate depths".into()));
        }
        let y = DistanceMatrix::labels(labels)?;
        let mats = candidates
            .iter()
            .map(|(name, x)| {
                if x.nrows() != labels.len() {
                    return Err(Error::Dimension(format!(
                        "candidate {name} has {} rows, {} labels",
                        x.nrows(),
                        labels.len()
                    )));
                }
                DistanceMatrix::euclidean(x.view())
            })
            .collect::<Result<Vec<_>>>()?;
        let with_labels = mats.iter().map(|m| dcor(m, &y, true).map(|d| d.value)).collect::<Result<Vec<_>>>()?;
        let k = mats.len();
        let mut pairwise = Array2::zeros((k, k));
        for i in 0..k {
            for j in i..k {
                let d = dcor(&mats[i], &mats[j], true)?.value;
                pairwise[[i, j]] = d;
                pairwise[[j, i]] = d;
            }
        }
        Ok(DcorTable { names: candidates.iter().map(|(n, _)| n.clone()).collect(), with_labels, pairwise })
    }

    /// Greedy forward selection: the candidate most correlated with the
    /// labels first, then the best remaining candidate whose correlation with
    /// every selected one is below `redundancy_cap`. Candidates without a
    /// positive correlation with the labels are never selected.
    pub fn select(&self, max_selected: usize, redundancy_cap: T) -> Vec<String> {
        let mut chosen: Vec<usize> = Vec::new();
        while chosen.len() < max_selected {
            let best = (0..self.names.len())
                .filter(|i| !chosen.contains(i))
                .filter(|&i| self.with_labels[i] > T::zero())
                .filter(|&i| chosen.iter().all(|&c| self.pairwise[[i, c]] < redundancy_cap))
                .max_by(|&i, &j| {
                    self.with_labels[i]
                        .partial_cmp(&self.with_labels[j])
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(j.cmp(&i))
                });
            match best {
                Some(i) => chosen.push(i),
                None => break,
            }
        }
        chosen.into_iter().map(|i| self.names[i].clone()).collect()
    }

    /// CSV with candidate names as columns; first row `Y` holds the
    /// correlations with the labels, then one row per candidate.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![String::new()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        let fmt = |v: T| format!("{:.4}", v.as_f64());
        let mut row = vec!["Y".to_string()];
        row.extend(self.with_labels.iter().map(|&v| fmt(v)));
        w.write_record(&row)?;
        for (i, name) in self.names.iter().enumerate() {
            let mut row = vec![name.clone()];
            row.extend(self.pairwise.row(i).iter().map(|&v| fmt(v)));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Default redundancy threshold for [`select_depths`].
pub const DEFAULT_REDUNDANCY_CAP: f64 = 0.7;

/// Ordered names of the selected candidates.
pub fn select_depths<T: Scalar>(
    candidates: &[(String, Array2<T>)],
    labels: &[usize],
    max_selected: usize,
    redundancy_cap: T,
) -> Result<Vec<String>> {
    Ok(DcorTable::compute(candidates, labels)?.select(max_selected, redundancy_cap))
}
