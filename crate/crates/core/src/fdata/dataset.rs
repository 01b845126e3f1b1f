use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use super::Grid;
use crate::error::{Error, Result};
use crate::Scalar;

/// `N` curves sampled on a common grid, stored row-wise (curve `i` is row `i`).
///
/// Missing observations are recorded in `missing` (true = missing); the
/// corresponding entries of `values` are NaN and must not be read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct FunctionalData<T: Scalar> {
    grid: Grid<T>,
    values: Array2<T>,
    missing: Option<Array2<bool>>,
}

impl<T: Scalar> FunctionalData<T> {
    /// Complete dataset; every value must be finite.
    pub fn new(grid: Grid<T>, values: Array2<T>) -> Result<Self> {
        if values.ncols() != grid.len() {
            return Err(Error::Dimension(format!(
                "{} columns for a grid of {} points",
                values.ncols(),
                grid.len()
            )));
        }
        if let Some(((i, j), _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Format(format!("non-finite value at curve {i}, point {j}")));
        }
        Ok(FunctionalData {
            grid,
            values: values.as_standard_layout().into_owned(),
            missing: None,
        })
    }

    /// Dataset with an explicit missing-value mask.
    pub fn with_mask(grid: Grid<T>, mut values: Array2<T>, missing: Array2<bool>) -> Result<Self> {
        if values.ncols() != grid.len() || missing.dim() != values.dim() {
            return Err(Error::Dimension("values, mask and grid disagree".into()));
        }
        for ((i, j), v) in values.indexed_iter_mut() {
            if missing[[i, j]] {
                *v = T::nan();
            } else if !v.is_finite() {
                return Err(Error::Format(format!("non-finite value at curve {i}, point {j}")));
            }
        }
        let any = missing.iter().any(|&m| m);
        Ok(FunctionalData {
            grid,
            values: values.as_standard_layout().into_owned(),
            missing: if any { Some(missing) } else { None },
        })
    }

    pub fn from_rows(grid: Grid<T>, rows: &[Vec<T>]) -> Result<Self> {
        let t = grid.len();
        if let Some(i) = rows.iter().position(|r| r.len() != t) {
            return Err(Error::Dimension(format!("row {i} has length {}, expected {t}", rows[i].len())));
        }
        let flat: Vec<T> = rows.iter().flatten().copied().collect();
        let values = Array2::from_shape_vec((rows.len(), t), flat)
            .map_err(|e| Error::Dimension(e.to_string()))?;
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &Array2<T> {
        &self.values
    }

    pub fn n_curves(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_points(&self) -> usize {
        self.values.ncols()
    }

    pub fn missing_mask(&self) -> Option<&Array2<bool>> {
        self.missing.as_ref()
    }

    pub fn is_missing(&self, curve: usize, point: usize) -> bool {
        self.missing.as_ref().is_some_and(|m| m[[curve, point]])
    }

    pub fn is_complete(&self) -> bool {
        self.missing.is_none()
    }

    pub(crate) fn require_complete(&self) -> Result<()> {
        if self.is_complete() {
            Ok(())
        } else {
            Err(Error::Format("dataset has missing values; impute them first".into()))
        }
    }

    /// Row `i` as a contiguous slice.
    pub fn curve(&self, i: usize) -> &[T] {
        self.values
            .row(i)
            .to_slice()
            .expect("values are stored in standard layout")
    }

    pub fn curve_view(&self, i: usize) -> ArrayView1<'_, T> {
        self.values.row(i)
    }

    pub fn select(&self, rows: &[usize]) -> Self {
        FunctionalData {
            grid: self.grid.clone(),
            values: self.values.select(Axis(0), rows),
            missing: self.missing.as_ref().map(|m| m.select(Axis(0), rows)),
        }
    }

    /// Replaces the values, keeping grid; used by transforms that preserve shape.
    pub(crate) fn with_values(&self, values: Array2<T>) -> Result<Self> {
        Self::new(self.grid.clone(), values)
    }

    /// Pointwise mean curve (complete data only).
    pub fn mean_curve(&self) -> Vec<T> {
        let n = T::from_count(self.n_curves().max(1));
        self.values
            .sum_axis(Axis(0))
            .iter()
            .map(|&s| s / n)
            .collect()
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.grid == other.grid
    }
}

/// Multivariate functional data: `p` component datasets over the same curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct MultiFunctionalData<T: Scalar> {
    components: Vec<FunctionalData<T>>,
    names: Vec<String>,
}

impl<T: Scalar> MultiFunctionalData<T> {
    pub fn new(components: Vec<FunctionalData<T>>, names: Vec<String>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Parameter("at least one component is required".into()));
        }
        if names.len() != components.len() {
            return Err(Error::Dimension("one name per component is required".into()));
        }
        let n = components[0].n_curves();
        if let Some(j) = components.iter().position(|c| c.n_curves() != n) {
            return Err(Error::Dimension(format!(
                "component {j} has {} curves, component 0 has {n}",
                components[j].n_curves()
            )));
        }
        Ok(MultiFunctionalData { components, names })
    }

    /// Single-component dataset named `x`.
    pub fn single(data: FunctionalData<T>) -> Self {
        MultiFunctionalData {
            components: vec![data],
            names: vec!["x".to_string()],
        }
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn n_curves(&self) -> usize {
        self.components[0].n_curves()
    }

    pub fn component(&self, j: usize) -> &FunctionalData<T> {
        &self.components[j]
    }

    pub fn components(&self) -> &[FunctionalData<T>] {
        &self.components
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn select(&self, rows: &[usize]) -> Self {
        MultiFunctionalData {
            components: self.components.iter().map(|c| c.select(rows)).collect(),
            names: self.names.clone(),
        }
    }

    /// True when every component is sampled on the same grid.
    pub fn has_common_grid(&self) -> bool {
        self.components.windows(2).all(|w| w[0].same_grid(&w[1]))
    }
}

/// Multivariate functional data with group labels `0..g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct LabeledFunctionalData<T: Scalar> {
    data: MultiFunctionalData<T>,
    labels: Vec<usize>,
    n_groups: usize,
}

impl<T: Scalar> LabeledFunctionalData<T> {
    /// The number of groups is `max(label) + 1`; every group must occur.
    pub fn new(data: MultiFunctionalData<T>, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != data.n_curves() {
            return Err(Error::Dimension(format!(
                "{} labels for {} curves",
                labels.len(),
                data.n_curves()
            )));
        }
        let n_groups = labels.iter().max().map_or(0, |&m| m + 1);
        let counts = group_counts(&labels, n_groups);
        if let Some(g) = counts.iter().position(|&c| c == 0) {
            return Err(Error::Parameter(format!("group {g} has no curves")));
        }
        Ok(LabeledFunctionalData {
            data,
            labels,
            n_groups,
        })
    }

    pub fn data(&self) -> &MultiFunctionalData<T> {
        &self.data
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_groups(&self) -> usize {
        self.n_groups
    }

    /// Row indices of the curves in group `g`, ascending.
    pub fn group_rows(&self, g: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == g)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn group_counts(&self) -> Vec<usize> {
        group_counts(&self.labels, self.n_groups)
    }

    pub fn into_parts(self) -> (MultiFunctionalData<T>, Vec<usize>) {
        (self.data, self.labels)
    }
}

pub(crate) fn group_counts(labels: &[usize], n_groups: usize) -> Vec<usize> {
    let mut counts = vec![0; n_groups];
    for &l in labels {
        if l < n_groups {
            counts[l] += 1;
        }
    }
    counts
}
