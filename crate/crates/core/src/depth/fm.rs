use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{MahalanobisReference, SortedSample, UnivariateDepthKind};
use crate::error::{Error, Result};
use crate::fdata::{FunctionalData, Grid, MultiFunctionalData};
use crate::Scalar;

pub(crate) fn check_grid<T: Scalar>(expected: &Grid<T>, got: &Grid<T>) -> Result<()> {
    if expected.len() != got.len() {
        return Err(Error::Dimension(format!(
            "target grid has {} points, the reference grid {}",
            got.len(),
            expected.len()
        )));
    }
    if let Some(k) = (0..got.len()).find(|&k| got.points()[k] != expected.points()[k]) {
        return Err(Error::Dimension(format!(
            "target grid point {k} is {}, the reference has {}",
            got.points()[k],
            expected.points()[k]
        )));
    }
    Ok(())
}

/// Reference cross-sections for the integrated depth of one component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct IntegratedDepth<T: Scalar> {
    grid: Grid<T>,
    kind: UnivariateDepthKind,
    sections: Vec<SortedSample<T>>,
}

impl<T: Scalar> IntegratedDepth<T> {
    pub fn fit(reference: &FunctionalData<T>, kind: UnivariateDepthKind) -> Result<Self> {
        reference.require_complete()?;
        let values = reference.values();
        let sections = (0..reference.n_points())
            .map(|t| SortedSample::new(values.column(t).to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Ok(IntegratedDepth { grid: reference.grid().clone(), kind, sections })
    }

    pub fn score(&self, target: &FunctionalData<T>) -> Result<Vec<T>> {
        check_grid(&self.grid, target.grid())?;
        target.require_complete()?;
        let mut integrand = vec![T::zero(); self.grid.len()];
        (0..target.n_curves())
            .map(|i| {
                for ((d, s), &x) in integrand.iter_mut().zip(&self.sections).zip(target.curve(i)) {
                    *d = s.depth(self.kind, x)?;
                }
                Ok(self.grid.integrate_unchecked(&integrand))
            })
            .collect()
    }
}

/// Reference cross-sections for the integrated p-variate Mahalanobis depth
/// of component vectors sharing one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct JointIntegratedDepth<T: Scalar> {
    grid: Grid<T>,
    p: usize,
    sections: Vec<MahalanobisReference<T>>,
}

fn require_common_grid<T: Scalar>(data: &MultiFunctionalData<T>) -> Result<()> {
    if !data.has_common_grid() {
        return Err(Error::CommonSupport("the components are sampled on different grids".into()));
    }
    data.components().iter().try_for_each(|c| c.require_complete())
}

fn cross_section<T: Scalar>(data: &MultiFunctionalData<T>, t: usize) -> Array2<T> {
    let p = data.n_components();
    Array2::from_shape_fn((data.n_curves(), p), |(i, j)| data.component(j).values()[[i, t]])
}

impl<T: Scalar> JointIntegratedDepth<T> {
    pub fn fit(reference: &MultiFunctionalData<T>) -> Result<Self> {
        require_common_grid(reference)?;
        let grid = reference.component(0).grid().clone();
        let sections = (0..grid.len())
            .map(|t| MahalanobisReference::fit(cross_section(reference, t).view()))
            .collect::<Result<Vec<_>>>()?;
        Ok(JointIntegratedDepth { grid, p: reference.n_components(), sections })
    }

    pub fn score(&self, target: &MultiFunctionalData<T>) -> Result<Vec<T>> {
        if target.n_components() != self.p {
            return Err(Error::Dimension(format!(
                "target has {} components, reference has {}",
                target.n_components(),
                self.p
            )));
        }
        require_common_grid(target)?;
        check_grid(&self.grid, target.component(0).grid())?;
        let mut integrand = vec![T::zero(); self.grid.len()];
        let mut v = vec![T::zero(); self.p];
        (0..target.n_curves())
            .map(|i| {
                for (t, d) in integrand.iter_mut().enumerate() {
                    for (j, vj) in v.iter_mut().enumerate() {
                        *vj = target.component(j).values()[[i, t]];
                    }
                    *d = self.sections[t].depth_slice(&v)?;
                }
                Ok(self.grid.integrate_unchecked(&integrand))
            })
            .collect()
    }
}

/// Integrated depth of every target curve: the trapezoid integral of the
/// univariate depth of `x_i(t)` within the reference cross-section at `t`.
pub fn fm_depth<T: Scalar>(
    target: &FunctionalData<T>,
    reference: &FunctionalData<T>,
    kind: UnivariateDepthKind,
) -> Result<Vec<T>> {
    IntegratedDepth::fit(reference, kind)?.score(target)
}

/// Integrated p-variate Mahalanobis depth of the component vectors.
pub fn fm_depth_pvariate<T: Scalar>(
    target: &MultiFunctionalData<T>,
    reference: &MultiFunctionalData<T>,
) -> Result<Vec<T>> {
    if reference.n_components() < 2 {
        return Err(Error::Parameter("the p-variate integrated depth needs at least two components".into()));
    }
    JointIntegratedDepth::fit(reference)?.score(target)
}
