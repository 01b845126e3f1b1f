use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::fm::check_grid;
use super::{MahalanobisReference, SortedSample, UnivariateDepthKind};
use crate::error::{Error, Result};
use crate::fdata::{FunctionalData, Grid, MultiFunctionalData};
use crate::Scalar;

/// `r` random directions on `grid`: standard gaussian values at the nodes,
/// scaled to unit trapezoid L2 norm. Directions for component `stream` are a
/// function of `(seed, stream)` only.
pub fn random_directions<T: Scalar>(grid: &Grid<T>, r: usize, seed: u64, stream: u64) -> Array2<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut out = Array2::<T>::zeros((r, grid.len()));
    for mut row in out.rows_mut() {
        loop {
            for v in row.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v = T::lit(z);
            }
            let s = row.as_slice().expect("standard layout");
            let norm = grid.inner_unchecked(s, s).sqrt();
            if norm > T::zero() {
                row.mapv_inplace(|v| v / norm);
                break;
            }
        }
    }
    out
}

fn project<T: Scalar>(grid: &Grid<T>, directions: &Array2<T>, data: &FunctionalData<T>) -> Array2<T> {
    Array2::from_shape_fn((data.n_curves(), directions.nrows()), |(i, r)| {
        grid.inner_unchecked(directions.row(r).as_slice().expect("standard layout"), data.curve(i))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
enum Projected<T: Scalar> {
    /// One univariate sample per direction.
    Univariate { kind: UnivariateDepthKind, sections: Vec<SortedSample<T>> },
    /// One p-variate Mahalanobis reference per direction.
    Joint(Vec<MahalanobisReference<T>>),
}

/// Frozen random projection depth: directions per used component and the
/// projected reference sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct RandomProjectionDepth<T: Scalar> {
    components: Vec<usize>,
    grids: Vec<Grid<T>>,
    directions: Vec<Array2<T>>,
    projected: Projected<T>,
}

impl<T: Scalar> RandomProjectionDepth<T> {
    /// Single-component depth with univariate `kind`.
    pub fn fit_component(
        reference: &MultiFunctionalData<T>,
        component: usize,
        kind: UnivariateDepthKind,
        r: usize,
        seed: u64,
    ) -> Result<Self> {
        let (grids, directions, proj) = Self::prepare(reference, &[component], r, seed)?;
        let p = &proj[0];
        let sections = (0..r)
            .map(|k| SortedSample::new(p.column(k).to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Ok(RandomProjectionDepth {
            components: vec![component],
            grids,
            directions,
            projected: Projected::Univariate { kind, sections },
        })
    }

    /// Joint depth over all components: the projections of the components on
    /// their own `r`-th direction form a p-vector scored by Mahalanobis depth.
    pub fn fit_joint(reference: &MultiFunctionalData<T>, r: usize, seed: u64) -> Result<Self> {
        let comps: Vec<usize> = (0..reference.n_components()).collect();
        let (grids, directions, proj) = Self::prepare(reference, &comps, r, seed)?;
        let n = reference.n_curves();
        let refs = (0..r)
            .map(|k| {
                let m = Array2::from_shape_fn((n, comps.len()), |(i, j)| proj[j][[i, k]]);
                MahalanobisReference::fit(m.view())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RandomProjectionDepth { components: comps, grids, directions, projected: Projected::Joint(refs) })
    }

    #[allow(clippy::type_complexity)]
    fn prepare(
        reference: &MultiFunctionalData<T>,
        components: &[usize],
        r: usize,
        seed: u64,
    ) -> Result<(Vec<Grid<T>>, Vec<Array2<T>>, Vec<Array2<T>>)> {
        if r == 0 {
            return Err(Error::Parameter("at least one projection is required".into()));
        }
        let mut grids = Vec::new();
        let mut dirs = Vec::new();
        let mut proj = Vec::new();
        for &j in components {
            if j >= reference.n_components() {
                return Err(Error::Parameter(format!("no component {j}")));
            }
            let comp = reference.component(j);
            comp.require_complete()?;
            let a = random_directions(comp.grid(), r, seed, j as u64);
            proj.push(project(comp.grid(), &a, comp));
            grids.push(comp.grid().clone());
            dirs.push(a);
        }
        Ok((grids, dirs, proj))
    }

    pub fn n_projections(&self) -> usize {
        self.directions[0].nrows()
    }

    /// Directions of the `k`-th used component, one per row.
    pub fn directions(&self, k: usize) -> &Array2<T> {
        &self.directions[k]
    }

    pub fn score(&self, target: &MultiFunctionalData<T>) -> Result<Vec<T>> {
        let mut proj = Vec::with_capacity(self.components.len());
        for ((&j, grid), a) in self.components.iter().zip(&self.grids).zip(&self.directions) {
            if j >= target.n_components() {
                return Err(Error::Dimension(format!("target lacks component {j}")));
            }
            let comp = target.component(j);
            check_grid(grid, comp.grid())?;
            comp.require_complete()?;
            proj.push(project(grid, a, comp));
        }
        let r = self.n_projections();
        let rr = T::from_count(r);
        (0..target.n_curves())
            .map(|i| {
                let mut total = T::zero();
                match &self.projected {
                    Projected::Univariate { kind, sections } => {
                        for (k, s) in sections.iter().enumerate() {
                            total += s.depth(*kind, proj[0][[i, k]])?;
                        }
                    }
                    Projected::Joint(refs) => {
                        let mut v = vec![T::zero(); proj.len()];
                        for (k, m) in refs.iter().enumerate() {
                            for (vj, pj) in v.iter_mut().zip(&proj) {
                                *vj = pj[[i, k]];
                            }
                            total += m.depth_slice(&v)?;
                        }
                    }
                }
                Ok(total / rr)
            })
            .collect()
    }
}
