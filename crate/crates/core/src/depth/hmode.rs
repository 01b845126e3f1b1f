use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::fm::check_grid;
use crate::error::{Error, Result};
use crate::fdata::{Grid, MultiFunctionalData};
use crate::{gaussian_kernel, quantile_sorted, sort_scalars, Scalar};

/// Squared L2 distances between every target curve and every reference
/// curve of one component, `n_target x n_reference`.
fn cross_distances_sq<T: Scalar>(grid: &Grid<T>, a: &Array2<T>, b: &Array2<T>) -> Array2<T> {
    let row = |m: &Array2<T>, i: usize| -> Vec<T> { m.row(i).to_vec() };
    let brows: Vec<Vec<T>> = (0..b.nrows()).map(|k| row(b, k)).collect();
    Array2::from_shape_fn((a.nrows(), b.nrows()), |(i, k)| {
        let ai = a.row(i);
        let ai = ai.as_slice().expect("standard layout");
        grid.l2_distance_sq_unchecked(ai, &brows[k])
    })
}

/// Pairwise distances `d(x_i, x_j)`, `i < j`, under the product metric
/// `sqrt(sum_j (m_j / s_j)^2)` over the listed components.
pub fn pairwise_distances<T: Scalar>(
    data: &MultiFunctionalData<T>,
    components: &[usize],
    scales: &[T],
) -> Vec<T> {
    let n = data.n_curves();
    let mut sq = vec![T::zero(); n * n.saturating_sub(1) / 2];
    for (&j, &s) in components.iter().zip(scales) {
        let comp = data.component(j);
        let grid = comp.grid();
        let s2 = s * s;
        let mut idx = 0;
        for i in 0..n {
            for k in (i + 1)..n {
                sq[idx] += grid.l2_distance_sq_unchecked(comp.curve(i), comp.curve(k)) / s2;
                idx += 1;
            }
        }
    }
    sq.into_iter().map(|v| v.sqrt()).collect()
}

fn quantile_of<T: Scalar>(mut d: Vec<T>, q: T) -> T {
    sort_scalars(&mut d);
    quantile_sorted(&d, q)
}

fn check_quantile(q: f64) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Parameter(format!("bandwidth quantile must lie in (0, 1), got {q}")));
    }
    Ok(())
}

/// Bandwidth as the `quantile` of the pairwise distances under the product
/// metric over all components (the L2 metric when there is one component).
pub fn fit_hm_bandwidth<T: Scalar>(reference: &MultiFunctionalData<T>, quantile: f64) -> Result<T> {
    let comps: Vec<usize> = (0..reference.n_components()).collect();
    let scales = vec![T::one(); comps.len()];
    bandwidth_for(reference, &comps, &scales, quantile)
}

fn bandwidth_for<T: Scalar>(
    reference: &MultiFunctionalData<T>,
    components: &[usize],
    scales: &[T],
    quantile: f64,
) -> Result<T> {
    check_quantile(quantile)?;
    if reference.n_curves() < 2 {
        return Err(Error::Parameter("bandwidth selection needs at least two curves".into()));
    }
    for &j in components {
        reference.component(j).require_complete()?;
    }
    let d = pairwise_distances(reference, components, scales);
    if d.iter().all(|v| *v == T::zero()) {
        return Err(Error::DegenerateSample("all pairwise distances are zero".into()));
    }
    Ok(quantile_of(d, T::lit(quantile)))
}

/// Frozen h-mode depth reference: the curves of the used components, their
/// metric scales and the bandwidth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct HModeDepth<T: Scalar> {
    components: Vec<usize>,
    grids: Vec<Grid<T>>,
    reference: Vec<Array2<T>>,
    scales: Vec<T>,
    h: T,
}

impl<T: Scalar> HModeDepth<T> {
    /// Fits on the listed components. With several components the metric is
    /// the product metric; if `scale_components` is set, each component's
    /// distance is first divided by its own `quantile` bandwidth so that no
    /// component dominates by its units alone.
    pub fn fit(
        reference: &MultiFunctionalData<T>,
        components: &[usize],
        quantile: f64,
        scale_components: bool,
    ) -> Result<Self> {
        if components.is_empty() || components.iter().any(|&j| j >= reference.n_components()) {
            return Err(Error::Parameter(format!(
                "component selection {components:?} invalid for {} components",
                reference.n_components()
            )));
        }
        let scales: Vec<T> = if scale_components && components.len() > 1 {
            components
                .iter()
                .map(|&j| match bandwidth_for(reference, &[j], &[T::one()], quantile) {
                    Ok(s) if s > T::zero() => Ok(s),
                    Ok(_) | Err(Error::DegenerateSample(_)) => Ok(T::one()),
                    Err(e) => Err(e),
                })
                .collect::<Result<_>>()?
        } else {
            vec![T::one(); components.len()]
        };
        let h = bandwidth_for(reference, components, &scales, quantile)?;
        Ok(HModeDepth {
            components: components.to_vec(),
            grids: components.iter().map(|&j| reference.component(j).grid().clone()).collect(),
            reference: components.iter().map(|&j| reference.component(j).values().clone()).collect(),
            scales,
            h,
        })
    }

    pub fn bandwidth(&self) -> T {
        self.h
    }

    pub fn scales(&self) -> &[T] {
        &self.scales
    }

    /// Replaces the bandwidth.
    pub fn with_bandwidth(mut self, h: T) -> Result<Self> {
        if !(h > T::zero()) || !h.is_finite() {
            return Err(Error::Bandwidth(h.as_f64()));
        }
        self.h = h;
        Ok(self)
    }

    /// `N^{-1} sum_k K(m(x, x_k) / h)` for every target curve.
    pub fn score(&self, target: &MultiFunctionalData<T>) -> Result<Vec<T>> {
        if !(self.h > T::zero()) {
            return Err(Error::Bandwidth(self.h.as_f64()));
        }
        let n_ref = self.reference[0].nrows();
        let mut sq = Array2::<T>::zeros((target.n_curves(), n_ref));
        for (((&j, grid), r), &s) in self.components.iter().zip(&self.grids).zip(&self.reference).zip(&self.scales) {
            if j >= target.n_components() {
                return Err(Error::Dimension(format!("target lacks component {j}")));
            }
            let comp = target.component(j);
            check_grid(grid, comp.grid())?;
            comp.require_complete()?;
            let d = cross_distances_sq(grid, comp.values(), r);
            sq.zip_mut_with(&d, |acc, &v| *acc += v / (s * s));
        }
        let n = T::from_count(n_ref);
        Ok(sq
            .rows()
            .into_iter()
            .map(|row| row.iter().map(|&d2| gaussian_kernel(d2.sqrt() / self.h)).sum::<T>() / n)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fdata::FunctionalData;

    fn single(rows: &[Vec<f64>]) -> MultiFunctionalData<f64> {
        let grid = Grid::equispaced(0.0, 1.0, rows[0].len()).unwrap();
        MultiFunctionalData::single(FunctionalData::from_rows(grid, rows).unwrap())
    }

    #[test]
    fn identical_reference_gives_kernel_peak() {
        let r = single(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 4.0]]);
        let m = HModeDepth::fit(&r, &[0], 0.15, true).unwrap();
        let all_same = single(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]);
        let m = HModeDepth { reference: vec![all_same.component(0).values().clone()], ..m };
        let d = m.score(&single(&[vec![1.0, 2.0, 3.0]])).unwrap();
        assert!((d[0] - 0.398_942_280_401_432_7).abs() < 1e-15);
    }

    #[test]
    fn two_curve_example() {
        // constant curves on [0, 1]: L2 distance equals the level gap
        let r = single(&[vec![0.0; 5], vec![1.5; 5]]);
        let m = HModeDepth::fit(&r, &[0], 0.5, false).unwrap().with_bandwidth(1.5).unwrap();
        let d = m.score(&single(&[vec![0.0; 5]])).unwrap();
        let expected = (gaussian_kernel(0.0f64) + gaussian_kernel(1.0f64)) / 2.0;
        assert!((d[0] - expected).abs() < 1e-14);
        assert!((expected - 0.32046).abs() < 1e-5);
    }

    #[test]
    fn bandwidth_quantiles() {
        // distances 1, 2, 3 between constant curves 0, 1, 3
        let r = single(&[vec![0.0; 4], vec![1.0; 4], vec![3.0; 4]]);
        assert!((fit_hm_bandwidth(&r, 0.5).unwrap() - 2.0).abs() < 1e-12);
        let eq = single(&[vec![0.0; 4], vec![2.0; 4]]);
        assert!((fit_hm_bandwidth(&eq, 0.15).unwrap() - 2.0).abs() < 1e-12);
        let same = single(&[vec![1.0; 4], vec![1.0; 4]]);
        assert!(matches!(fit_hm_bandwidth(&same, 0.15), Err(Error::DegenerateSample(_))));
        assert!(fit_hm_bandwidth(&r, 1.0).is_err());
    }

    #[test]
    fn tiny_bandwidth_leaves_only_self_term() {
        let r = single(&[vec![0.0, 1.0, 0.0], vec![2.0, 1.0, 0.5], vec![-1.0, 0.0, 3.0]]);
        let m = HModeDepth::fit(&r, &[0], 0.15, false).unwrap().with_bandwidth(1e-6).unwrap();
        for d in m.score(&r).unwrap() {
            assert!((d - gaussian_kernel(0.0f64) / 3.0).abs() < 1e-15);
        }
        assert!(m.clone().with_bandwidth(0.0).is_err());
    }
}
