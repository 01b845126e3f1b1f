use ndarray::{Array1, Array2};

use super::{BSplineBasis, FunctionalData};
use crate::error::{Error, Result};
use crate::linalg;
use crate::Scalar;

/// Fewest observed points (and basis functions) a curve may be imputed from.
pub const MIN_IMPUTATION_POINTS: usize = 4;

/// Fills missing values with a per-curve least-squares cubic B-spline fit.
///
/// Observed entries are kept verbatim. A curve with fewer than
/// `basis_size` observed points is fitted with `observed - 1` functions
/// (never fewer than 4).
pub fn impute_missing<T: Scalar>(ds: &FunctionalData<T>, basis_size: usize) -> Result<FunctionalData<T>> {
    if basis_size < MIN_IMPUTATION_POINTS {
        return Err(Error::Parameter(format!("basis_size must be at least 4, got {basis_size}")));
    }
    let Some(mask) = ds.missing_mask() else {
        return Ok(ds.clone());
    };
    let grid = ds.grid();
    let mut values = ds.values().clone();
    for i in 0..ds.n_curves() {
        let observed: Vec<usize> = (0..ds.n_points()).filter(|&j| !mask[[i, j]]).collect();
        if observed.len() == ds.n_points() {
            continue;
        }
        if observed.len() < MIN_IMPUTATION_POINTS {
            return Err(Error::Imputation {
                curve: i,
                observed: observed.len(),
            });
        }
        let k = if observed.len() >= basis_size {
            basis_size
        } else {
            let k = (observed.len() - 1).max(MIN_IMPUTATION_POINTS);
            log::warn!(
                "curve {i}: {} observed points, imputation basis reduced from {basis_size} to {k}",
                observed.len()
            );
            k
        };
        let basis = BSplineBasis::clamped(grid.start(), grid.end(), k)?;
        let mut design = Array2::<T>::zeros((observed.len(), k));
        let mut y = Array1::<T>::zeros(observed.len());
        for (r, &j) in observed.iter().enumerate() {
            design.row_mut(r).assign(&Array1::from(basis.evaluate(grid.points()[j])));
            y[r] = values[[i, j]];
        }
        let gram = design.t().dot(&design);
        let rhs = design.t().dot(&y);
        let (l, _) = linalg::regularized_cholesky(gram.view(), T::lit(1e-10))
            .ok_or_else(|| Error::Numerical(format!("imputation system for curve {i} is degenerate")))?;
        let coef = linalg::cholesky_solve(l.view(), rhs.view());
        for j in (0..ds.n_points()).filter(|&j| mask[[i, j]]) {
            let b = basis.evaluate(grid.points()[j]);
            values[[i, j]] = b.iter().zip(coef.iter()).fold(T::zero(), |s, (&a, &c)| s + a * c);
        }
    }
    FunctionalData::new(grid.clone(), values)
}
