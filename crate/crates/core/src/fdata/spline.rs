//! Spline derivatives of sampled curves.
//!
//! Both methods are linear in the data, so each is realized as a `T x T`
//! operator built once per grid and applied to every curve.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{BSplineBasis, FunctionalData, Grid};
use crate::error::{Error, Result};
use crate::linalg;
use crate::Scalar;

/// How derivative curves are obtained from sampled values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum DerivativeMethod {
    /// Interpolating cubic spline with not-a-knot end conditions.
    #[default]
    Interpolating,
    /// Least-squares cubic B-spline fit with `basis_size` clamped functions.
    Smoothing { basis_size: usize },
}

/// Linear operator mapping curve values on a grid to derivative values on
/// the same grid.
#[derive(Debug, Clone)]
pub struct DerivativeOperator<T: Scalar> {
    order: u8,
    matrix: Array2<T>,
}

impl<T: Scalar> DerivativeOperator<T> {
    pub fn new(grid: &Grid<T>, order: u8, method: DerivativeMethod) -> Result<Self> {
        if !(1..=2).contains(&order) {
            return Err(Error::UnsupportedOrder(order));
        }
        if grid.len() < 5 {
            return Err(Error::Parameter(format!(
                "spline derivatives need at least 5 grid points, got {}",
                grid.len()
            )));
        }
        let matrix = match method {
            DerivativeMethod::Interpolating => not_a_knot_operator(grid, order)?,
            DerivativeMethod::Smoothing { basis_size } => smoothing_operator(grid, order, basis_size)?,
        };
        Ok(DerivativeOperator { order, matrix })
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn apply(&self, ds: &FunctionalData<T>) -> Result<FunctionalData<T>> {
        ds.require_complete()?;
        if ds.n_points() != self.matrix.ncols() {
            return Err(Error::Dimension("dataset grid does not match operator".into()));
        }
        ds.with_values(ds.values().dot(&self.matrix.t()))
    }

    pub fn apply_curve(&self, y: &[T]) -> Vec<T> {
        self.matrix.dot(&Array1::from(y.to_vec())).to_vec()
    }
}

/// Derivative of every curve via interpolating not-a-knot cubic splines.
pub fn derivative<T: Scalar>(ds: &FunctionalData<T>, order: u8) -> Result<FunctionalData<T>> {
    derivative_with(ds, order, DerivativeMethod::Interpolating)
}

pub fn derivative_with<T: Scalar>(
    ds: &FunctionalData<T>,
    order: u8,
    method: DerivativeMethod,
) -> Result<FunctionalData<T>> {
    DerivativeOperator::new(ds.grid(), order, method)?.apply(ds)
}

/// Second-derivative moments system of the not-a-knot interpolating spline.
fn moment_system<T: Scalar>(h: &[T]) -> Array2<T> {
    let n = h.len() + 1;
    let two = T::lit(2.0);
    let mut a = Array2::<T>::zeros((n, n));
    a[[0, 0]] = h[1];
    a[[0, 1]] = -(h[0] + h[1]);
    a[[0, 2]] = h[0];
    for i in 1..n - 1 {
        a[[i, i - 1]] = h[i - 1];
        a[[i, i]] = two * (h[i - 1] + h[i]);
        a[[i, i + 1]] = h[i];
    }
    a[[n - 1, n - 3]] = h[n - 2];
    a[[n - 1, n - 2]] = -(h[n - 3] + h[n - 2]);
    a[[n - 1, n - 1]] = h[n - 3];
    a
}

fn not_a_knot_operator<T: Scalar>(grid: &Grid<T>, order: u8) -> Result<Array2<T>> {
    let t = grid.points();
    let n = t.len();
    let h: Vec<T> = t.windows(2).map(|w| w[1] - w[0]).collect();
    let a = moment_system(&h);
    let six = T::lit(6.0);
    let two = T::lit(2.0);
    let mut op = Array2::<T>::zeros((n, n));
    for k in 0..n {
        let mut y = vec![T::zero(); n];
        y[k] = T::one();
        let slope: Vec<T> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut rhs = Array1::<T>::zeros(n);
        for i in 1..n - 1 {
            rhs[i] = six * (slope[i] - slope[i - 1]);
        }
        let m = linalg::lu_solve(a.view(), rhs.view())
            .ok_or_else(|| Error::Numerical("singular spline system".into()))?;
        for i in 0..n {
            op[[i, k]] = if order == 2 {
                m[i]
            } else if i + 1 < n {
                slope[i] - h[i] * (two * m[i] + m[i + 1]) / six
            } else {
                slope[n - 2] + h[n - 2] * (m[n - 2] + two * m[n - 1]) / six
            };
        }
    }
    Ok(op)
}

fn smoothing_operator<T: Scalar>(grid: &Grid<T>, order: u8, basis_size: usize) -> Result<Array2<T>> {
    let t = grid.points();
    let n = t.len();
    if basis_size > n {
        return Err(Error::Parameter(format!(
            "smoothing basis of {basis_size} functions exceeds {n} grid points"
        )));
    }
    let basis = BSplineBasis::clamped(grid.start(), grid.end(), basis_size)?;
    let mut b = Array2::<T>::zeros((n, basis_size));
    let mut bd = Array2::<T>::zeros((n, basis_size));
    for (i, &x) in t.iter().enumerate() {
        b.row_mut(i).assign(&Array1::from(basis.evaluate(x)));
        bd.row_mut(i).assign(&Array1::from(basis.derivative(x, order as usize)));
    }
    let gram = b.t().dot(&b);
    let (l, _) = linalg::regularized_cholesky(gram.view(), T::lit(1e-10))
        .ok_or_else(|| Error::Numerical("degenerate smoothing basis".into()))?;
    // op = B' (B^T B)^{-1} B^T
    let inv = linalg::cholesky_inverse(l.view());
    Ok(bd.dot(&inv).dot(&b.t()))
}
