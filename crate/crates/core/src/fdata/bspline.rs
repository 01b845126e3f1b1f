//! Cubic B-spline bases (Cox-de Boor recursion) used for imputation,
//! smoothing derivatives and the additive logistic model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Scalar;

const ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct BSplineBasis<T: Scalar> {
    knots: Vec<T>,
    lower: T,
    upper: T,
}

impl<T: Scalar> BSplineBasis<T> {
    /// Clamped cubic basis with `n_basis` functions and equally spaced
    /// breakpoints on `[lower, upper]`.
    pub fn clamped(lower: T, upper: T, n_basis: usize) -> Result<Self> {
        if n_basis < ORDER {
            return Err(Error::Parameter(format!("cubic basis needs at least 4 functions, got {n_basis}")));
        }
        if !(upper > lower) {
            return Err(Error::Parameter("basis range must have positive length".into()));
        }
        let n_breaks = n_basis - ORDER + 2;
        let step = (upper - lower) / T::from_count(n_breaks - 1);
        let mut knots = vec![lower; ORDER - 1];
        for k in 0..n_breaks {
            knots.push(if k + 1 == n_breaks { upper } else { lower + step * T::from_count(k) });
        }
        knots.extend(std::iter::repeat_n(upper, ORDER - 1));
        Ok(BSplineBasis { knots, lower, upper })
    }

    /// Uniform cubic basis whose knots extend three spacings beyond the
    /// range, so that a linear coefficient sequence yields a linear function.
    pub fn uniform(lower: T, upper: T, n_basis: usize) -> Result<Self> {
        if n_basis < ORDER {
            return Err(Error::Parameter(format!("cubic basis needs at least 4 functions, got {n_basis}")));
        }
        if !(upper > lower) {
            return Err(Error::Parameter("basis range must have positive length".into()));
        }
        let step = (upper - lower) / T::from_count(n_basis - 3);
        let knots = (0..n_basis + ORDER)
            .map(|k| lower + step * (T::from_count(k) - T::lit(3.0)))
            .collect();
        Ok(BSplineBasis { knots, lower, upper })
    }

    pub fn n_basis(&self) -> usize {
        self.knots.len() - ORDER
    }

    pub fn range(&self) -> (T, T) {
        (self.lower, self.upper)
    }

    /// Values of all order-`order` basis functions at `x`.
    fn bases_of_order(&self, x: T, order: usize) -> Vec<T> {
        let t = &self.knots;
        let m = t.len();
        // Locate the span containing x; the right end of the range belongs
        // to the last non-degenerate span.
        let x = x.max(self.lower).min(self.upper);
        let mut span = m - 1;
        for i in 0..m - 1 {
            if t[i] <= x && x < t[i + 1] {
                span = i;
                break;
            }
        }
        if span == m - 1 {
            span = (0..m - 1).rev().find(|&i| t[i] < t[i + 1]).unwrap_or(0);
        }
        let mut vals = vec![T::zero(); m - 1];
        vals[span] = T::one();
        for k in 2..=order {
            let mut next = vec![T::zero(); m - k];
            for (i, slot) in next.iter_mut().enumerate() {
                let mut v = T::zero();
                let d1 = t[i + k - 1] - t[i];
                if d1 > T::zero() && vals[i] != T::zero() {
                    v += (x - t[i]) / d1 * vals[i];
                }
                let d2 = t[i + k] - t[i + 1];
                if d2 > T::zero() && vals[i + 1] != T::zero() {
                    v += (t[i + k] - x) / d2 * vals[i + 1];
                }
                *slot = v;
            }
            vals = next;
        }
        vals
    }

    /// Values of every basis function at `x` (clamped to the range).
    pub fn evaluate(&self, x: T) -> Vec<T> {
        self.bases_of_order(x, ORDER)
    }

    /// `deriv`-th derivative of every basis function at `x`.
    pub fn derivative(&self, x: T, deriv: usize) -> Vec<T> {
        if deriv == 0 {
            return self.evaluate(x);
        }
        if deriv >= ORDER {
            return vec![T::zero(); self.n_basis()];
        }
        let t = &self.knots;
        let mut vals = self.bases_of_order(x, ORDER - deriv);
        for order in (ORDER - deriv + 1)..=ORDER {
            let scale = T::from_count(order - 1);
            let len = t.len() - order;
            let next = (0..len)
                .map(|i| {
                    let mut v = T::zero();
                    let d1 = t[i + order - 1] - t[i];
                    if d1 > T::zero() {
                        v += vals[i] / d1;
                    }
                    let d2 = t[i + order] - t[i + 1];
                    if d2 > T::zero() {
                        v -= vals[i + 1] / d2;
                    }
                    v * scale
                })
                .collect();
            vals = next;
        }
        vals
    }

    /// Basis values at `x`, extended linearly outside the range.
    pub fn evaluate_linear_extrapolation(&self, x: T) -> Vec<T> {
        let edge = if x < self.lower {
            self.lower
        } else if x > self.upper {
            self.upper
        } else {
            return self.evaluate(x);
        };
        let v = self.evaluate(edge);
        let d = self.derivative(edge, 1);
        v.iter().zip(&d).map(|(&a, &b)| a + b * (x - edge)).collect()
    }

    /// Second-order difference penalty matrix `D^T D`.
    pub fn difference_penalty(&self) -> ndarray::Array2<T> {
        let k = self.n_basis();
        let mut d = ndarray::Array2::<T>::zeros((k.saturating_sub(2), k));
        for r in 0..k.saturating_sub(2) {
            d[[r, r]] = T::one();
            d[[r, r + 1]] = T::lit(-2.0);
            d[[r, r + 2]] = T::one();
        }
        d.t().dot(&d)
    }
}
