use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Scalar;

/// Strictly increasing abscissae shared by every curve of a dataset,
/// together with the composite trapezoid weights used for all integrals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<T>", try_from = "Vec<T>")]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct Grid<T: Scalar> {
    points: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> Grid<T> {
    pub fn new(points: Vec<T>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Format(format!(
                "grid needs at least 2 points, got {}",
                points.len()
            )));
        }
        if let Some(p) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!("grid point {p} is not finite")));
        }
        if let Some(k) = points.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Format(format!(
                "grid is not strictly increasing at position {}",
                k + 1
            )));
        }
        let n = points.len();
        let half = T::lit(0.5);
        let weights = (0..n)
            .map(|k| {
                let left = if k > 0 { points[k] - points[k - 1] } else { T::zero() };
                let right = if k + 1 < n { points[k + 1] - points[k] } else { T::zero() };
                (left + right) * half
            })
            .collect();
        Ok(Grid { points, weights })
    }

    /// `n` equispaced points spanning `[start, end]`.
    pub fn equispaced(start: T, end: T, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Format("grid needs at least 2 points".into()));
        }
        let step = (end - start) / T::from_count(n - 1);
        let mut pts: Vec<T> = (0..n).map(|k| start + step * T::from_count(k)).collect();
        pts[n - 1] = end;
        Grid::new(pts)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    /// Trapezoid quadrature weights; `integrate(y) = sum(w_k * y_k)`.
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn start(&self) -> T {
        self.points[0]
    }

    pub fn end(&self) -> T {
        self.points[self.points.len() - 1]
    }

    pub fn span(&self) -> T {
        self.end() - self.start()
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.len() {
            return Err(Error::Dimension(format!(
                "sequence of length {n} on a grid of {} points",
                self.len()
            )));
        }
        Ok(())
    }

    /// Composite trapezoid integral of `y` over the grid.
    pub fn integrate(&self, y: &[T]) -> Result<T> {
        self.check_len(y.len())?;
        Ok(self.integrate_unchecked(y))
    }

    #[inline]
    pub(crate) fn integrate_unchecked(&self, y: &[T]) -> T {
        self.weights
            .iter()
            .zip(y)
            .fold(T::zero(), |s, (&w, &v)| s + w * v)
    }

    /// Trapezoid-weighted inner product `<a, b>`.
    pub fn inner(&self, a: &[T], b: &[T]) -> Result<T> {
        self.check_len(a.len())?;
        self.check_len(b.len())?;
        Ok(self.inner_unchecked(a, b))
    }

    #[inline]
    pub(crate) fn inner_unchecked(&self, a: &[T], b: &[T]) -> T {
        self.weights
            .iter()
            .zip(a.iter().zip(b))
            .fold(T::zero(), |s, (&w, (&x, &y))| s + w * x * y)
    }

    /// L2 distance between two curves sampled on the grid.
    pub fn l2_distance(&self, a: &[T], b: &[T]) -> Result<T> {
        self.check_len(a.len())?;
        self.check_len(b.len())?;
        Ok(self.l2_distance_sq_unchecked(a, b).sqrt())
    }

    #[inline]
    pub(crate) fn l2_distance_sq_unchecked(&self, a: &[T], b: &[T]) -> T {
        let mut s = T::zero();
        for ((&w, &x), &y) in self.weights.iter().zip(a).zip(b) {
            let d = x - y;
            s += w * d * d;
        }
        s
    }
}

impl<T: Scalar> From<Grid<T>> for Vec<T> {
    fn from(g: Grid<T>) -> Vec<T> {
        g.points
    }
}

impl<T: Scalar> TryFrom<Vec<T>> for Grid<T> {
    type Error = Error;
    fn try_from(v: Vec<T>) -> Result<Self> {
        Grid::new(v)
    }
}

/// Composite trapezoid integral of `y` over `grid`.
pub fn trapezoid_integral<T: Scalar>(y: &[T], grid: &Grid<T>) -> Result<T> {
    grid.integrate(y)
}

/// L2 distance `sqrt(int (a - b)^2)` with trapezoid quadrature.
pub fn l2_metric<T: Scalar>(a: &[T], b: &[T], grid: &Grid<T>) -> Result<T> {
    grid.l2_distance(a, b)
}
