//! Small dense linear algebra used by the discriminant, regression and
//! Mahalanobis kernels. Matrices here are at most a few dozen rows wide,
//! so straightforward O(n^3) factorizations are adequate.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::Scalar;

/// Lower Cholesky factor of a symmetric positive definite matrix, or `None`
/// when a pivot is not strictly positive or falls below `min_pivot`.
pub fn cholesky<T: Scalar>(a: ArrayView2<T>, min_pivot: T) -> Option<Array2<T>> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let mut l = Array2::<T>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if !(d > min_pivot) || !d.is_finite() {
            return None;
        }
        let djj = d.sqrt();
        l[[j, j]] = djj;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / djj;
        }
    }
    Some(l)
}

/// Cholesky factor of a covariance-like matrix, adding a ridge of
/// `eps_rel * trace / n` to the diagonal when the matrix is singular or
/// numerically close to it. The ridge is escalated by decades if needed.
/// Returns the factor and the ridge that was added (zero when none).
pub fn regularized_cholesky<T: Scalar>(a: ArrayView2<T>, eps_rel: T) -> Option<(Array2<T>, T)> {
    let n = a.nrows();
    let trace = (0..n).map(|i| a[[i, i]]).fold(T::zero(), |s, v| s + v);
    if !(trace > T::zero()) {
        return None;
    }
    let scale = trace / T::from_count(n);
    let tiny = scale * T::lit(1e-10).max(T::epsilon() * T::lit(16.0));
    if let Some(l) = cholesky(a, tiny) {
        return Some((l, T::zero()));
    }
    let mut ridge = eps_rel * scale;
    for _ in 0..12 {
        let mut b = a.to_owned();
        for i in 0..n {
            b[[i, i]] += ridge;
        }
        if let Some(l) = cholesky(b.view(), T::zero()) {
            return Some((l, ridge));
        }
        ridge *= T::lit(10.0);
    }
    None
}

/// Solves `L y = b` for lower-triangular `L`.
pub fn forward_substitute<T: Scalar>(l: ArrayView2<T>, b: ArrayView1<T>) -> Array1<T> {
    let n = l.nrows();
    let mut y = Array1::<T>::zeros(n);
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[[i, k]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    y
}

/// Solves `L^T x = y` for lower-triangular `L`.
pub fn backward_substitute_transposed<T: Scalar>(l: ArrayView2<T>, y: ArrayView1<T>) -> Array1<T> {
    let n = l.nrows();
    let mut x = Array1::<T>::zeros(n);
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[[k, i]] * x[k];
        }
        x[i] = s / l[[i, i]];
    }
    x
}

/// Solves `A x = b` given the Cholesky factor of `A`.
pub fn cholesky_solve<T: Scalar>(l: ArrayView2<T>, b: ArrayView1<T>) -> Array1<T> {
    let y = forward_substitute(l, b);
    backward_substitute_transposed(l, y.view())
}

/// Inverse of `A` from its Cholesky factor.
pub fn cholesky_inverse<T: Scalar>(l: ArrayView2<T>) -> Array2<T> {
    let n = l.nrows();
    let mut inv = Array2::<T>::zeros((n, n));
    let mut e = Array1::<T>::zeros(n);
    for j in 0..n {
        e.fill(T::zero());
        e[j] = T::one();
        let col = cholesky_solve(l, e.view());
        inv.column_mut(j).assign(&col);
    }
    inv
}

/// `log det A` from its Cholesky factor.
pub fn cholesky_logdet<T: Scalar>(l: ArrayView2<T>) -> T {
    (0..l.nrows()).map(|i| l[[i, i]].ln()).fold(T::zero(), |s, v| s + v) * T::lit(2.0)
}

/// Squared Mahalanobis norm `v^T A^{-1} v` from the Cholesky factor of `A`.
pub fn mahalanobis_sq<T: Scalar>(l: ArrayView2<T>, v: ArrayView1<T>) -> T {
    let y = forward_substitute(l, v);
    y.iter().fold(T::zero(), |s, &t| s + t * t)
}

/// Solves a general square system by Gaussian elimination with partial
/// pivoting. Returns `None` for a (numerically) singular matrix.
pub fn lu_solve<T: Scalar>(a: ArrayView2<T>, b: ArrayView1<T>) -> Option<Array1<T>> {
    let n = a.nrows();
    let mut m = a.to_owned();
    let mut x = b.to_owned();
    let scale = m.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    if !(scale > T::zero()) {
        return None;
    }
    let tol = scale * T::epsilon() * T::from_count(n.max(1)) * T::lit(8.0);
    for col in 0..n {
        let (piv, pmax) = (col..n)
            .map(|r| (r, m[[r, col]].abs()))
            .fold((col, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(pmax > tol) {
            return None;
        }
        if piv != col {
            for k in 0..n {
                m.swap([piv, k], [col, k]);
            }
            x.swap(piv, col);
        }
        let d = m[[col, col]];
        for r in (col + 1)..n {
            let f = m[[r, col]] / d;
            if f != T::zero() {
                for k in col..n {
                    let v = m[[col, k]];
                    m[[r, k]] -= f * v;
                }
                let v = x[col];
                x[r] -= f * v;
            }
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in (i + 1)..n {
            s -= m[[i, k]] * x[k];
        }
        x[i] = s / m[[i, i]];
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

/// Sample covariance (denominator `n - 1`) of the rows of `x` around `mean`.
pub fn sample_covariance<T: Scalar>(x: ArrayView2<T>, mean: ArrayView1<T>) -> Array2<T> {
    let (n, p) = x.dim();
    let mut cov = Array2::<T>::zeros((p, p));
    for row in x.rows() {
        for a in 0..p {
            let da = row[a] - mean[a];
            for b in a..p {
                cov[[a, b]] += da * (row[b] - mean[b]);
            }
        }
    }
    let denom = T::from_count(n.saturating_sub(1).max(1));
    for a in 0..p {
        for b in a..p {
            let v = cov[[a, b]] / denom;
            cov[[a, b]] = v;
            cov[[b, a]] = v;
        }
    }
    cov
}
