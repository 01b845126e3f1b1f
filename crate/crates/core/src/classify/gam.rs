//! Additive logistic model with penalized cubic B-spline terms.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdata::BSplineBasis;
use crate::linalg;
use crate::Scalar;

pub const GAM_DEFAULT_BASIS: usize = 8;
pub const GAM_MAX_ITER: usize = 50;
pub const GAM_TOL: f64 = 1e-8;
/// Ridge on the smooth coefficients used when the unpenalized fit diverges.
pub const GAM_FALLBACK_RIDGE: f64 = 1e-4;

/// Penalty grid searched by GCV: `10^-4, 10^-3.5, ..., 10^6`.
fn penalty_grid() -> Vec<f64> {
    (0..=20).map(|k| 10f64.powf(-4.0 + 0.5 * k as f64)).collect()
}

/// One smooth term: basis, constraint null-space and fitted coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Term {
    feature: usize,
    basis: BSplineBasis<f64>,
    /// `n_basis x (n_basis - 1)`; columns span the sum-to-zero subspace.
    z: Array2<f64>,
    coefs: Vec<f64>,
}

impl Term {
    fn row(&self, x: f64) -> Array1<f64> {
        let b = Array1::from(self.basis.evaluate_linear_extrapolation(x));
        self.z.t().dot(&b)
    }

    fn value(&self, x: f64) -> f64 {
        self.row(x).iter().zip(&self.coefs).map(|(a, b)| a * b).sum()
    }
}

/// Orthonormal basis of the complement of `c` from a Householder reflection.
fn constraint_nullspace(c: &Array1<f64>) -> Array2<f64> {
    let k = c.len();
    let norm = c.dot(c).sqrt();
    let mut v = c.clone();
    v[0] += if c[0] >= 0.0 { norm } else { -norm };
    let vv = v.dot(&v);
    let mut q = Array2::<f64>::eye(k);
    if vv > 0.0 {
        for i in 0..k {
            for j in 0..k {
                q[[i, j]] -= 2.0 * v[i] * v[j] / vv;
            }
        }
    }
    q.slice(s![.., 1..]).to_owned()
}

/// Binary additive logit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BinaryGam {
    intercept: f64,
    terms: Vec<Term>,
    penalty: f64,
    ridge: f64,
}

impl BinaryGam {
    fn eta(&self, x: &[f64]) -> f64 {
        self.intercept + self.terms.iter().map(|t| t.value(x[t.feature])).sum::<f64>()
    }
}

struct PirlsFit {
    beta: Array1<f64>,
    gcv: f64,
    converged: bool,
    trace: Vec<f64>,
}

fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

fn deviance(y: &[f64], mu: &[f64]) -> f64 {
    -2.0 * y
        .iter()
        .zip(mu)
        .map(|(&yi, &m)| if yi > 0.5 { m.max(1e-300).ln() } else { (1.0 - m).max(1e-300).ln() })
        .sum::<f64>()
}

/// Penalized IRLS for the design `x` with penalty `s` (intercept
/// unpenalized), started from `start` or from zero.
fn pirls(
    x: &Array2<f64>,
    y: &[f64],
    s: &Array2<f64>,
    ridge: f64,
    max_iter: usize,
    start: Option<&Array1<f64>>,
) -> PirlsFit {
    let (n, d) = x.dim();
    let mut beta = start.cloned().unwrap_or_else(|| Array1::<f64>::zeros(d));
    let mut eta = x.dot(&beta);
    let mut mu: Vec<f64> = eta.iter().map(|&e| sigmoid(e)).collect();
    let mut dev = deviance(y, &mu);
    let mut trace = vec![dev];
    let mut converged = false;
    let mut lhs = Array2::<f64>::zeros((d, d));
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    for _ in 0..max_iter {
        for i in 0..n {
            w[i] = (mu[i] * (1.0 - mu[i])).max(1e-10);
            z[i] = eta[i] + (y[i] - mu[i]) / w[i];
        }
        lhs.assign(s);
        for a in 1..d {
            lhs[[a, a]] += ridge;
        }
        let mut rhs = Array1::<f64>::zeros(d);
        for i in 0..n {
            let xi = x.row(i);
            for a in 0..d {
                let wa = w[i] * xi[a];
                rhs[a] += wa * z[i];
                for b in a..d {
                    lhs[[a, b]] += wa * xi[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                lhs[[a, b]] = lhs[[b, a]];
            }
        }
        let Some((l, _)) = linalg::regularized_cholesky(lhs.view(), 1e-10) else {
            break;
        };
        beta = linalg::cholesky_solve(l.view(), rhs.view());
        eta = x.dot(&beta);
        mu = eta.iter().map(|&e| sigmoid(e)).collect();
        let new_dev = deviance(y, &mu);
        trace.push(new_dev);
        let rel = (new_dev - dev).abs() / (new_dev.abs() + 0.1);
        dev = new_dev;
        if !beta.iter().all(|b| b.is_finite()) {
            break;
        }
        if rel < GAM_TOL {
            converged = true;
            break;
        }
    }
    // GCV of the working problem at the final weights
    let gcv = if converged {
        let mut xtwx = Array2::<f64>::zeros((d, d));
        let mut lhs = s.clone();
        for a in 1..d {
            lhs[[a, a]] += ridge;
        }
        let mut rss = 0.0;
        for i in 0..n {
            let wi = (mu[i] * (1.0 - mu[i])).max(1e-10);
            let zi = eta[i] + (y[i] - mu[i]) / wi;
            rss += wi * (zi - eta[i]).powi(2);
            let xi = x.row(i);
            for a in 0..d {
                let wa = wi * xi[a];
                for b in a..d {
                    xtwx[[a, b]] += wa * xi[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                xtwx[[a, b]] = xtwx[[b, a]];
            }
        }
        lhs += &xtwx;
        match linalg::regularized_cholesky(lhs.view(), 1e-10) {
            Some((l, _)) => {
                let inv = linalg::cholesky_inverse(l.view());
                let edf: f64 = (0..d).map(|a| inv.row(a).dot(&xtwx.column(a))).sum();
                n as f64 * rss / (n as f64 - edf).max(1e-8).powi(2)
            }
            None => f64::INFINITY,
        }
    } else {
        f64::INFINITY
    };
    PirlsFit { beta, gcv, converged, trace }
}

fn fit_binary(features: &Array2<f64>, y: &[f64], basis_size: usize, penalty: Option<f64>) -> Result<BinaryGam> {
    let (n, g) = features.dim();
    let mut terms = Vec::new();
    for j in 0..g {
        let col = features.column(j);
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(hi > lo) {
            // a constant feature carries no information: f_j = 0
            continue;
        }
        let basis = BSplineBasis::uniform(lo, hi, basis_size)?;
        let mut c = Array1::<f64>::zeros(basis_size);
        for &v in col.iter() {
            c += &Array1::from(basis.evaluate(v));
        }
        let z = constraint_nullspace(&c);
        terms.push(Term { feature: j, basis, z, coefs: Vec::new() });
    }
    let m = basis_size - 1;
    let d = 1 + m * terms.len();
    let mut x = Array2::<f64>::zeros((n, d));
    let mut s_unit = Array2::<f64>::zeros((d, d));
    for i in 0..n {
        x[[i, 0]] = 1.0;
    }
    for (k, t) in terms.iter().enumerate() {
        let off = 1 + k * m;
        for i in 0..n {
            let r = t.row(features[[i, t.feature]]);
            x.slice_mut(s![i, off..off + m]).assign(&r);
        }
        let p = t.z.t().dot(&t.basis.difference_penalty()).dot(&t.z);
        s_unit.slice_mut(s![off..off + m, off..off + m]).assign(&p);
    }

    let lambdas = match penalty {
        Some(l) if !(l >= 0.0) || !l.is_finite() => {
            return Err(Error::Parameter(format!("GAM penalty must be finite and nonnegative, got {l}")));
        }
        Some(l) => vec![l],
        None => penalty_grid(),
    };
    let mut best: Option<(f64, f64, f64, PirlsFit)> = None;
    let mut traces = Vec::new();
    // neighbouring penalties have close solutions: warm-start from the last
    // converged unridged fit
    let mut warm: Option<Array1<f64>> = None;
    for &lambda in &lambdas {
        let s = &s_unit * lambda;
        let mut fit = pirls(&x, y, &s, 0.0, GAM_MAX_ITER, warm.as_ref());
        if !fit.converged && warm.is_some() {
            fit = pirls(&x, y, &s, 0.0, GAM_MAX_ITER, None);
        }
        let mut ridge = 0.0;
        if !fit.converged {
            ridge = GAM_FALLBACK_RIDGE;
            fit = pirls(&x, y, &s, ridge, 2 * GAM_MAX_ITER, None);
        }
        if !fit.converged {
            traces.push((lambda, fit.trace));
            continue;
        }
        if ridge == 0.0 {
            warm = Some(fit.beta.clone());
        }
        if best.as_ref().is_none_or(|b| fit.gcv < b.2) {
            best = Some((lambda, ridge, fit.gcv, fit));
        }
    }
    let Some((penalty, ridge, _, fit)) = best else {
        let detail: Vec<String> = traces
            .iter()
            .map(|(l, t)| {
                let tail: Vec<String> = t.iter().rev().take(5).rev().map(|v| format!("{v:.6}")).collect();
                format!("lambda {l:e}: deviance trace ... {}", tail.join(", "))
            })
            .collect();
        return Err(Error::Fit(format!("additive logit did not converge; {}", detail.join("; "))));
    };
    if ridge > 0.0 {
        log::warn!("additive logit: unpenalized fit diverged, used ridge {ridge}");
    }
    for (k, t) in terms.iter_mut().enumerate() {
        let off = 1 + k * m;
        t.coefs = fit.beta.slice(s![off..off + m]).to_vec();
    }
    Ok(BinaryGam { intercept: fit.beta[0], terms, penalty, ridge })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GamModel {
    /// One binary model for two classes, otherwise one per class (one
    /// versus rest).
    models: Vec<BinaryGam>,
    n_features: usize,
}

impl GamModel {
    pub fn fit<T: Scalar>(
        features: ArrayView2<T>,
        labels: &[usize],
        n_groups: usize,
        basis_size: usize,
        penalty: Option<f64>,
    ) -> Result<Self> {
        if basis_size < 4 {
            return Err(Error::Parameter(format!("GAM basis needs at least 4 functions, got {basis_size}")));
        }
        let x = features.mapv(|v| v.as_f64());
        let targets: Vec<usize> = if n_groups == 2 { vec![1] } else { (0..n_groups).collect() };
        let models = targets
            .iter()
            .map(|&c| {
                let y: Vec<f64> = labels.iter().map(|&l| f64::from(u8::from(l == c))).collect();
                fit_binary(&x, &y, basis_size, penalty)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GamModel { models, n_features: features.ncols() })
    }

    /// Chosen penalty of each binary model.
    pub fn penalties(&self) -> Vec<f64> {
        self.models.iter().map(|m| m.penalty).collect()
    }

    /// Value of the smooth term of feature `j` (binary model `k`) at `x`;
    /// zero for constant features.
    pub fn term_value(&self, k: usize, j: usize, x: f64) -> f64 {
        self.models[k].terms.iter().find(|t| t.feature == j).map_or(0.0, |t| t.value(x))
    }

    pub fn intercept(&self, k: usize) -> f64 {
        self.models[k].intercept
    }

    pub fn posterior_row<T: Scalar>(&self, x: ArrayView1<T>) -> Vec<T> {
        let xf: Vec<f64> = x.iter().map(|v| v.as_f64()).collect();
        if self.models.len() == 1 {
            let p = sigmoid(self.models[0].eta(&xf));
            return vec![T::lit(1.0 - p), T::lit(p)];
        }
        let p: Vec<f64> = self.models.iter().map(|m| sigmoid(m.eta(&xf))).collect();
        let total: f64 = p.iter().sum();
        if total > 0.0 {
            p.iter().map(|&v| T::lit(v / total)).collect()
        } else {
            let k = p.len() as f64;
            vec![T::lit(1.0 / k); p.len()]
        }
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nullspace_is_orthogonal_to_constraint() {
        let c = Array1::from(vec![3.0, 1.0, 4.0, 1.0, 5.0]);
        let z = constraint_nullspace(&c);
        assert_eq!(z.dim(), (5, 4));
        for col in z.columns() {
            assert!(col.dot(&c).abs() < 1e-12);
        }
        let ztz = z.t().dot(&z);
        for i in 0..4 {
            for j in 0..4 {
                assert!((ztz[[i, j]] - f64::from(u8::from(i == j))).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_feature_has_zero_term_and_terms_sum_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 120;
        let x = Array2::from_shape_fn((n, 2), |(_, j)| if j == 0 { rng.random_range(0.0..1.0) } else { 0.5 });
        let y: Vec<usize> = (0..n).map(|i| usize::from(x[[i, 0]] + 0.3 * rng.random_range(-1.0..1.0) > 0.5)).collect();
        let m = GamModel::fit(x.view(), &y, 2, 8, None).unwrap();
        assert_eq!(m.term_value(0, 1, 0.5), 0.0);
        let s: f64 = (0..n).map(|i| m.term_value(0, 0, x[[i, 0]])).sum();
        assert!(s.abs() < 1e-8, "{s}");
    }
}
