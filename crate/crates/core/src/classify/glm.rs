//! Logistic (binomial or multinomial) regression on the depth features,
//! fitted by Newton / IRLS iterations.

use std::fmt::Write as _;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::softmax_row;
use crate::error::{Error, Result};
use crate::linalg;
use crate::Scalar;

pub const GLM_MAX_ITER: usize = 25;
pub const GLM_TOL: f64 = 1e-8;
/// Ridge used to refit when the classes are separated.
pub const GLM_SEPARATION_RIDGE: f64 = 1e-4;
/// Iteration cap of the ridge refit.
pub const GLM_RIDGE_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct GlmModel<T: Scalar> {
    /// `(g - 1) x (G + 1)`; row `c - 1` holds the log-odds of class `c`
    /// against class 0, intercept first.
    coefs: Array2<T>,
    std_errors: Array2<T>,
    separation: bool,
    iterations: usize,
    deviance: T,
}

struct NewtonFit {
    theta: Vec<f64>,
    cov: Array2<f64>,
    converged: bool,
    iterations: usize,
    deviance: f64,
    perfect: bool,
}

/// Row-wise design with a leading one.
fn design<T: Scalar>(features: ArrayView2<T>) -> Array2<f64> {
    let (n, g) = features.dim();
    Array2::from_shape_fn((n, g + 1), |(i, j)| if j == 0 { 1.0 } else { features[[i, j - 1]].as_f64() })
}

fn probabilities(x: &Array2<f64>, theta: &[f64], k: usize) -> Array2<f64> {
    let (n, d) = x.dim();
    let mut p = Array2::zeros((n, k + 1));
    for i in 0..n {
        let mut eta = vec![0.0; k + 1];
        for c in 0..k {
            eta[c + 1] = (0..d).map(|a| theta[c * d + a] * x[[i, a]]).sum();
        }
        let row = softmax_row(&eta);
        for c in 0..=k {
            p[[i, c]] = row[c];
        }
    }
    p
}

fn penalized_deviance(p: &Array2<f64>, y: &[usize], theta: &[f64], d: usize, ridge: f64) -> f64 {
    let ll: f64 = y.iter().enumerate().map(|(i, &c)| p[[i, c]].max(1e-300).ln()).sum();
    let pen: f64 = theta.iter().enumerate().filter(|(a, _)| a % d != 0).map(|(_, b)| b * b).sum();
    -2.0 * ll + ridge * pen
}

fn newton(x: &Array2<f64>, y: &[usize], k: usize, ridge: f64, max_iter: usize) -> Result<NewtonFit> {
    let (n, d) = x.dim();
    let q = k * d;
    let mut theta = vec![0.0; q];
    let mut p = probabilities(x, &theta, k);
    let mut dev = penalized_deviance(&p, y, &theta, d, ridge);
    let mut converged = false;
    let mut iterations = 0;
    let mut info = Array2::<f64>::zeros((q, q));
    for it in 1..=max_iter {
        iterations = it;
        let mut grad = Array1::<f64>::zeros(q);
        info.fill(0.0);
        for i in 0..n {
            for c in 0..k {
                let r = f64::from(u8::from(y[i] == c + 1)) - p[[i, c + 1]];
                for a in 0..d {
                    grad[c * d + a] += r * x[[i, a]];
                }
                for c2 in 0..k {
                    let w = p[[i, c + 1]] * (f64::from(u8::from(c == c2)) - p[[i, c2 + 1]]);
                    if w == 0.0 {
                        continue;
                    }
                    for a in 0..d {
                        for b in 0..d {
                            info[[c * d + a, c2 * d + b]] += w * x[[i, a]] * x[[i, b]];
                        }
                    }
                }
            }
        }
        for (a, t) in theta.iter().enumerate() {
            if a % d != 0 {
                grad[a] -= ridge * t;
                info[[a, a]] += ridge;
            }
        }
        let step = match linalg::cholesky(info.view(), 0.0) {
            Some(l) => linalg::cholesky_solve(l.view(), grad.view()),
            None => match linalg::regularized_cholesky(info.view(), 1e-10) {
                Some((l, _)) => linalg::cholesky_solve(l.view(), grad.view()),
                None => break,
            },
        };
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + scale * s).collect();
            let pc = probabilities(x, &cand, k);
            let dc = penalized_deviance(&pc, y, &cand, d, ridge);
            if dc.is_finite() && dc <= dev + 1e-12 * dev.abs() {
                let rel = (dev - dc).abs() / (dc.abs() + 0.1);
                theta = cand;
                p = pc;
                dev = dc;
                accepted = true;
                if rel < GLM_TOL {
                    converged = true;
                }
                break;
            }
            scale /= 2.0;
        }
        if !accepted {
            // no descent possible: at the optimum up to rounding
            converged = true;
        }
        if converged {
            break;
        }
    }
    let cov = match linalg::regularized_cholesky(info.view(), 1e-12) {
        Some((l, _)) => linalg::cholesky_inverse(l.view()),
        None => Array2::from_elem((q, q), f64::NAN),
    };
    let perfect = y.iter().enumerate().all(|(i, &c)| p[[i, c]] > 1.0 - 1e-8);
    Ok(NewtonFit { theta, cov, converged, iterations, deviance: dev, perfect })
}

impl<T: Scalar> GlmModel<T> {
    pub fn fit(features: ArrayView2<T>, labels: &[usize], n_groups: usize) -> Result<Self> {
        if n_groups < 2 {
            return Err(Error::Fit("logistic regression needs two or more classes".into()));
        }
        let x = design(features);
        let k = n_groups - 1;
        let mut fit = newton(&x, labels, k, 0.0, GLM_MAX_ITER)?;
        let big = fit.theta.iter().any(|t| !t.is_finite() || t.abs() > 1e8);
        let separation = !fit.converged || fit.perfect || big;
        if separation {
            log::debug!("logistic regression: classes separated, refitting with ridge {GLM_SEPARATION_RIDGE}");
            fit = newton(&x, labels, k, GLM_SEPARATION_RIDGE, GLM_RIDGE_MAX_ITER)?;
            if !fit.converged {
                return Err(Error::Fit(format!(
                    "logistic regression did not converge after the ridge refit ({} iterations)",
                    fit.iterations
                )));
            }
        }
        let d = x.ncols();
        let coefs = Array2::from_shape_fn((k, d), |(c, a)| T::lit(fit.theta[c * d + a]));
        let std_errors = Array2::from_shape_fn((k, d), |(c, a)| T::lit(fit.cov[[c * d + a, c * d + a]].max(0.0).sqrt()));
        Ok(GlmModel { coefs, std_errors, separation, iterations: fit.iterations, deviance: T::lit(fit.deviance) })
    }

    pub fn coefficients(&self) -> &Array2<T> {
        &self.coefs
    }

    pub fn std_errors(&self) -> &Array2<T> {
        &self.std_errors
    }

    /// True when the classes were separated and a ridge refit was used.
    pub fn separation(&self) -> bool {
        self.separation
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn deviance(&self) -> T {
        self.deviance
    }

    pub fn posterior_row(&self, x: ArrayView1<T>) -> Vec<T> {
        let mut eta = vec![T::zero(); self.coefs.nrows() + 1];
        for (c, row) in self.coefs.rows().into_iter().enumerate() {
            eta[c + 1] = row[0] + row.iter().skip(1).zip(x.iter()).map(|(&b, &v)| b * v).sum::<T>();
        }
        softmax_row(&eta)
    }

    /// Estimate, standard error, z value and two-sided p value per
    /// coefficient.
    pub fn coefficient_table(&self, feature_names: &[String]) -> Vec<CoefficientRow> {
        let k = self.coefs.nrows();
        let mut rows = Vec::new();
        for c in 0..k {
            for a in 0..self.coefs.ncols() {
                let base = if a == 0 {
                    "(Intercept)".to_string()
                } else {
                    feature_names.get(a - 1).cloned().unwrap_or_else(|| format!("d{a}"))
                };
                let term = if k > 1 { format!("{}:{base}", c + 1) } else { base };
                let est = self.coefs[[c, a]].as_f64();
                let se = self.std_errors[[c, a]].as_f64();
                let z = est / se;
                rows.push(CoefficientRow { term, estimate: est, std_error: se, z, p: erfc(z.abs() / std::f64::consts::SQRT_2) });
            }
        }
        rows
    }

    pub fn summary(&self, feature_names: &[String]) -> String {
        let rows = self.coefficient_table(feature_names);
        let width = rows.iter().map(|r| r.term.len()).max().unwrap_or(0).max(11);
        let mut s = format!("{:width$} {:>10} {:>10} {:>8} {:>10}\n", "", "Estimate", "Std. Error", "z value", "Pr(>|z|)");
        for r in rows {
            let _ = writeln!(s, "{:width$} {:>10.4} {:>10.4} {:>8.3} {:>10.3e}", r.term, r.estimate, r.std_error, r.z, r.p);
        }
        if self.separation {
            s.push_str("note: classes separated; coefficients from a ridge-penalized refit\n");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub term: String,
    pub estimate: f64,
    pub std_error: f64,
    pub z: f64,
    pub p: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn symmetric_data_have_zero_intercept() {
        let x: Array2<f64> = array![[1.0], [2.0], [-0.5], [0.3], [-1.0], [-2.0], [0.5], [-0.3]];
        let y = [1, 1, 1, 0, 0, 0, 0, 1];
        let m = GlmModel::fit(x.view(), &y, 2).unwrap();
        assert!(!m.separation());
        assert!(m.coefficients()[[0, 0]].abs() < 1e-6);
        let p = m.posterior_row(array![0.7].view());
        assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn separation_is_flagged() {
        let x: Array2<f64> = array![[0.1], [0.2], [0.3], [0.6], [0.7], [0.8]];
        let y = [0, 0, 0, 1, 1, 1];
        let m = GlmModel::fit(x.view(), &y, 2).unwrap();
        assert!(m.separation());
        for (i, &c) in y.iter().enumerate() {
            let p = m.posterior_row(x.row(i));
            assert_eq!(usize::from(p[1] > p[0]), c);
        }
    }

    #[test]
    fn multinomial_rows_sum_to_one() {
        let x: Array2<f64> = array![[0.0, 0.1], [0.2, 0.0], [1.0, 1.1], [1.2, 0.8], [2.0, 0.1], [2.1, -0.2], [0.9, 0.9], [0.1, 0.3], [2.2, 0.4]];
        let y = [0, 0, 1, 1, 2, 2, 0, 1, 2];
        let m = GlmModel::fit(x.view(), &y, 3).unwrap();
        let p = m.posterior_row(array![1.0, 0.5].view());
        assert_eq!(p.len(), 3);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let table = m.coefficient_table(&["a".into(), "b".into()]);
        assert_eq!(table.len(), 6);
        assert!(m.summary(&[]).contains("Estimate"));
    }
}
