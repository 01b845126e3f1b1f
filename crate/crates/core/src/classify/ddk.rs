//! Polynomial separators through the origin on the DD-plot, and the maximum
//! depth rule.

use ndarray::ArrayView2;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::nelder_mead::nelder_mead;
use crate::error::{Error, Result};
use crate::linalg::lu_solve;
use crate::rng::derive_seed;
use crate::Scalar;

/// Temperature of the logistic surrogate minimized during refinement.
pub const SURROGATE_TEMPERATURE: f64 = 50.0;

/// Search settings for the polynomial classifiers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DdkOptions {
    /// Number of candidate point subsets (`M`).
    pub candidates: usize,
    /// Number of best candidates refined by Nelder-Mead (`m`).
    pub refine: usize,
    pub seed: u64,
}

impl Default for DdkOptions {
    fn default() -> Self {
        DdkOptions { candidates: 10_000, refine: 1, seed: 0 }
    }
}

/// A two-class polynomial rule `v = f(u)`, `f(0) = 0`, where `(u, v)` are the
/// two depth coordinates, interchanged when `swapped`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DdkRule {
    /// `f(u) = sum_k coefs[k] u^(k+1)`.
    pub coefs: Vec<f64>,
    pub swapped: bool,
    /// Class assigned to points strictly above the curve.
    pub above_class: usize,
}

fn poly(coefs: &[f64], u: f64) -> f64 {
    coefs.iter().rev().fold(0.0, |acc, &c| (acc + c) * u)
}

impl DdkRule {
    fn coords(&self, d0: f64, d1: f64) -> (f64, f64) {
        if self.swapped {
            (d1, d0)
        } else {
            (d0, d1)
        }
    }

    /// Class (0 or 1) of the point with depths `(d0, d1)`.
    pub fn predict(&self, d0: f64, d1: f64) -> usize {
        let (u, v) = self.coords(d0, d1);
        if v > poly(&self.coefs, u) {
            self.above_class
        } else {
            1 - self.above_class
        }
    }

    pub fn degree(&self) -> usize {
        self.coefs.len()
    }
}

struct Problem {
    d0: Vec<f64>,
    d1: Vec<f64>,
    labels: Vec<usize>,
}

impl Problem {
    fn uv(&self, swapped: bool) -> (&[f64], &[f64]) {
        if swapped {
            (&self.d1, &self.d0)
        } else {
            (&self.d0, &self.d1)
        }
    }

    /// Errors of the best side assignment and that assignment.
    fn score(&self, coefs: &[f64], swapped: bool) -> (usize, usize) {
        let (u, v) = self.uv(swapped);
        // errors when "above" means class 1
        let mut err_above1 = 0usize;
        for i in 0..u.len() {
            let above = v[i] > poly(coefs, u[i]);
            if above != (self.labels[i] == 1) {
                err_above1 += 1;
            }
        }
        let err_above0 = u.len() - err_above1;
        if err_above1 <= err_above0 {
            (err_above1, 1)
        } else {
            (err_above0, 0)
        }
    }

    /// Polynomial through the origin and the chosen points.
    fn interpolate(&self, subset: &[usize], swapped: bool) -> Option<Vec<f64>> {
        let (u, v) = self.uv(swapped);
        let k = subset.len();
        let a = ndarray::Array2::from_shape_fn((k, k), |(r, c)| u[subset[r]].powi(c as i32 + 1));
        let b = ndarray::Array1::from_iter(subset.iter().map(|&i| v[i]));
        let sol = lu_solve(a.view(), b.view())?;
        let coefs: Vec<f64> = sol.to_vec();
        coefs.iter().all(|c| c.is_finite()).then_some(coefs)
    }

    fn surrogate(&self, coefs: &[f64], swapped: bool, above_class: usize) -> f64 {
        let (u, v) = self.uv(swapped);
        (0..u.len())
            .map(|i| {
                let z = if self.labels[i] == above_class { 1.0 } else { -1.0 };
                let r = v[i] - poly(coefs, u[i]);
                1.0 / (1.0 + (SURROGATE_TEMPERATURE * z * r).exp())
            })
            .sum()
    }
}

fn binomial(n: usize, k: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn all_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k == 0 || k > n {
        return out;
    }
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in (i + 1)..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[derive(Clone)]
struct Candidate {
    coefs: Vec<f64>,
    swapped: bool,
    above_class: usize,
    errors: usize,
}

/// Fits a two-class polynomial rule of degree at most `degree` on the
/// features `(d0, d1)`; `labels` are 0 or 1. The optional `start` rule (of
/// lower degree) joins the candidate pool, so the training error never
/// exceeds that of `start`.
pub fn fit_ddk_pair(
    d0: &[f64],
    d1: &[f64],
    labels: &[usize],
    degree: usize,
    opts: &DdkOptions,
    start: Option<&DdkRule>,
) -> Result<(DdkRule, usize)> {
    if !(1..=3).contains(&degree) {
        return Err(Error::Parameter(format!("polynomial degree must be 1, 2 or 3, got {degree}")));
    }
    let n = labels.len();
    if d0.len() != n || d1.len() != n {
        return Err(Error::Dimension("feature and label lengths differ".into()));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::Parameter("pairwise rule needs labels 0/1".into()));
    }
    if n < degree {
        return Err(Error::Fit(format!("{n} points cannot determine a degree-{degree} polynomial")));
    }
    let prob = Problem { d0: d0.to_vec(), d1: d1.to_vec(), labels: labels.to_vec() };

    let subsets: Vec<Vec<usize>> = match binomial(n, degree) {
        Some(c) if c <= opts.candidates => all_subsets(n, degree),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let mut out = Vec::with_capacity(opts.candidates);
            let mut attempts = 0usize;
            while out.len() < opts.candidates && attempts < opts.candidates.saturating_mul(10) {
                attempts += 1;
                let mut s = index::sample(&mut rng, n, degree).into_vec();
                s.sort_unstable();
                if prob.interpolate(&s, false).is_some() || prob.interpolate(&s, true).is_some() {
                    out.push(s);
                }
            }
            out
        }
    };

    let prob_ref = &prob;
    let mut pool: Vec<Candidate> = subsets
        .par_iter()
        .flat_map_iter(|s| {
            [false, true].into_iter().filter_map(move |swapped| {
                let coefs = prob_ref.interpolate(s, swapped)?;
                let (errors, above_class) = prob_ref.score(&coefs, swapped);
                Some(Candidate { coefs, swapped, above_class, errors })
            })
        })
        .collect();
    if let Some(r) = start {
        let mut coefs = r.coefs.clone();
        coefs.resize(degree, 0.0);
        let (errors, above_class) = prob.score(&coefs, r.swapped);
        pool.insert(0, Candidate { coefs, swapped: r.swapped, above_class, errors });
    }
    if pool.is_empty() {
        return Err(Error::Fit("no nondegenerate candidate polynomial".into()));
    }

    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by_key(|&i| (pool[i].errors, i));
    let mut best = pool[order[0]].clone();
    for &i in order.iter().take(opts.refine) {
        let c = &pool[i];
        let (x, _) = nelder_mead(
            |a: &[f64]| prob.surrogate(a, c.swapped, c.above_class),
            &c.coefs,
            200 * degree,
            1e-10,
        );
        let (errors, above_class) = prob.score(&x, c.swapped);
        if errors < best.errors {
            best = Candidate { coefs: x, swapped: c.swapped, above_class, errors };
        }
    }
    Ok((DdkRule { coefs: best.coefs, swapped: best.swapped, above_class: best.above_class }, best.errors))
}

/// Rules for every group pair plus the majority vote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DdkModel {
    pub degree: usize,
    /// `(i, j, rule)` with `i < j`; rule class 0 means group `i`.
    pub rules: Vec<(usize, usize, DdkRule)>,
}

fn check_square<T: Scalar>(features: &ArrayView2<T>, n_groups: usize) -> Result<()> {
    if features.ncols() != n_groups {
        return Err(Error::Parameter(format!(
            "depth-versus-depth rules need one depth coordinate per group ({n_groups}), got {} features",
            features.ncols()
        )));
    }
    Ok(())
}

impl DdkModel {
    /// Fits nested rules of degree 1, ..., `degree` for each group pair and
    /// keeps the last.
    pub fn fit<T: Scalar>(
        features: ArrayView2<T>,
        labels: &[usize],
        n_groups: usize,
        degree: usize,
        opts: &DdkOptions,
    ) -> Result<Self> {
        check_square(&features, n_groups)?;
        if !(1..=3).contains(&degree) {
            return Err(Error::Parameter(format!("polynomial degree must be 1, 2 or 3, got {degree}")));
        }
        let mut rules = Vec::new();
        let mut pair = 0u64;
        for i in 0..n_groups {
            for j in (i + 1)..n_groups {
                let rows: Vec<usize> = (0..labels.len()).filter(|&r| labels[r] == i || labels[r] == j).collect();
                let d0: Vec<f64> = rows.iter().map(|&r| features[[r, i]].as_f64()).collect();
                let d1: Vec<f64> = rows.iter().map(|&r| features[[r, j]].as_f64()).collect();
                let y: Vec<usize> = rows.iter().map(|&r| usize::from(labels[r] == j)).collect();
                let mut rule: Option<DdkRule> = None;
                for k in 1..=degree {
                    let o = DdkOptions { seed: derive_seed(opts.seed, pair * 4 + k as u64), ..*opts };
                    rule = Some(fit_ddk_pair(&d0, &d1, &y, k, &o, rule.as_ref())?.0);
                }
                rules.push((i, j, rule.expect("degree >= 1")));
                pair += 1;
            }
        }
        Ok(DdkModel { degree, rules })
    }

    pub fn predict_row(&self, d: &[f64]) -> usize {
        let g = d.len();
        if g == 2 {
            return self.rules[0].2.predict(d[0], d[1]);
        }
        let mut votes = vec![0usize; g];
        for (i, j, r) in &self.rules {
            votes[if r.predict(d[*i], d[*j]) == 0 { *i } else { *j }] += 1;
        }
        vote_winner(&votes, d)
    }
}

/// Most voted group; ties go to the tied group with the largest depth, then
/// to the smallest index.
pub(crate) fn vote_winner(votes: &[usize], depth: &[f64]) -> usize {
    let top = *votes.iter().max().expect("nonempty");
    let mut best = usize::MAX;
    for (c, &v) in votes.iter().enumerate() {
        if v == top && (best == usize::MAX || depth[c] > depth[best]) {
            best = c;
        }
    }
    best
}

/// Maximum depth rule: the group with the largest depth coordinate.
pub(crate) fn max_depth(d: &[f64]) -> usize {
    let mut best = 0;
    for (c, &v) in d.iter().enumerate() {
        if v > d[best] {
            best = c;
        }
    }
    best
}

pub(crate) fn check_md<T: Scalar>(features: ArrayView2<T>, n_groups: usize) -> Result<()> {
    check_square(&features, n_groups)
}
