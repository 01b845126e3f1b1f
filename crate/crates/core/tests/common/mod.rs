//! Independent oracles and property checks shared by the integration and
//! acceptance targets.
#![allow(dead_code)]

pub mod properties;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Exact bivariate Tukey depth by an angular sweep: the count
/// `min(#{<u, p> <= <u, x>}, #{<u, p> > <u, x>}) / N` is piecewise constant
/// in the direction angle, changing only where `u` is orthogonal to some
/// `p_i - x`, so evaluating it once inside every arc between consecutive
/// critical angles gives the minimum over generic directions.
pub fn exact_tukey_depth(x: [f64; 2], sample: &[[f64; 2]]) -> f64 {
    let n = sample.len() as f64;
    let mut critical: Vec<f64> = sample
        .iter()
        .filter(|p| p[0] != x[0] || p[1] != x[1])
        .map(|p| {
            let a = (p[1] - x[1]).atan2(p[0] - x[0]) + std::f64::consts::FRAC_PI_2;
            a.rem_euclid(std::f64::consts::PI)
        })
        .collect();
    if critical.is_empty() {
        return 0.0;
    }
    critical.sort_by(f64::total_cmp);
    let mut probes: Vec<f64> = critical.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    probes.push(0.5 * (critical[critical.len() - 1] + critical[0] + std::f64::consts::PI));
    probes
        .into_iter()
        .map(|a| {
            let (s, c) = a.sin_cos();
            let px = c * x[0] + s * x[1];
            let le = sample.iter().filter(|p| c * p[0] + s * p[1] <= px).count();
            le.min(sample.len() - le) as f64 / n
        })
        .fold(f64::INFINITY, f64::min)
}

/// Trapezoid rule on an arbitrary grid.
pub fn trapezoid(t: &[f64], y: &[f64]) -> f64 {
    (1..t.len()).map(|k| 0.5 * (t[k] - t[k - 1]) * (y[k] + y[k - 1])).sum()
}

/// Modified band depth with bands of two curves, by direct enumeration of
/// all ordered pairs `(i, j)` of reference curves: the proportion of pairs
/// whose band contains `x(t)`, integrated over `t`.
pub fn brute_force_mbd(x: &[f64], reference: &[Vec<f64>], t: &[f64]) -> f64 {
    let n = reference.len();
    let inside: Vec<f64> = (0..t.len())
        .map(|k| {
            let mut count = 0usize;
            for a in reference {
                for b in reference {
                    let (lo, hi) = if a[k] <= b[k] { (a[k], b[k]) } else { (b[k], a[k]) };
                    if lo <= x[k] && x[k] <= hi {
                        count += 1;
                    }
                }
            }
            count as f64 / (n * n) as f64
        })
        .collect();
    trapezoid(t, &inside)
}

/// Random curves as rows: a random walk plus noise, so that curves cross.
pub fn random_curves(rng: &mut ChaCha8Rng, n: usize, t: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let mut level = rng.random::<f64>() * 2.0 - 1.0;
            (0..t)
                .map(|_| {
                    level += rng.random::<f64>() - 0.5;
                    level
                })
                .collect()
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Outcome line of one acceptance criterion.
pub struct Verdict {
    pub id: &'static str,
    pub status: Status,
    pub detail: String,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Verdict {
    pub fn check(id: &'static str, ok: bool, detail: String) -> Self {
        Verdict { id, status: if ok { Status::Pass } else { Status::Fail }, detail }
    }

    pub fn line(&self) -> String {
        let s = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIPPED",
        };
        format!("criterion {}: {s} | {}", self.id, self.detail)
    }
}
