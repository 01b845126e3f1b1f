use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Scalar;

/// Centre of the ball and of the first ring.
pub const BALL_CENTER: [f64; 2] = [-1.0, 0.0];
/// Centre of the second ring.
pub const SECOND_RING_CENTER: [f64; 2] = [0.3, 0.0];
pub const RING_INNER: f64 = 0.5;
pub const RING_OUTER: f64 = 0.6;

/// A labeled sample of points in the plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct PlanarSample<T: Scalar> {
    pub points: Vec<[T; 2]>,
    pub labels: Vec<usize>,
}

impl<T: Scalar> PlanarSample<T> {
    /// Points of class `c`.
    pub fn class_points(&self, c: usize) -> Vec<[T; 2]> {
        self.points.iter().zip(&self.labels).filter(|(_, &l)| l == c).map(|(p, _)| *p).collect()
    }
}

fn polar<T: Scalar>(center: [f64; 2], r: f64, angle: f64) -> [T; 2] {
    [T::lit(center[0] + r * angle.cos()), T::lit(center[1] + r * angle.sin())]
}

/// Class 0: uniform on the unit disk centred at (-1, 0). Class 1: uniform on
/// two annuli of radii [0.5, 0.6] centred at (-1, 0) and (0.3, 0), each ring
/// chosen by a fair coin. Radii come from the inverse cdf
/// `r = sqrt(r0^2 + u (r1^2 - r0^2))`.
pub fn simulate_rings<T: Scalar>(n_ball: usize, n_rings: usize, seed: u64) -> Result<PlanarSample<T>> {
    if n_ball == 0 || n_rings == 0 {
        return Err(Error::Parameter("both classes need at least one point".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tau = std::f64::consts::TAU;
    let mut points = Vec::with_capacity(n_ball + n_rings);
    for _ in 0..n_ball {
        let r = rng.random::<f64>().sqrt();
        points.push(polar(BALL_CENTER, r, tau * rng.random::<f64>()));
    }
    let (a, b) = (RING_INNER * RING_INNER, RING_OUTER * RING_OUTER);
    for _ in 0..n_rings {
        let center = if rng.random::<bool>() { SECOND_RING_CENTER } else { BALL_CENTER };
        let r = (a + rng.random::<f64>() * (b - a)).sqrt();
        points.push(polar(center, r, tau * rng.random::<f64>()));
    }
    let labels = (0..n_ball + n_rings).map(|i| usize::from(i >= n_ball)).collect();
    Ok(PlanarSample { points, labels })
}

/// True when `p` lies in one of the two annuli (the Bayes region of class 1).
pub fn in_rings(p: [f64; 2]) -> bool {
    [BALL_CENTER, SECOND_RING_CENTER].iter().any(|c| {
        let r = ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt();
        (RING_INNER..=RING_OUTER).contains(&r)
    })
}

/// Second population of the bivariate normal examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalsVariant {
    /// Mean (2, 2), identity covariance.
    MeanShift,
    /// Mean 0, covariance 2 I.
    CovScale,
}

/// `n` standard bivariate normal points (class 0) followed by `n` points of
/// the second population (class 1). Class 0 is drawn first, so it is the
/// same for both variants under one seed.
pub fn simulate_normals<T: Scalar>(variant: NormalsVariant, n: usize, seed: u64) -> Result<PlanarSample<T>> {
    if n == 0 {
        return Err(Error::Parameter("n must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = || -> f64 { StandardNormal.sample(&mut rng) };
    let mut points = Vec::with_capacity(2 * n);
    for _ in 0..n {
        points.push([T::lit(z()), T::lit(z())]);
    }
    for _ in 0..n {
        let (a, b) = (z(), z());
        points.push(match variant {
            NormalsVariant::MeanShift => [T::lit(a + 2.0), T::lit(b + 2.0)],
            NormalsVariant::CovScale => [T::lit(a * 2f64.sqrt()), T::lit(b * 2f64.sqrt())],
        });
    }
    let labels = (0..2 * n).map(|i| usize::from(i >= n)).collect();
    Ok(PlanarSample { points, labels })
}
