use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{SortedSample, UnivariateDepthKind};
use crate::error::{Error, Result};
use crate::Scalar;

/// Default number of directions for the bivariate approximation.
pub const DEFAULT_HALFSPACE_DIRECTIONS: usize = 256;

/// Approximate bivariate Tukey depth: the minimum over a fixed set of angles
/// of the univariate halfspace depth of the projected point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct HalfspaceDepth2d<T: Scalar> {
    angles: Vec<T>,
    projections: Vec<SortedSample<T>>,
}

impl<T: Scalar> HalfspaceDepth2d<T> {
    /// Angles `pi (r + u) / R`, `r = 0..R`, with one jitter `u ~ U[0, 1)` drawn
    /// from `seed`.
    pub fn fit(sample: &[[T; 2]], r: usize, seed: u64) -> Result<Self> {
        if r == 0 {
            return Err(Error::Parameter("at least one direction is required".into()));
        }
        let u: f64 = ChaCha8Rng::seed_from_u64(seed).random();
        let angles = (0..r)
            .map(|k| T::lit(std::f64::consts::PI * (k as f64 + u) / r as f64))
            .collect();
        Self::with_angles(sample, angles)
    }

    pub fn with_angles(sample: &[[T; 2]], angles: Vec<T>) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::Parameter("halfspace depth needs a nonempty sample".into()));
        }
        if angles.is_empty() {
            return Err(Error::Parameter("at least one direction is required".into()));
        }
        let projections = angles
            .iter()
            .map(|&a| {
                let (s, c) = a.sin_cos();
                SortedSample::new(sample.iter().map(|p| c * p[0] + s * p[1]).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(HalfspaceDepth2d { angles, projections })
    }

    pub fn angles(&self) -> &[T] {
        &self.angles
    }

    pub fn depth(&self, point: [T; 2]) -> T {
        self.angles
            .iter()
            .zip(&self.projections)
            .map(|(&a, s)| {
                let (sn, c) = a.sin_cos();
                s.depth(UnivariateDepthKind::Halfspace, c * point[0] + sn * point[1])
                    .expect("halfspace depth is total")
            })
            .fold(T::infinity(), T::min)
    }
}

/// Approximate Tukey depth of `point` within `sample` over `r` directions.
pub fn halfspace_depth_2d<T: Scalar>(point: [T; 2], sample: &[[T; 2]], r: usize, seed: u64) -> Result<T> {
    Ok(HalfspaceDepth2d::fit(sample, r, seed)?.depth(point))
}
