//! Univariate and functional data depths.

mod fm;
mod halfspace;
mod hmode;
mod mahalanobis;
mod model;
mod rp;
mod spec;
mod univariate;

pub use fm::{fm_depth, fm_depth_pvariate, IntegratedDepth, JointIntegratedDepth};
pub use halfspace::{halfspace_depth_2d, HalfspaceDepth2d, DEFAULT_HALFSPACE_DIRECTIONS};
pub use hmode::{fit_hm_bandwidth, pairwise_distances, HModeDepth};
pub use mahalanobis::{MahalanobisReference, MAHALANOBIS_RIDGE};
pub use model::{hm_depth, rp_depth, DepthModel};
pub use rp::{random_directions, RandomProjectionDepth};
pub use spec::{Combination, DepthFamily, DepthSpec};
pub use univariate::{univariate_depth, SortedSample, UnivariateDepthKind};

use crate::error::{Error, Result};
use crate::Scalar;

/// Elementwise `sum_j w_j depths_j`.
pub fn combine_weighted<T: Scalar>(depths: &[Vec<T>], weights: &[T]) -> Result<Vec<T>> {
    if depths.len() != weights.len() || depths.is_empty() {
        return Err(Error::Dimension(format!("{} depth sequences, {} weights", depths.len(), weights.len())));
    }
    if weights.iter().any(|w| *w < T::zero() || !w.is_finite()) {
        return Err(Error::Parameter("weights must be nonnegative".into()));
    }
    let sum = weights.iter().copied().sum::<T>();
    if (sum - T::one()).abs() > T::lit(1e-12).max(T::epsilon() * T::lit(4.0)) {
        return Err(Error::Parameter(format!("weights sum to {sum}, not 1")));
    }
    let n = depths[0].len();
    if depths.iter().any(|d| d.len() != n) {
        return Err(Error::Dimension("depth sequences differ in length".into()));
    }
    Ok((0..n)
        .map(|i| depths.iter().zip(weights).map(|(d, &w)| w * d[i]).sum())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_combination() {
        let a = vec![0.2f64, 0.4];
        let b = vec![0.6, 0.8];
        assert_eq!(combine_weighted(&[a.clone(), b.clone()], &[1.0, 0.0]).unwrap(), a);
        let c = combine_weighted(&[a.clone(), b.clone()], &[0.5, 0.5]).unwrap();
        assert!((c[0] - 0.4).abs() < 1e-15 && (c[1] - 0.6).abs() < 1e-15);
        assert!(combine_weighted(&[a.clone(), b.clone()], &[1.5, -0.5]).is_err());
        assert!(combine_weighted(&[a], &[0.5, 0.5]).is_err());
    }
}
