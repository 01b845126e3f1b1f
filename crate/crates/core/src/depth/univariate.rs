use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{sort_scalars, Scalar};

/// One-dimensional depth used inside the integrated and projection depths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum UnivariateDepthKind {
    /// Halfspace (Tukey) depth `min(F(x), 1 - F(x))`.
    #[serde(rename = "HS")]
    Halfspace,
    /// Original integrated-depth choice `1 - |1/2 - F(x)|`.
    #[serde(rename = "FMD")]
    FraimanMuniz,
    /// Simplicial depth `2 F(x) (1 - F(x-))`.
    #[serde(rename = "SD")]
    Simplicial,
    /// Mahalanobis depth `1 / (1 + (x - mean)^2 / var)`.
    #[default]
    #[serde(rename = "MhD")]
    Mahalanobis,
}

impl UnivariateDepthKind {
    pub fn as_str(self) -> &'static str {
        match self {
            UnivariateDepthKind::Halfspace => "HS",
            UnivariateDepthKind::FraimanMuniz => "FMD",
            UnivariateDepthKind::Simplicial => "SD",
            UnivariateDepthKind::Mahalanobis => "MhD",
        }
    }
}

impl fmt::Display for UnivariateDepthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for UnivariateDepthKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "HS" | "TUKEY" | "HALFSPACE" => Ok(UnivariateDepthKind::Halfspace),
            "FMD" | "FM1" => Ok(UnivariateDepthKind::FraimanMuniz),
            "SD" | "SIMPLICIAL" => Ok(UnivariateDepthKind::Simplicial),
            "MHD" | "MAHALANOBIS" => Ok(UnivariateDepthKind::Mahalanobis),
            _ => Err(Error::Parameter(format!("unknown univariate depth `{s}`"))),
        }
    }
}

/// A reference sample prepared for repeated univariate depth queries:
/// sorted values for the cdf-based depths, mean and variance for MhD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct SortedSample<T: Scalar> {
    sorted: Vec<T>,
    mean: T,
    var: T,
}

impl<T: Scalar> SortedSample<T> {
    pub fn new(mut values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Parameter("univariate depth needs a nonempty sample".into()));
        }
        let n = T::from_count(values.len());
        let mean = values.iter().copied().fold(T::zero(), |s, v| s + v) / n;
        let var = if values.len() > 1 {
            values.iter().fold(T::zero(), |s, &v| s + (v - mean) * (v - mean)) / (n - T::one())
        } else {
            T::zero()
        };
        sort_scalars(&mut values);
        Ok(SortedSample { sorted: values, mean, var })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn mean(&self) -> T {
        self.mean
    }

    pub fn variance(&self) -> T {
        self.var
    }

    /// Right-continuous empirical cdf `#{v <= x} / N`.
    pub fn cdf(&self, x: T) -> T {
        T::from_count(self.sorted.partition_point(|&v| v <= x)) / T::from_count(self.sorted.len())
    }

    /// Left limit `#{v < x} / N`.
    pub fn cdf_left(&self, x: T) -> T {
        T::from_count(self.sorted.partition_point(|&v| v < x)) / T::from_count(self.sorted.len())
    }

    pub fn depth(&self, kind: UnivariateDepthKind, x: T) -> Result<T> {
        let one = T::one();
        let half = T::lit(0.5);
        Ok(match kind {
            UnivariateDepthKind::Halfspace => {
                let f = self.cdf(x);
                f.min(one - f)
            }
            UnivariateDepthKind::FraimanMuniz => one - (half - self.cdf(x)).abs(),
            UnivariateDepthKind::Simplicial => T::lit(2.0) * self.cdf(x) * (one - self.cdf_left(x)),
            UnivariateDepthKind::Mahalanobis => {
                let d = x - self.mean;
                if self.var > T::zero() {
                    one / (one + d * d / self.var)
                } else if d == T::zero() {
                    one
                } else {
                    return Err(Error::DegenerateScale);
                }
            }
        })
    }
}

/// Depth of `x` with respect to `sample`.
pub fn univariate_depth<T: Scalar>(kind: UnivariateDepthKind, x: T, sample: &[T]) -> Result<T> {
    SortedSample::new(sample.to_vec())?.depth(kind, x)
}
