use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::UnivariateDepthKind;
use crate::error::{Error, Result};

/// Functional depth family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DepthFamily {
    /// Integrated (Fraiman-Muniz) depth.
    #[serde(rename = "FM")]
    Integrated,
    /// h-mode (kernel) depth.
    #[serde(rename = "hM")]
    HMode,
    /// Random projection depth.
    #[serde(rename = "RP")]
    RandomProjection,
}

impl DepthFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            DepthFamily::Integrated => "FM",
            DepthFamily::HMode => "hM",
            DepthFamily::RandomProjection => "RP",
        }
    }
}

impl fmt::Display for DepthFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DepthFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fm" => Ok(DepthFamily::Integrated),
            "hm" | "mode" => Ok(DepthFamily::HMode),
            "rp" => Ok(DepthFamily::RandomProjection),
            _ => Err(Error::Parameter(format!("unknown depth family `{s}`"))),
        }
    }
}

/// How the components of a multivariate functional datum enter the depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Combination {
    /// Only component `j` (suffix `.j`).
    Component(usize),
    /// Weighted sum of the per-component depths (`.w`).
    Weighted,
    /// One depth of the joint component vector (`.p`).
    Joint,
    /// One coordinate per component (`.m`).
    Concatenated,
}

impl fmt::Display for Combination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Combination::Component(j) => write!(f, "{j}"),
            Combination::Weighted => f.write_str("w"),
            Combination::Joint => f.write_str("p"),
            Combination::Concatenated => f.write_str("m"),
        }
    }
}

impl FromStr for Combination {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "w" => Ok(Combination::Weighted),
            "p" => Ok(Combination::Joint),
            "m" => Ok(Combination::Concatenated),
            _ => s
                .parse::<usize>()
                .map(Combination::Component)
                .map_err(|_| Error::Parameter(format!("unknown combination `{s}`"))),
        }
    }
}

impl From<Combination> for String {
    fn from(c: Combination) -> String {
        c.to_string()
    }
}

impl TryFrom<String> for Combination {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

fn default_projections() -> usize {
    50
}

fn default_h_quantile() -> f64 {
    0.15
}

fn default_true() -> bool {
    true
}

/// Declarative description of one depth feature.
///
/// Text form (one `key = value` per line):
///
/// ```text
/// family = "hM"
/// univariate = "MhD"
/// combination = "w"
/// weights = [0.5, 0.5]
/// projections = 50
/// h_quantile = 0.15
/// seed = 1
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDepthSpec")]
pub struct DepthSpec {
    pub family: DepthFamily,
    /// Defaults to MhD for FM and HS for RP; unused by hM.
    pub univariate: UnivariateDepthKind,
    pub combination: Combination,
    /// Component weights for `.w`; empty means uniform `1/p`.
    #[serde(default)]
    pub weights: Vec<f64>,
    /// Number of random directions (RP).
    pub projections: usize,
    /// Pairwise-distance quantile used as the bandwidth (hM).
    pub h_quantile: f64,
    /// Divide each component metric by its own bandwidth before forming the
    /// product metric (hM, `.p` only).
    pub scale_components: bool,
    /// Seed for the random directions (RP).
    pub seed: u64,
}

/// Text form with optional fields; the univariate default depends on the
/// family.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDepthSpec {
    family: DepthFamily,
    #[serde(default)]
    univariate: Option<UnivariateDepthKind>,
    combination: Combination,
    #[serde(default)]
    weights: Vec<f64>,
    #[serde(default = "default_projections", alias = "R")]
    projections: usize,
    #[serde(default = "default_h_quantile")]
    h_quantile: f64,
    #[serde(default = "default_true")]
    scale_components: bool,
    #[serde(default)]
    seed: u64,
}

impl TryFrom<RawDepthSpec> for DepthSpec {
    type Error = Error;
    fn try_from(r: RawDepthSpec) -> Result<Self> {
        let base = DepthSpec::new(r.family, r.combination);
        Ok(DepthSpec {
            univariate: r.univariate.unwrap_or(base.univariate),
            weights: r.weights,
            projections: r.projections,
            h_quantile: r.h_quantile,
            scale_components: r.scale_components,
            seed: r.seed,
            ..base
        })
    }
}

impl DepthSpec {
    pub fn new(family: DepthFamily, combination: Combination) -> Self {
        let univariate = match family {
            DepthFamily::RandomProjection => UnivariateDepthKind::Halfspace,
            _ => UnivariateDepthKind::Mahalanobis,
        };
        DepthSpec {
            family,
            univariate,
            combination,
            weights: Vec::new(),
            projections: default_projections(),
            h_quantile: default_h_quantile(),
            scale_components: true,
            seed: 0,
        }
    }

    pub fn with_univariate(mut self, kind: UnivariateDepthKind) -> Self {
        self.univariate = kind;
        self
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Self {
        self.weights = weights;
        self
    }

    pub fn with_projections(mut self, r: usize) -> Self {
        self.projections = r;
        self
    }

    pub fn with_h_quantile(mut self, q: f64) -> Self {
        self.h_quantile = q;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Short label such as `hM.w`; a non-default univariate depth is
    /// appended, as in `FM.0-FMD`.
    pub fn label(&self) -> String {
        let default = DepthSpec::new(self.family, self.combination).univariate;
        if self.family == DepthFamily::HMode || self.univariate == default {
            format!("{}.{}", self.family, self.combination)
        } else {
            format!("{}.{}-{}", self.family, self.combination, self.univariate)
        }
    }

    /// Checks the parameters that do not depend on the data.
    pub fn validate(&self) -> Result<()> {
        if self.projections == 0 {
            return Err(Error::Parameter("projections (R) must be at least 1".into()));
        }
        if !(self.h_quantile > 0.0 && self.h_quantile < 1.0) {
            return Err(Error::Parameter(format!("h_quantile must lie in (0, 1), got {}", self.h_quantile)));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Parameter("weights must be nonnegative".into()));
        }
        Ok(())
    }

    /// Effective weights for `p` components.
    pub fn resolved_weights(&self, p: usize) -> Result<Vec<f64>> {
        self.validate()?;
        if self.weights.is_empty() {
            return Ok(vec![1.0 / p as f64; p]);
        }
        if self.weights.len() != p {
            return Err(Error::Parameter(format!(
                "{} weights given for {p} components",
                self.weights.len()
            )));
        }
        let s: f64 = self.weights.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!("weights sum to {s}, not 1")));
        }
        Ok(self.weights.clone())
    }

    pub fn to_config_string(&self) -> String {
        toml::to_string(self).expect("depth spec serializes")
    }

    pub fn from_config_str(text: &str) -> Result<Self> {
        let spec: DepthSpec = toml::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Parses the short form `FAMILY.SUFFIX[-UNIVARIATE]`, e.g. `FM.0`, `hM.w`,
/// `RP.m`, `FM.1-FMD`.
impl FromStr for DepthSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if let Some((head, kind)) = s.split_once('-') {
            return Ok(head.parse::<DepthSpec>()?.with_univariate(kind.parse()?));
        }
        let (fam, comb) = s
            .split_once('.')
            .ok_or_else(|| Error::Parameter(format!("depth variant `{s}` is not of the form FAMILY.SUFFIX")))?;
        Ok(DepthSpec::new(fam.parse()?, comb.parse()?))
    }
}
