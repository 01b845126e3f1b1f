use serde::{Deserialize, Serialize};

use super::fm::{IntegratedDepth, JointIntegratedDepth};
use super::hmode::HModeDepth;
use super::rp::RandomProjectionDepth;
use super::{combine_weighted, Combination, DepthFamily, DepthSpec};
use crate::error::{Error, Result};
use crate::fdata::MultiFunctionalData;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
enum Scorer<T: Scalar> {
    Integrated { component: usize, depth: IntegratedDepth<T> },
    JointIntegrated(JointIntegratedDepth<T>),
    HMode(HModeDepth<T>),
    Projection(RandomProjectionDepth<T>),
}

impl<T: Scalar> Scorer<T> {
    fn single(spec: &DepthSpec, reference: &MultiFunctionalData<T>, j: usize) -> Result<Self> {
        Ok(match spec.family {
            DepthFamily::Integrated => Scorer::Integrated {
                component: j,
                depth: IntegratedDepth::fit(reference.component(j), spec.univariate)?,
            },
            DepthFamily::HMode => Scorer::HMode(HModeDepth::fit(reference, &[j], spec.h_quantile, false)?),
            DepthFamily::RandomProjection => Scorer::Projection(RandomProjectionDepth::fit_component(
                reference,
                j,
                spec.univariate,
                spec.projections,
                spec.seed,
            )?),
        })
    }

    fn joint(spec: &DepthSpec, reference: &MultiFunctionalData<T>) -> Result<Self> {
        Ok(match spec.family {
            DepthFamily::Integrated => Scorer::JointIntegrated(JointIntegratedDepth::fit(reference)?),
            DepthFamily::HMode => {
                let comps: Vec<usize> = (0..reference.n_components()).collect();
                Scorer::HMode(HModeDepth::fit(reference, &comps, spec.h_quantile, spec.scale_components)?)
            }
            DepthFamily::RandomProjection => {
                Scorer::Projection(RandomProjectionDepth::fit_joint(reference, spec.projections, spec.seed)?)
            }
        })
    }

    fn score(&self, target: &MultiFunctionalData<T>) -> Result<Vec<T>> {
        match self {
            Scorer::Integrated { component, depth } => {
                if *component >= target.n_components() {
                    return Err(Error::Dimension(format!("target lacks component {component}")));
                }
                depth.score(target.component(*component))
            }
            Scorer::JointIntegrated(d) => d.score(target),
            Scorer::HMode(d) => d.score(target),
            Scorer::Projection(d) => d.score(target),
        }
    }
}

/// A depth fitted on one reference sample with all hyperparameters frozen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct DepthModel<T: Scalar> {
    spec: DepthSpec,
    component_names: Vec<String>,
    weights: Vec<T>,
    scorers: Vec<Scorer<T>>,
}

impl<T: Scalar> DepthModel<T> {
    pub fn fit(spec: &DepthSpec, reference: &MultiFunctionalData<T>) -> Result<Self> {
        spec.validate()?;
        let p = reference.n_components();
        let mut weights = Vec::new();
        let scorers = match spec.combination {
            Combination::Component(j) => {
                if j >= p {
                    return Err(Error::Parameter(format!("component {j} requested, data has {p}")));
                }
                vec![Scorer::single(spec, reference, j)?]
            }
            Combination::Weighted => {
                weights = spec.resolved_weights(p)?.into_iter().map(T::lit).collect();
                (0..p).map(|j| Scorer::single(spec, reference, j)).collect::<Result<_>>()?
            }
            Combination::Concatenated => (0..p).map(|j| Scorer::single(spec, reference, j)).collect::<Result<_>>()?,
            Combination::Joint => vec![Scorer::joint(spec, reference)?],
        };
        Ok(DepthModel { spec: spec.clone(), component_names: reference.names().to_vec(), weights, scorers })
    }

    pub fn spec(&self) -> &DepthSpec {
        &self.spec
    }

    /// Number of depth coordinates this model produces (p for `.m`, else 1).
    pub fn n_coordinates(&self) -> usize {
        match self.spec.combination {
            Combination::Concatenated => self.scorers.len(),
            _ => 1,
        }
    }

    /// Component label of each coordinate, used in column names.
    pub fn coordinate_components(&self) -> Vec<String> {
        match self.spec.combination {
            Combination::Component(j) => vec![self.component_names[j].clone()],
            Combination::Concatenated => self.component_names.clone(),
            Combination::Weighted => vec![self.component_names.join("+")],
            Combination::Joint => vec![self.component_names.join("&")],
        }
    }

    /// Bandwidth of an h-mode model.
    pub fn bandwidth(&self) -> Option<T> {
        match self.scorers.first() {
            Some(Scorer::HMode(d)) => Some(d.bandwidth()),
            _ => None,
        }
    }

    /// Depth coordinates of every target curve, one vector per coordinate.
    pub fn score(&self, target: &MultiFunctionalData<T>) -> Result<Vec<Vec<T>>> {
        let parts = self.scorers.iter().map(|s| s.score(target)).collect::<Result<Vec<_>>>()?;
        match self.spec.combination {
            Combination::Weighted => Ok(vec![combine_weighted(&parts, &self.weights)?]),
            _ => Ok(parts),
        }
    }

    /// Scores of a single-coordinate model.
    pub fn score_single(&self, target: &MultiFunctionalData<T>) -> Result<Vec<T>> {
        if self.n_coordinates() != 1 {
            return Err(Error::Parameter(format!(
                "{} produces {} coordinates",
                self.spec.label(),
                self.n_coordinates()
            )));
        }
        Ok(self.score(target)?.remove(0))
    }
}

fn expect_family<T: Scalar>(model: &DepthModel<T>, family: DepthFamily) -> Result<()> {
    if model.spec.family != family {
        return Err(Error::Parameter(format!("expected a {family} model, got {}", model.spec.label())));
    }
    Ok(())
}

/// h-mode depth of every target curve under a fitted hM model.
pub fn hm_depth<T: Scalar>(target: &MultiFunctionalData<T>, model: &DepthModel<T>) -> Result<Vec<T>> {
    expect_family(model, DepthFamily::HMode)?;
    model.score_single(target)
}

/// Random projection depth of every target curve under a fitted RP model.
pub fn rp_depth<T: Scalar>(target: &MultiFunctionalData<T>, model: &DepthModel<T>) -> Result<Vec<T>> {
    expect_family(model, DepthFamily::RandomProjection)?;
    model.score_single(target)
}
