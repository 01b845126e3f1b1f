//! Classifiers on the depth-feature space.

mod ddk;
mod discriminant;
mod gam;
mod glm;
mod knn;
mod nelder_mead;
mod np;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

pub use ddk::{fit_ddk_pair, DdkModel, DdkOptions, DdkRule, SURROGATE_TEMPERATURE};
pub use discriminant::{DiscriminantModel, DISCRIMINANT_RIDGE};
pub use gam::{GamModel, GAM_DEFAULT_BASIS};
pub use glm::{CoefficientRow, GlmModel, GLM_MAX_ITER, GLM_SEPARATION_RIDGE, GLM_TOL};
pub use knn::KnnModel;
pub use np::{NpModel, NP_BANDWIDTH_QUANTILE};

use crate::error::{Error, Result};
use crate::Scalar;

/// Numerically stable softmax.
pub(crate) fn softmax_row<T: Scalar>(scores: &[T]) -> Vec<T> {
    let m = scores.iter().copied().fold(T::neg_infinity(), T::max);
    let e: Vec<T> = scores.iter().map(|&s| (s - m).exp()).collect();
    let total: T = e.iter().copied().sum();
    e.into_iter().map(|v| v / total).collect()
}

fn argmax<T: Scalar>(p: &[T]) -> usize {
    let mut best = 0;
    for (c, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = c;
        }
    }
    best
}

/// Classifier family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ClassifierKind {
    /// Polynomial separator of degree at most 1, 2 or 3.
    Ddk(u8),
    /// Maximum depth.
    Md,
    Lda,
    Qda,
    Knn,
    Np,
    Glm,
    Gam,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 10] = [
        ClassifierKind::Ddk(1),
        ClassifierKind::Ddk(2),
        ClassifierKind::Ddk(3),
        ClassifierKind::Md,
        ClassifierKind::Lda,
        ClassifierKind::Qda,
        ClassifierKind::Knn,
        ClassifierKind::Np,
        ClassifierKind::Glm,
        ClassifierKind::Gam,
    ];

    /// Whether the rule reads the features as one depth per group.
    pub fn needs_depth_per_group(self) -> bool {
        matches!(self, ClassifierKind::Ddk(_) | ClassifierKind::Md)
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassifierKind::Ddk(k) => write!(f, "DD{k}"),
            ClassifierKind::Md => f.write_str("MD"),
            ClassifierKind::Lda => f.write_str("LDA"),
            ClassifierKind::Qda => f.write_str("QDA"),
            ClassifierKind::Knn => f.write_str("kNN"),
            ClassifierKind::Np => f.write_str("NP"),
            ClassifierKind::Glm => f.write_str("GLM"),
            ClassifierKind::Gam => f.write_str("GAM"),
        }
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "DD1" => ClassifierKind::Ddk(1),
            "DD2" => ClassifierKind::Ddk(2),
            "DD3" => ClassifierKind::Ddk(3),
            "MD" => ClassifierKind::Md,
            "LDA" => ClassifierKind::Lda,
            "QDA" => ClassifierKind::Qda,
            "KNN" => ClassifierKind::Knn,
            "NP" => ClassifierKind::Np,
            "GLM" => ClassifierKind::Glm,
            "GAM" => ClassifierKind::Gam,
            _ => return Err(Error::Parameter(format!("unknown classifier `{s}`"))),
        })
    }
}

impl From<ClassifierKind> for String {
    fn from(k: ClassifierKind) -> String {
        k.to_string()
    }
}

impl TryFrom<String> for ClassifierKind {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

fn default_candidates() -> usize {
    10_000
}

fn default_refine() -> usize {
    1
}

fn default_basis() -> usize {
    GAM_DEFAULT_BASIS
}

/// Hyperparameters; `None` means the automatic rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierOptions {
    /// Candidate subsets `M` for the polynomial rules.
    #[serde(default = "default_candidates")]
    pub ddk_candidates: usize,
    /// Refined candidates `m` for the polynomial rules.
    #[serde(default = "default_refine")]
    pub ddk_refine: usize,
    #[serde(default)]
    pub knn_k: Option<usize>,
    #[serde(default)]
    pub np_bandwidth: Option<f64>,
    #[serde(default = "default_basis")]
    pub gam_basis: usize,
    #[serde(default)]
    pub gam_penalty: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ClassifierOptions {
    fn default() -> Self {
        ClassifierOptions {
            ddk_candidates: default_candidates(),
            ddk_refine: default_refine(),
            knn_k: None,
            np_bandwidth: None,
            gam_basis: default_basis(),
            gam_penalty: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub enum FittedModel<T: Scalar> {
    Ddk(DdkModel),
    Md,
    Discriminant(DiscriminantModel<T>),
    Knn(KnnModel<T>),
    Np(NpModel<T>),
    Glm(GlmModel<T>),
    Gam(GamModel),
}

/// A fitted decision rule on `G` features for `g` groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct TrainedClassifier<T: Scalar> {
    kind: ClassifierKind,
    n_features: usize,
    n_groups: usize,
    /// Feature columns the model was fitted on; constant columns are
    /// dropped for every rule except the depth-versus-depth ones.
    columns: Vec<usize>,
    model: FittedModel<T>,
    training_error: f64,
}

/// Fits `kind` on the rows of `features` with labels in `0..n_groups`.
pub fn fit_classifier<T: Scalar>(
    kind: ClassifierKind,
    options: &ClassifierOptions,
    features: ArrayView2<T>,
    labels: &[usize],
    n_groups: usize,
) -> Result<TrainedClassifier<T>> {
    if features.nrows() != labels.len() {
        return Err(Error::Dimension(format!("{} feature rows, {} labels", features.nrows(), labels.len())));
    }
    if features.nrows() == 0 || features.ncols() == 0 {
        return Err(Error::Fit("empty training features".into()));
    }
    if labels.iter().any(|&l| l >= n_groups) || n_groups < 2 {
        return Err(Error::Parameter("labels must lie in 0..g with g >= 2".into()));
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite training feature".into()));
    }
    let columns: Vec<usize> = if kind.needs_depth_per_group() {
        (0..features.ncols()).collect()
    } else {
        (0..features.ncols())
            .filter(|&j| features.column(j).iter().any(|&v| v != features[[0, j]]))
            .collect()
    };
    if columns.is_empty() {
        return Err(Error::Fit("every feature is constant on the training sample".into()));
    }
    let full = features;
    let selected = features.select(ndarray::Axis(1), &columns);
    let features = selected.view();
    let model = match kind {
        ClassifierKind::Ddk(k) => {
            let opts = DdkOptions { candidates: options.ddk_candidates, refine: options.ddk_refine, seed: options.seed };
            FittedModel::Ddk(DdkModel::fit(features, labels, n_groups, k as usize, &opts)?)
        }
        ClassifierKind::Md => {
            ddk::check_md(features, n_groups)?;
            FittedModel::Md
        }
        ClassifierKind::Lda => FittedModel::Discriminant(DiscriminantModel::fit(features, labels, n_groups, false)?),
        ClassifierKind::Qda => FittedModel::Discriminant(DiscriminantModel::fit(features, labels, n_groups, true)?),
        ClassifierKind::Knn => FittedModel::Knn(KnnModel::fit(features, labels, n_groups, options.knn_k)?),
        ClassifierKind::Np => {
            FittedModel::Np(NpModel::fit(features, labels, n_groups, options.np_bandwidth.map(T::lit))?)
        }
        ClassifierKind::Glm => FittedModel::Glm(GlmModel::fit(features, labels, n_groups)?),
        ClassifierKind::Gam => {
            FittedModel::Gam(GamModel::fit(features, labels, n_groups, options.gam_basis, options.gam_penalty)?)
        }
    };
    let mut trained =
        TrainedClassifier { kind, n_features: full.ncols(), n_groups, columns, model, training_error: 0.0 };
    let pred = trained.predict(full)?;
    trained.training_error = evaluate(&pred, labels, n_groups)?.rate;
    Ok(trained)
}

impl<T: Scalar> TrainedClassifier<T> {
    pub fn kind(&self) -> ClassifierKind {
        self.kind
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_groups(&self) -> usize {
        self.n_groups
    }

    pub fn model(&self) -> &FittedModel<T> {
        &self.model
    }

    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    pub fn training_error(&self) -> f64 {
        self.training_error
    }

    fn check(&self, features: &ArrayView2<T>) -> Result<()> {
        if features.ncols() != self.n_features && features.nrows() > 0 {
            return Err(Error::Dimension(format!(
                "classifier trained on {} features, got {}",
                self.n_features,
                features.ncols()
            )));
        }
        Ok(())
    }

    fn predict_row(&self, x: ndarray::ArrayView1<T>) -> (usize, Option<Vec<T>>) {
        let xf = || -> Vec<f64> { x.iter().map(|v| v.as_f64()).collect() };
        match &self.model {
            FittedModel::Ddk(m) => (m.predict_row(&xf()), None),
            FittedModel::Md => (ddk::max_depth(&xf()), None),
            FittedModel::Discriminant(m) => {
                let p = m.posterior_row(x);
                (argmax(&m.log_scores(x)), Some(p))
            }
            FittedModel::Knn(m) => {
                let (c, p) = m.predict_row(&x.to_vec());
                (c, Some(p))
            }
            FittedModel::Np(m) => {
                let (c, p) = m.predict_row(&x.to_vec());
                (c, Some(p))
            }
            FittedModel::Glm(m) => {
                let p = m.posterior_row(x);
                (argmax(&p), Some(p))
            }
            FittedModel::Gam(m) => {
                let p = m.posterior_row(x);
                (argmax(&p), Some(p))
            }
        }
    }

    pub fn predict(&self, features: ArrayView2<T>) -> Result<Vec<usize>> {
        self.check(&features)?;
        if features.nrows() == 0 {
            return Ok(Vec::new());
        }
        let x = features.select(ndarray::Axis(1), &self.columns);
        Ok(x.rows().into_iter().map(|r| self.predict_row(r).0).collect())
    }

    /// Class posteriors for the probabilistic rules, `None` for the
    /// depth-versus-depth rules.
    pub fn posteriors(&self, features: ArrayView2<T>) -> Result<Option<Array2<T>>> {
        self.check(&features)?;
        if matches!(self.model, FittedModel::Ddk(_) | FittedModel::Md) {
            return Ok(None);
        }
        if features.nrows() == 0 {
            return Ok(Some(Array2::zeros((0, self.n_groups))));
        }
        let x = features.select(ndarray::Axis(1), &self.columns);
        let mut out = Array2::zeros((features.nrows(), self.n_groups));
        for (i, r) in x.rows().into_iter().enumerate() {
            let p = self.predict_row(r).1.expect("probabilistic model");
            for (c, v) in p.into_iter().enumerate() {
                out[[i, c]] = v;
            }
        }
        Ok(Some(out))
    }
}

/// Confusion counts (rows: truth, columns: prediction) and error rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionSummary {
    pub counts: Array2<usize>,
    pub rate: f64,
}

pub fn evaluate(predictions: &[usize], truth: &[usize], n_groups: usize) -> Result<ConfusionSummary> {
    if predictions.len() != truth.len() {
        return Err(Error::Dimension(format!("{} predictions, {} labels", predictions.len(), truth.len())));
    }
    let mut counts = Array2::zeros((n_groups, n_groups));
    for (&p, &t) in predictions.iter().zip(truth) {
        if p >= n_groups || t >= n_groups {
            return Err(Error::Parameter(format!("label outside 0..{n_groups}")));
        }
        counts[[t, p]] += 1;
    }
    let wrong = predictions.iter().zip(truth).filter(|(p, t)| p != t).count();
    let rate = if truth.is_empty() { 0.0 } else { wrong as f64 / truth.len() as f64 };
    Ok(ConfusionSummary { counts, rate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn kinds_parse_and_print() {
        for k in ClassifierKind::ALL {
            assert_eq!(k.to_string().parse::<ClassifierKind>().unwrap(), k);
        }
        assert!("SVM".parse::<ClassifierKind>().is_err());
    }

    #[test]
    fn confusion_rates() {
        assert_eq!(evaluate(&[0, 1, 1], &[0, 1, 1], 2).unwrap().rate, 0.0);
        assert_eq!(evaluate(&[1, 0], &[0, 1], 2).unwrap().rate, 1.0);
        let mut p = vec![0; 100];
        p[3] = 1;
        let s = evaluate(&p, &[0; 100], 2).unwrap();
        assert!((s.rate - 0.01).abs() < 1e-15);
        assert_eq!(s.counts.row(0).sum(), 100);
        assert!(evaluate(&[0], &[0, 1], 2).is_err());
    }

    #[test]
    fn maximum_depth_rule() {
        let x: Array2<f64> = array![[0.2, 0.3], [0.5, 0.1], [0.4, 0.4]];
        let m = fit_classifier(ClassifierKind::Md, &ClassifierOptions::default(), x.view(), &[1, 0, 0], 2).unwrap();
        assert_eq!(m.predict(x.view()).unwrap(), vec![1, 0, 0]);
        assert_eq!(m.training_error(), 0.0);
        let wide: Array2<f64> = Array2::zeros((3, 3));
        assert!(fit_classifier(ClassifierKind::Md, &ClassifierOptions::default(), wide.view(), &[1, 0, 0], 2).is_err());
    }

    #[test]
    fn empty_prediction_and_dimension_check() {
        let x: Array2<f64> = array![[0.0, 0.0], [1.0, 1.0], [0.1, 0.0], [0.9, 1.0]];
        let m = fit_classifier(ClassifierKind::Lda, &ClassifierOptions::default(), x.view(), &[0, 1, 0, 1], 2).unwrap();
        assert!(m.predict(Array2::<f64>::zeros((0, 2)).view()).unwrap().is_empty());
        assert!(m.predict(Array2::<f64>::zeros((1, 3)).view()).is_err());
        let p = m.posteriors(x.view()).unwrap().unwrap();
        for row in p.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
        }
    }
}
