use std::path::{Path, PathBuf};

use clap::Args;
use ddg_core::classify::{evaluate, fit_classifier, ClassifierKind, ClassifierOptions, FittedModel, TrainedClassifier};
use ddg_core::ddg::{DdgTransform, DepthFeatureMatrix};
use ddg_core::depth::{DepthSpec, HalfspaceDepth2d, DEFAULT_HALFSPACE_DIRECTIONS};
use ddg_core::energy::{DcorTable, DEFAULT_REDUNDANCY_CAP};
use ddg_core::fdata::{save_csv, LabeledFunctionalData};
use ddg_core::rng::derive_seed;
use ddg_core::sim::{simulate_model, simulate_normals, simulate_rings, simulate_test, NormalsVariant, SimConfig, SimModel};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{at, CliError, CliResult};
use crate::inputs::{
    create_dir, named_path, parse_list, read_features, read_json, read_labels, read_planar, write_file, write_json,
    write_labels, write_planar, DataArgs,
};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Functional model 1-4, `rings` or `normals`.
    #[arg(long)]
    pub model: String,
    /// Training curves per group (models 1-4) or points per class (normals).
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Test curves per group (models 1-4).
    #[arg(long, default_value_t = 50)]
    pub test_n: usize,
    #[arg(long, default_value_t = 51)]
    pub grid_points: usize,
    #[arg(long, default_value_t = 2000)]
    pub n_ball: usize,
    #[arg(long, default_value_t = 2000)]
    pub n_rings: usize,
    /// Second population of the normal example: mean-shift or cov-scale.
    #[arg(long, default_value = "mean-shift")]
    pub variant: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Writes `train.csv`, `train_labels.csv`, `test.csv` and `test_labels.csv`.
/// The training sample uses `derive_seed(seed, 0)`, the test sample
/// `derive_seed(seed, 1)`, as in the experiment runner.
pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    create_dir(&args.out)?;
    let (train_seed, test_seed) = (derive_seed(args.seed, 0), derive_seed(args.seed, 1));
    let counts = |labels: &[usize]| {
        let g = labels.iter().max().map_or(0, |m| m + 1);
        (0..g).map(|k| labels.iter().filter(|&&l| l == k).count().to_string()).collect::<Vec<_>>().join(" + ")
    };
    let (train_labels, test_labels) = match args.model.to_ascii_lowercase().as_str() {
        "rings" | "normals" => {
            let (train, test) = if args.model.eq_ignore_ascii_case("rings") {
                (simulate_rings(args.n_ball, args.n_rings, train_seed)?, simulate_rings(args.n_ball, args.n_rings, test_seed)?)
            } else {
                let variant: NormalsVariant = serde_json::from_value(serde_json::Value::String(args.variant.clone()))
                    .map_err(|_| CliError::usage(format!("unknown normals variant `{}`", args.variant)))?;
                (simulate_normals(variant, args.n, train_seed)?, simulate_normals(variant, args.n, test_seed)?)
            };
            write_planar(&args.out.join("train.csv"), &train)?;
            write_planar(&args.out.join("test.csv"), &test)?;
            (train.labels, test.labels)
        }
        m => {
            let model: SimModel = m.parse()?;
            let mut cfg = SimConfig::new(model, args.n, train_seed);
            cfg.grid_points = args.grid_points;
            let train: LabeledFunctionalData<f64> = simulate_model(&cfg)?;
            let test: LabeledFunctionalData<f64> = simulate_test(&cfg, args.test_n, test_seed)?;
            for (name, ds) in [("train.csv", &train), ("test.csv", &test)] {
                let path = args.out.join(name);
                save_csv(ds.data().component(0), &path).map_err(at(&path))?;
            }
            (train.labels().to_vec(), test.labels().to_vec())
        }
    };
    write_labels(&args.out.join("train_labels.csv"), &train_labels)?;
    write_labels(&args.out.join("test_labels.csv"), &test_labels)?;
    println!("train: {} ({})", train_labels.len(), counts(&train_labels));
    println!("test: {} ({})", test_labels.len(), counts(&test_labels));
    Ok(())
}

#[derive(Debug, Args)]
pub struct DepthArgs {
    #[command(flatten)]
    pub data: Option<DataArgs>,
    /// Two-column point file for the bivariate halfspace depth.
    #[arg(long, conflicts_with_all = ["data", "depth", "transform"])]
    pub planar: Option<PathBuf>,
    /// Labels of the reference sample.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Depth option, e.g. `FM.0`, `hM.w`, `RP.m`, `FM.1-FMD` (repeatable or
    /// comma-separated).
    #[arg(long)]
    pub depth: Vec<String>,
    /// Seed for the randomized depths.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random directions of the bivariate halfspace depth.
    #[arg(long, default_value_t = DEFAULT_HALFSPACE_DIRECTIONS)]
    pub directions: usize,
    /// Apply a saved transform instead of fitting one.
    #[arg(long)]
    pub transform: Option<PathBuf>,
    /// Save the fitted transform as JSON.
    #[arg(long)]
    pub save_transform: Option<PathBuf>,
    /// Compute features of these data instead of the reference sample
    /// (component files NAME=PATH, or a point file with --planar).
    #[arg(long = "target", value_name = "NAME=PATH")]
    pub target: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn depth(args: &DepthArgs) -> CliResult<()> {
    let features = if let Some(points) = &args.planar {
        planar_depth(args, points)?
    } else {
        let data = args.data.as_ref().filter(|d| !d.data.is_empty()).ok_or_else(|| CliError::usage("--data or --planar is required"))?;
        let transform = match &args.transform {
            Some(path) => DdgTransform::<f64>::load_json(path).map_err(at(path))?,
            None => {
                let labels = args.labels.as_ref().ok_or_else(|| CliError::usage("--labels is required to fit depths"))?;
                let specs: Vec<DepthSpec> = parse_list(&args.depth)?;
                if specs.is_empty() {
                    return Err(CliError::usage("at least one --depth is required"));
                }
                let specs: Vec<DepthSpec> =
                    specs.into_iter().enumerate().map(|(i, s)| s.with_seed(derive_seed(args.seed, i as u64))).collect();
                DdgTransform::fit(&data.load_labeled(labels)?, &specs)?
            }
        };
        if let Some(path) = &args.save_transform {
            transform.save_json(path).map_err(at(path))?;
        }
        let target = if args.target.is_empty() {
            data.load()?
        } else {
            DataArgs { data: args.target.clone(), ..data.clone() }.load()?
        };
        transform.transform(&target)?
    };
    features.save_csv(&args.out).map_err(at(&args.out))?;
    println!("{} rows, columns: {}", features.n_rows(), features.names().join(", "));
    Ok(())
}

fn planar_depth(args: &DepthArgs, points: &Path) -> CliResult<DepthFeatureMatrix<f64>> {
    let sample = read_planar(points)?;
    let labels = read_labels(args.labels.as_ref().ok_or_else(|| CliError::usage("--labels is required"))?)?;
    if labels.len() != sample.len() {
        return Err(CliError::usage(format!("{} labels for {} points", labels.len(), sample.len())));
    }
    let g = labels.iter().max().map_or(0, |m| m + 1);
    let models = (0..g)
        .map(|k| {
            let group: Vec<[f64; 2]> = sample.iter().zip(&labels).filter(|(_, &l)| l == k).map(|(p, _)| *p).collect();
            HalfspaceDepth2d::fit(&group, args.directions, derive_seed(args.seed, k as u64))
        })
        .collect::<ddg_core::Result<Vec<_>>>()?;
    let target = match args.target.as_slice() {
        [] => sample,
        [one] => read_planar(&named_path(one).1)?,
        _ => return Err(CliError::usage("--planar takes a single --target point file")),
    };
    let values = Array2::from_shape_fn((target.len(), g), |(i, k)| models[k].depth(target[i]));
    Ok(DepthFeatureMatrix::new((0..g).map(|k| format!("HS.{k}")).collect(), values)?)
}

#[derive(Debug, Args)]
pub struct DcorArgs {
    /// Candidate feature file NAME=PATH (repeatable).
    #[arg(long, value_name = "NAME=PATH")]
    pub features: Vec<String>,
    #[command(flatten)]
    pub data: Option<DataArgs>,
    /// Candidate depth options computed from --data (repeatable or
    /// comma-separated).
    #[arg(long)]
    pub depth: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub labels: PathBuf,
    /// Largest number of selected candidates.
    #[arg(long, default_value_t = 3)]
    pub max_selected: usize,
    /// Candidates correlated above this with a selected one are skipped.
    #[arg(long, default_value_t = DEFAULT_REDUNDANCY_CAP)]
    pub cap: f64,
    /// Summary table: candidate, dcor, degenerate flag, selection rank.
    #[arg(long)]
    pub out: PathBuf,
    /// Full table including the candidate-by-candidate correlations.
    #[arg(long)]
    pub pairwise: Option<PathBuf>,
}

pub fn dcor(args: &DcorArgs) -> CliResult<()> {
    let labels = read_labels(&args.labels)?;
    let mut candidates: Vec<(String, Array2<f64>)> = Vec::new();
    for arg in &args.features {
        let (name, path) = named_path(arg);
        candidates.push((name, read_features(&path)?.values().clone()));
    }
    if !args.depth.is_empty() {
        let data = args.data.as_ref().filter(|d| !d.data.is_empty()).ok_or_else(|| CliError::usage("--depth candidates need --data"))?;
        let labeled = data.load_labeled(&args.labels)?;
        for (i, spec) in parse_list::<DepthSpec>(&args.depth)?.into_iter().enumerate() {
            let spec = spec.with_seed(derive_seed(args.seed, i as u64));
            let (_, f) = DdgTransform::fit_transform(&labeled, std::slice::from_ref(&spec))?;
            candidates.push((spec.label(), f.values().clone()));
        }
    }
    if candidates.is_empty() {
        return Err(CliError::usage("no candidates: give --features or --data with --depth"));
    }
    for (i, (name, x)) in candidates.iter().enumerate() {
        if candidates[..i].iter().any(|(n, _)| n == name) {
            return Err(CliError::usage(format!("duplicate candidate name `{name}`")));
        }
        if x.nrows() != labels.len() {
            return Err(CliError::usage(format!("candidate {name} has {} rows, {} labels", x.nrows(), labels.len())));
        }
    }
    let table = DcorTable::compute(&candidates, &labels)?;
    let order = table.select(args.max_selected, args.cap);
    write_file(&args.out, |out| {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["candidate", "dcor", "degenerate", "rank"])?;
        for (i, (name, x)) in candidates.iter().enumerate() {
            let degenerate = x.columns().into_iter().all(|c| c.iter().all(|v| *v == c[0]));
            let rank = order.iter().position(|n| n == name).map_or(String::new(), |r| (r + 1).to_string());
            w.write_record([name.clone(), format!("{:.6}", table.with_labels[i]), degenerate.to_string(), rank])?;
        }
        w.flush()?;
        Ok(())
    })?;
    if let Some(path) = &args.pairwise {
        write_file(path, |out| table.write_csv(out))?;
    }
    println!("selected: {}", order.join(", "));
    Ok(())
}

/// Classifier flags shared by `train` and `ddplot`.
#[derive(Debug, Clone, Args)]
pub struct ClassifierArgs {
    /// DD1, DD2, DD3, MD, LDA, QDA, kNN, NP, GLM or GAM.
    #[arg(long)]
    pub classifier: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub knn_k: Option<usize>,
    #[arg(long)]
    pub np_bandwidth: Option<f64>,
    #[arg(long)]
    pub gam_basis: Option<usize>,
    #[arg(long)]
    pub gam_penalty: Option<f64>,
    #[arg(long)]
    pub ddk_candidates: Option<usize>,
    #[arg(long)]
    pub ddk_refine: Option<usize>,
}

impl ClassifierArgs {
    pub fn kind(&self) -> CliResult<ClassifierKind> {
        Ok(self.classifier.as_deref().ok_or_else(|| CliError::usage("--classifier is required"))?.parse()?)
    }

    pub fn options(&self) -> ClassifierOptions {
        let d = ClassifierOptions::default();
        ClassifierOptions {
            ddk_candidates: self.ddk_candidates.unwrap_or(d.ddk_candidates),
            ddk_refine: self.ddk_refine.unwrap_or(d.ddk_refine),
            knn_k: self.knn_k,
            np_bandwidth: self.np_bandwidth,
            gam_basis: self.gam_basis.unwrap_or(d.gam_basis),
            gam_penalty: self.gam_penalty,
            seed: self.seed,
        }
    }
}

/// A trained classifier together with the feature columns it expects.
#[derive(Debug, Serialize, Deserialize)]
pub struct SavedModel {
    pub feature_names: Vec<String>,
    pub classifier: TrainedClassifier<f64>,
}

impl SavedModel {
    /// Columns of `features` in the order the model was trained on.
    pub fn align(&self, features: &DepthFeatureMatrix<f64>) -> CliResult<DepthFeatureMatrix<f64>> {
        let idx = self
            .feature_names
            .iter()
            .map(|n| features.column_index(n).ok_or_else(|| CliError::usage(format!("feature column `{n}` is missing"))))
            .collect::<CliResult<Vec<_>>>()?;
        Ok(features.select_columns(&idx))
    }
}

/// Selects the named columns (comma-separated); all columns when empty.
pub fn select_columns(features: DepthFeatureMatrix<f64>, columns: &[String]) -> CliResult<DepthFeatureMatrix<f64>> {
    let names: Vec<&str> = columns.iter().flat_map(|c| c.split(',')).map(str::trim).filter(|c| !c.is_empty()).collect();
    if names.is_empty() {
        return Ok(features);
    }
    let idx = names
        .iter()
        .map(|n| features.column_index(n).ok_or_else(|| CliError::usage(format!("no feature column `{n}`"))))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(features.select_columns(&idx))
}

pub fn fit_saved(
    features: &DepthFeatureMatrix<f64>,
    labels: &[usize],
    classifier: &ClassifierArgs,
) -> CliResult<SavedModel> {
    if labels.len() != features.n_rows() {
        return Err(CliError::usage(format!("{} labels for {} feature rows", labels.len(), features.n_rows())));
    }
    let g = labels.iter().max().map_or(0, |m| m + 1);
    let trained = fit_classifier(classifier.kind()?, &classifier.options(), features.values().view(), labels, g)?;
    Ok(SavedModel { feature_names: features.names().to_vec(), classifier: trained })
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// Feature columns to use (comma-separated); default all.
    #[arg(long)]
    pub columns: Vec<String>,
    #[command(flatten)]
    pub classifier: ClassifierArgs,
    /// GLM only: coefficient table with standard errors and p-values.
    #[arg(long)]
    pub coefficients: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn train(args: &TrainArgs) -> CliResult<()> {
    let features = select_columns(read_features(&args.features)?, &args.columns)?;
    let labels = read_labels(&args.labels)?;
    let saved = fit_saved(&features, &labels, &args.classifier)?;
    if let FittedModel::Glm(glm) = saved.classifier.model() {
        let used: Vec<String> = saved.classifier.columns().iter().map(|&j| saved.feature_names[j].clone()).collect();
        print!("{}", glm.summary(&used));
        let rows = glm.coefficient_table(&used);
        if let Some(path) = &args.coefficients {
            write_file(path, |out| {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(["term", "estimate", "std_error", "z", "p"])?;
                for r in &rows {
                    w.write_record([
                        r.term.clone(),
                        r.estimate.to_string(),
                        r.std_error.to_string(),
                        r.z.to_string(),
                        r.p.to_string(),
                    ])?;
                }
                w.flush()?;
                Ok(())
            })?;
        }
    } else if args.coefficients.is_some() {
        return Err(CliError::usage("--coefficients is only available for GLM"));
    }
    write_json(&args.out, &saved)?;
    println!("training error: {:.4}", saved.classifier.training_error());
    Ok(())
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    /// True labels; the misclassification rate is reported when given.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Posterior probabilities, for rules that provide them.
    #[arg(long)]
    pub posteriors: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn predict(args: &PredictArgs) -> CliResult<()> {
    let saved: SavedModel = read_json(&args.model)?;
    let features = saved.align(&read_features(&args.features)?)?;
    let pred = saved.classifier.predict(features.values().view())?;
    write_labels(&args.out, &pred)?;
    if let Some(path) = &args.posteriors {
        let post = saved
            .classifier
            .posteriors(features.values().view())?
            .ok_or_else(|| CliError::usage(format!("{} gives no posterior probabilities", saved.classifier.kind())))?;
        write_file(path, |out| {
            let mut w = csv::Writer::from_writer(out);
            w.write_record((0..post.ncols()).map(|k| format!("p{k}")))?;
            for row in post.rows() {
                w.write_record(row.iter().map(|v| v.to_string()))?;
            }
            w.flush()?;
            Ok(())
        })?;
    }
    if let Some(path) = &args.labels {
        let truth = read_labels(path)?;
        if truth.len() != pred.len() {
            return Err(CliError::usage(format!("{} labels for {} feature rows", truth.len(), pred.len())));
        }
        let g = saved.classifier.n_groups();
        let summary = evaluate(&pred, &truth, g)?;
        println!("error: {:.4} ({} of {})", summary.rate, pred.iter().zip(&truth).filter(|(a, b)| a != b).count(), pred.len());
    } else {
        println!("{} predictions", pred.len());
    }
    Ok(())
}
