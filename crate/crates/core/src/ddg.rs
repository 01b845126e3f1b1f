//! The DD^G map: per-group depth models turning each curve into a vector of
//! depths, one coordinate per (depth coordinate, group) pair.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::depth::{DepthFamily, DepthModel, DepthSpec, UnivariateDepthKind};
use crate::error::{Error, Result};
use crate::fdata::{format_scalar, LabeledFunctionalData, MultiFunctionalData};
use crate::Scalar;

/// An `N x G` matrix of depth coordinates with named columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct DepthFeatureMatrix<T: Scalar> {
    names: Vec<String>,
    values: Array2<T>,
}

impl<T: Scalar> DepthFeatureMatrix<T> {
    pub fn new(names: Vec<String>, values: Array2<T>) -> Result<Self> {
        if names.len() != values.ncols() {
            return Err(Error::Dimension(format!("{} names for {} columns", names.len(), values.ncols())));
        }
        let mut sorted = names.clone();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Parameter("duplicate feature column names".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite depth feature".into()));
        }
        Ok(DepthFeatureMatrix { names, values: values.as_standard_layout().into_owned() })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &Array2<T> {
        &self.values
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn select_columns(&self, idx: &[usize]) -> Self {
        DepthFeatureMatrix {
            names: idx.iter().map(|&i| self.names[i].clone()).collect(),
            values: self.values.select(Axis(1), idx),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        DepthFeatureMatrix { names: self.names.clone(), values: self.values.select(Axis(0), rows) }
    }

    /// Indices of the columns that are not constant.
    pub fn varying_columns(&self) -> Vec<usize> {
        (0..self.n_cols())
            .filter(|&j| {
                let c = self.values.column(j);
                c.iter().any(|v| *v != c[0])
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.names)?;
        for row in self.values.rows() {
            w.write_record(row.iter().map(|&v| format_scalar(v)))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let names: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut data = Vec::new();
        let mut n = 0;
        for (r, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != names.len() {
                return Err(Error::Parse {
                    row: r + 2,
                    column: rec.len(),
                    message: format!("expected {} fields", names.len()),
                });
            }
            for (c, field) in rec.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| Error::Parse {
                    row: r + 2,
                    column: c + 1,
                    message: format!("`{field}` is not a number"),
                })?;
                data.push(T::lit(v));
            }
            n += 1;
        }
        let values = Array2::from_shape_vec((n, names.len()), data).map_err(|e| Error::Format(e.to_string()))?;
        Self::new(names, values)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// Family token used in column names; the univariate depth is appended when
/// it differs from the family default so that variants stay distinguishable.
fn family_token(spec: &DepthSpec) -> String {
    let (base, default) = match spec.family {
        DepthFamily::Integrated => ("FM", Some(UnivariateDepthKind::Mahalanobis)),
        DepthFamily::HMode => ("mode", None),
        DepthFamily::RandomProjection => ("RP", Some(UnivariateDepthKind::Halfspace)),
    };
    match default {
        Some(d) if d != spec.univariate && spec.combination != crate::depth::Combination::Joint => {
            format!("{base}-{}", spec.univariate)
        }
        _ => base.to_string(),
    }
}

/// Provenance of one feature column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureColumn {
    pub name: String,
    pub spec: usize,
    pub coordinate: usize,
    pub group: usize,
}

/// Fitted DD^G map: one depth model per (spec, group).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct DdgTransform<T: Scalar> {
    specs: Vec<DepthSpec>,
    n_groups: usize,
    /// `models[s][g]`.
    models: Vec<Vec<DepthModel<T>>>,
    columns: Vec<FeatureColumn>,
}

impl<T: Scalar> DdgTransform<T> {
    pub fn fit(train: &LabeledFunctionalData<T>, specs: &[DepthSpec]) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Parameter("at least one depth spec is required".into()));
        }
        let g = train.n_groups();
        for (grp, &count) in train.group_counts().iter().enumerate() {
            if count < 2 {
                return Err(Error::Fit(format!("group {grp} has {count} training curve(s); at least 2 are needed")));
            }
        }
        let groups: Vec<MultiFunctionalData<T>> = (0..g).map(|grp| train.data().select(&train.group_rows(grp))).collect();
        let tasks: Vec<(usize, usize)> = (0..specs.len()).flat_map(|s| (0..g).map(move |grp| (s, grp))).collect();
        let fitted = tasks
            .par_iter()
            .map(|&(s, grp)| DepthModel::fit(&specs[s], &groups[grp]))
            .collect::<Result<Vec<_>>>()?;
        let mut it = fitted.into_iter();
        let models: Vec<Vec<DepthModel<T>>> = (0..specs.len()).map(|_| it.by_ref().take(g).collect()).collect();

        let mut columns = Vec::new();
        for (s, spec) in specs.iter().enumerate() {
            let token = family_token(spec);
            for (c, comp) in models[s][0].coordinate_components().iter().enumerate() {
                for grp in 0..g {
                    columns.push(FeatureColumn { name: format!("{comp}.{token}.{grp}"), spec: s, coordinate: c, group: grp });
                }
            }
        }
        let p = train.data().n_components();
        let expected: usize = g * specs
            .iter()
            .map(|s| if s.combination == crate::depth::Combination::Concatenated { p } else { 1 })
            .sum::<usize>();
        assert_eq!(columns.len(), expected, "feature count law");
        let mut names: Vec<&str> = columns.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Parameter(format!("two depth specs produce the same column `{}`", w[0])));
        }
        Ok(DdgTransform { specs: specs.to_vec(), n_groups: g, models, columns })
    }

    pub fn fit_transform(train: &LabeledFunctionalData<T>, specs: &[DepthSpec]) -> Result<(Self, DepthFeatureMatrix<T>)> {
        let t = Self::fit(train, specs)?;
        let d = t.transform(train.data())?;
        Ok((t, d))
    }

    pub fn transform(&self, data: &MultiFunctionalData<T>) -> Result<DepthFeatureMatrix<T>> {
        let n = data.n_curves();
        let tasks: Vec<(usize, usize)> =
            (0..self.specs.len()).flat_map(|s| (0..self.n_groups).map(move |grp| (s, grp))).collect();
        let scores = tasks
            .par_iter()
            .map(|&(s, grp)| {
                if n == 0 {
                    Ok(vec![Vec::new(); self.models[s][grp].n_coordinates()])
                } else {
                    self.models[s][grp].score(data)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let mut values = Array2::zeros((n, self.columns.len()));
        for (k, col) in self.columns.iter().enumerate() {
            let v = &scores[col.spec * self.n_groups + col.group][col.coordinate];
            for i in 0..n {
                values[[i, k]] = v[i];
            }
        }
        DepthFeatureMatrix::new(self.column_names(), values)
    }

    pub fn specs(&self) -> &[DepthSpec] {
        &self.specs
    }

    pub fn n_groups(&self) -> usize {
        self.n_groups
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[FeatureColumn] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn model(&self, spec: usize, group: usize) -> &DepthModel<T> {
        &self.models[spec][group]
    }

    /// Specs, seeds, frozen bandwidths and column names.
    pub fn manifest(&self) -> Manifest {
        Manifest {
            n_groups: self.n_groups,
            specs: self
                .specs
                .iter()
                .enumerate()
                .map(|(s, spec)| ManifestEntry {
                    spec: spec.clone(),
                    bandwidths: self.models[s].iter().filter_map(|m| m.bandwidth().map(|h| h.as_f64())).collect(),
                })
                .collect(),
            columns: self.column_names(),
        }
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        serde_json::to_writer(std::io::BufWriter::new(std::fs::File::create(path)?), self)?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_reader(std::io::BufReader::new(std::fs::File::open(path)?))?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub spec: DepthSpec,
    /// Per-group bandwidths of h-mode models (empty for other families).
    pub bandwidths: Vec<f64>,
}

/// Human-readable record of a fitted transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub n_groups: usize,
    pub specs: Vec<ManifestEntry>,
    pub columns: Vec<String>,
}
