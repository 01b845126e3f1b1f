//! Reading and writing the files shared by several commands.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use ddg_core::ddg::DepthFeatureMatrix;
use ddg_core::fdata::{
    derivative_with, impute_missing, load_csv, load_labels, save_labels, CsvLayout, DerivativeMethod, FunctionalData,
    LabeledFunctionalData, MultiFunctionalData,
};
use ddg_core::sim::PlanarSample;

use crate::error::{at, CliError, CliResult};

/// `NAME=PATH`, or a bare path named after its file stem.
pub fn named_path(arg: &str) -> (String, PathBuf) {
    match arg.split_once('=') {
        Some((name, path)) if !name.is_empty() && !name.contains(['/', '\\']) => (name.to_string(), path.into()),
        _ => {
            let path = PathBuf::from(arg);
            let name = path.file_stem().map_or_else(|| arg.to_string(), |s| s.to_string_lossy().into_owned());
            (name, path)
        }
    }
}

/// Functional input: one CSV per component plus optional derived components.
#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Component CSV as NAME=PATH (repeat for several components).
    #[arg(long = "data", value_name = "NAME=PATH")]
    pub data: Vec<String>,
    /// CSV layout of the component files.
    #[arg(long, default_value = "wide")]
    pub layout: String,
    /// Append a derivative of the first component, ORDER[=NAME]
    /// (default name `d<comp>` or `d2<comp>`).
    #[arg(long = "derivative", value_name = "ORDER[=NAME]")]
    pub derivatives: Vec<String>,
    /// Use a least-squares B-spline with this many functions for
    /// derivatives instead of the interpolating spline.
    #[arg(long, value_name = "BASIS")]
    pub smoothing_basis: Option<usize>,
    /// Impute missing values with a B-spline fit of this many functions.
    #[arg(long, value_name = "BASIS")]
    pub impute: Option<usize>,
}

impl DataArgs {
    pub fn derivative_method(&self) -> DerivativeMethod {
        match self.smoothing_basis {
            Some(basis_size) => DerivativeMethod::Smoothing { basis_size },
            None => DerivativeMethod::Interpolating,
        }
    }

    pub fn load(&self) -> CliResult<MultiFunctionalData<f64>> {
        if self.data.is_empty() {
            return Err(CliError::usage("at least one --data component is required"));
        }
        let layout: CsvLayout = self.layout.parse()?;
        let mut names = Vec::new();
        let mut comps = Vec::new();
        for arg in &self.data {
            let (name, path) = named_path(arg);
            let mut ds: FunctionalData<f64> = load_csv(&path, layout).map_err(at(&path))?;
            if let Some(basis) = self.impute {
                ds = impute_missing(&ds, basis)?;
            }
            names.push(name);
            comps.push(ds);
        }
        for spec in &self.derivatives {
            let (order, name) = match spec.split_once('=') {
                Some((o, n)) => (o, Some(n.to_string())),
                None => (spec.as_str(), None),
            };
            let order: u8 = order
                .parse()
                .map_err(|_| CliError::usage(format!("derivative order `{order}` is not an integer")))?;
            let base = &names[0];
            let name = name.unwrap_or_else(|| if order == 1 { format!("d{base}") } else { format!("d{order}{base}") });
            comps.push(derivative_with(&comps[0], order, self.derivative_method())?);
            names.push(name);
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(CliError::usage(format!("duplicate component name `{n}`")));
            }
        }
        Ok(MultiFunctionalData::new(comps, names)?)
    }

    pub fn load_labeled(&self, labels: &Path) -> CliResult<LabeledFunctionalData<f64>> {
        let data = self.load()?;
        let labels = read_labels(labels)?;
        if labels.len() != data.n_curves() {
            return Err(CliError::usage(format!("{} labels for {} curves", labels.len(), data.n_curves())));
        }
        Ok(LabeledFunctionalData::new(data, labels)?)
    }
}

pub fn read_labels(path: &Path) -> CliResult<Vec<usize>> {
    load_labels(path).map_err(at(path))
}

pub fn read_features(path: &Path) -> CliResult<DepthFeatureMatrix<f64>> {
    DepthFeatureMatrix::load_csv(path).map_err(at(path))
}

/// Two-column point file with a header row.
pub fn read_planar(path: &Path) -> CliResult<Vec<[f64; 2]>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let field = |c: usize| -> CliResult<f64> {
            let v = rec.get(c).unwrap_or("");
            v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| {
                CliError::usage(format!("{}: row {}, column {}: `{v}` is not a number", path.display(), r + 2, c + 1))
            })
        };
        if rec.len() != 2 {
            return Err(CliError::usage(format!("{}: row {} has {} fields, expected 2", path.display(), r + 2, rec.len())));
        }
        out.push([field(0)?, field(1)?]);
    }
    Ok(out)
}

pub fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Writes through a buffered file, mapping failures to the path.
pub fn write_file(path: &Path, write: impl FnOnce(&mut dyn Write) -> ddg_core::Result<()>) -> CliResult<()> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    write(&mut out).map_err(at(path))?;
    out.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_labels(path: &Path, labels: &[usize]) -> CliResult<()> {
    save_labels(labels, path).map_err(at(path))
}

pub fn write_planar(path: &Path, sample: &PlanarSample<f64>) -> CliResult<()> {
    write_file(path, |out| {
        writeln!(out, "x1,x2")?;
        for p in &sample.points {
            writeln!(out, "{},{}", p[0], p[1])?;
        }
        Ok(())
    })
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    write_file(path, |out| Ok(serde_json::to_writer_pretty(&mut *out, value)?))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

pub fn parse_list<T: std::str::FromStr<Err = ddg_core::Error>>(items: &[String]) -> CliResult<Vec<T>> {
    items
        .iter()
        .flat_map(|s| s.split(','))
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(CliError::from))
        .collect()
}
