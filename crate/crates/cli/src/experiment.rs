//! `experiment`: a Monte Carlo table from a TOML configuration.
//!
//! ```toml
//! runs = 200
//! seed = 1
//! output = "model1"
//! depths = ["FM.0", "hM.w", { family = "RP", combination = "m", projections = 100 }]
//! classifiers = ["DD1", "LDA", "GLM"]
//!
//! [simulation]
//! model = 1
//! n = 100
//! test_n = 50
//! derivative = { method = "smoothing", basis_size = 17 }
//!
//! [classifier_options]
//! ddk_candidates = 10000
//! ```
//!
//! A `[data]` section (component CSVs, labels, derived components and a
//! `test_fraction`) replaces `[simulation]` to run repeated stratified
//! splits of a fixed dataset.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use ddg_core::classify::{ClassifierKind, ClassifierOptions};
use ddg_core::depth::DepthSpec;
use ddg_core::fdata::{CsvLayout, DerivativeMethod, LabeledFunctionalData};
use ddg_core::sim::{run_experiment, run_resampling, ExperimentSpec, ExperimentTable, ResamplingSpec, SimConfig, SimModel};
use serde::Deserialize;

use crate::error::{CliError, CliResult};
use crate::inputs::{create_dir, write_file, DataArgs};

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Ignore and overwrite existing per-run checkpoints.
    #[arg(long)]
    pub fresh: bool,
}

/// A depth given either in short form (`hM.w`) or as a full table.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum DepthEntry {
    Short(String),
    Full(DepthSpec),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulationSection {
    model: SimModel,
    n: Option<usize>,
    grid_points: Option<usize>,
    k: Option<f64>,
    theta1: Option<f64>,
    theta2: Option<f64>,
    range: Option<f64>,
    test_n: Option<usize>,
    #[serde(default)]
    derivative: DerivativeMethod,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Component {
    name: String,
    path: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Derived {
    order: u8,
    name: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DataSection {
    components: Vec<Component>,
    labels: PathBuf,
    #[serde(default = "wide")]
    layout: String,
    /// Derivatives of the first component.
    #[serde(default)]
    derivatives: Vec<Derived>,
    smoothing_basis: Option<usize>,
    impute: Option<usize>,
    test_fraction: Option<f64>,
}

fn wide() -> String {
    "wide".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    depths: Vec<DepthEntry>,
    classifiers: Vec<ClassifierKind>,
    runs: Option<usize>,
    #[serde(default)]
    seed: u64,
    output: Option<PathBuf>,
    simulation: Option<SimulationSection>,
    data: Option<DataSection>,
    #[serde(default)]
    classifier_options: ClassifierOptions,
}

enum Plan {
    Simulation(ExperimentSpec),
    Resampling(ResamplingSpec, LabeledFunctionalData<f64>),
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::usage(format!("invalid experiment config: {e}")))
    }

    fn depths(&self) -> CliResult<Vec<DepthSpec>> {
        self.depths
            .iter()
            .map(|d| match d {
                DepthEntry::Short(s) => Ok(s.parse()?),
                DepthEntry::Full(spec) => Ok(spec.clone()),
            })
            .collect()
    }

    /// Resolves data paths relative to `base` and validates everything
    /// before any computation starts.
    fn plan(&self, base: &Path) -> CliResult<Plan> {
        let depths = self.depths()?;
        let runs = self.runs.unwrap_or(200);
        match (&self.simulation, &self.data) {
            (Some(s), None) => {
                let mut sim = SimConfig::new(s.model, s.n.unwrap_or(100), 0);
                sim.grid_points = s.grid_points.unwrap_or(sim.grid_points);
                sim.k = s.k.unwrap_or(sim.k);
                sim.theta1 = s.theta1.unwrap_or(sim.theta1);
                sim.theta2 = s.theta2.unwrap_or(sim.theta2);
                sim.range = s.range.unwrap_or(sim.range);
                let mut spec = ExperimentSpec::new(sim, depths, self.classifiers.clone(), runs, self.seed);
                spec.test_n = s.test_n.unwrap_or(spec.test_n);
                spec.derivative = s.derivative;
                spec.classifier_options = self.classifier_options.clone();
                spec.validate()?;
                Ok(Plan::Simulation(spec))
            }
            (None, Some(d)) => {
                d.layout.parse::<CsvLayout>()?;
                let args = DataArgs {
                    data: d.components.iter().map(|c| format!("{}={}", c.name, base.join(&c.path).display())).collect(),
                    layout: d.layout.clone(),
                    derivatives: d
                        .derivatives
                        .iter()
                        .map(|x| match &x.name {
                            Some(n) => format!("{}={n}", x.order),
                            None => x.order.to_string(),
                        })
                        .collect(),
                    smoothing_basis: d.smoothing_basis,
                    impute: d.impute,
                };
                let spec = ResamplingSpec {
                    depths,
                    classifiers: self.classifiers.clone(),
                    runs,
                    test_fraction: d.test_fraction.unwrap_or(0.3),
                    seed: self.seed,
                    classifier_options: self.classifier_options.clone(),
                };
                spec.validate()?;
                let data = args.load_labeled(&base.join(&d.labels))?;
                Ok(Plan::Resampling(spec, data))
            }
            _ => Err(CliError::usage("the config needs exactly one of [simulation] and [data]")),
        }
    }
}

pub fn experiment(args: &ExperimentArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| CliError::io(&args.config, e))?;
    let config = ExperimentConfig::parse(&text)?;
    let base = args.config.parent().unwrap_or(Path::new("."));
    let out = match (&args.out, &config.output) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => base.join(o),
        (None, None) => PathBuf::from("."),
    };
    let plan = config.plan(base)?;
    create_dir(&out)?;
    let checkpoints = out.join("checkpoints");
    if args.fresh && checkpoints.exists() {
        std::fs::remove_dir_all(&checkpoints).map_err(|e| CliError::io(&checkpoints, e))?;
    }
    let started = Instant::now();
    let table = match &plan {
        Plan::Simulation(spec) => {
            log::info!("model {}: {} runs, {} depths x {} classifiers", spec.sim.model, spec.runs, spec.depths.len(), spec.classifiers.len());
            run_experiment(spec, Some(&checkpoints))?
        }
        Plan::Resampling(spec, data) => {
            log::info!("{} curves: {} splits, {} depths x {} classifiers", data.labels().len(), spec.runs, spec.depths.len(), spec.classifiers.len());
            run_resampling(spec, data, Some(&checkpoints))?
        }
    };
    log_timings(&table);
    write_file(&out.join("table.csv"), |w| table.write_csv(w))?;
    write_file(&out.join("std_error.csv"), |w| table.write_se_csv(w))?;
    write_file(&out.join("seconds.csv"), |w| write_seconds(&table, w))?;
    log::info!("finished in {:.1} s", started.elapsed().as_secs_f64());
    println!("{}", out.join("table.csv").display());
    Ok(())
}

fn log_timings(table: &ExperimentTable) {
    for (d, label) in table.depth_labels.iter().enumerate() {
        log::info!("depth {label}: {:.4} s per run", table.depth_seconds[d]);
        for (c, cl) in table.classifier_labels.iter().enumerate() {
            if table.completed[c][d] > 0 {
                log::info!("cell {label}/{cl}: {:.4} s per run", table.depth_seconds[d] + table.cell_seconds[c][d]);
            }
        }
    }
}

/// Mean wall-clock seconds per run of each cell (depth transform plus
/// classifier), in the table layout.
fn write_seconds(table: &ExperimentTable, out: &mut dyn std::io::Write) -> ddg_core::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![String::new()];
    header.extend(table.depth_labels.iter().cloned());
    w.write_record(&header)?;
    for (c, label) in table.classifier_labels.iter().enumerate() {
        let mut row = vec![label.clone()];
        row.extend((0..table.depth_labels.len()).map(|d| format!("{:.6}", table.depth_seconds[d] + table.cell_seconds[c][d])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
