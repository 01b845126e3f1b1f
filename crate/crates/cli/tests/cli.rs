use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ddg_core::classify::{fit_classifier, ClassifierKind, ClassifierOptions};
use ddg_core::ddg::DepthFeatureMatrix;
use ddg_core::fdata::{load_csv, load_labels, CsvLayout, FunctionalData};
use ddg_core::rng::derive_seed;
use ddg_core::sim::{simulate_model, SimConfig, SimModel};
use ndarray::Array2;

fn ddg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddg")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn ddg_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddg")).args(args).env("RUST_LOG", "warn").env(key, value).output().unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn lines(p: &Path) -> usize {
    fs::read_to_string(p).unwrap().lines().count()
}

/// Simulated Model 1 sample and its hM.w features.
fn features_fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let sim = dir.join("sim");
    ok(&ddg(&["simulate", "--model", "1", "--n", "30", "--seed", "3", "--out", s(&sim)]));
    let features = dir.join("features.csv");
    ok(&ddg(&[
        "depth",
        "--data",
        &format!("x={}", s(&sim.join("train.csv"))),
        "--derivative",
        "1=dx",
        "--labels",
        s(&sim.join("train_labels.csv")),
        "--depth",
        "hM.w",
        "--out",
        s(&features),
    ]));
    (features, sim.join("train_labels.csv"))
}

#[test]
fn simulate_counts_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let text = ok(&ddg(&["simulate", "--model", "1", "--n", "100", "--seed", "7", "--out", s(out)]));
        assert!(text.contains("train: 200 (100 + 100)"));
    }
    assert_eq!(lines(&a.join("train.csv")), 201);
    assert_eq!(lines(&a.join("train_labels.csv")), 201);
    assert_eq!(lines(&a.join("test.csv")), 101);
    for f in ["train.csv", "train_labels.csv", "test.csv", "test_labels.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    // the written curves are exactly the library sample
    let written: FunctionalData<f64> = load_csv(a.join("train.csv"), CsvLayout::Wide).unwrap();
    let direct = simulate_model::<f64>(&SimConfig::new(SimModel::Model1, 100, derive_seed(7, 0))).unwrap();
    assert_eq!(&written, direct.data().component(0));
    assert_eq!(load_labels(a.join("train_labels.csv")).unwrap(), direct.labels());
}

#[test]
fn simulate_rings_and_normals() {
    let dir = tempfile::tempdir().unwrap();
    let rings = dir.path().join("rings");
    ok(&ddg(&["simulate", "--model", "rings", "--n-ball", "2000", "--n-rings", "2000", "--out", s(&rings)]));
    assert_eq!(lines(&rings.join("train.csv")), 4001);
    let labels = load_labels(rings.join("train_labels.csv")).unwrap();
    assert_eq!(labels.iter().filter(|&&l| l == 1).count(), 2000);
    let normals = dir.path().join("normals");
    ok(&ddg(&["simulate", "--model", "normals", "--variant", "cov-scale", "--n", "50", "--out", s(&normals)]));
    assert_eq!(lines(&normals.join("test.csv")), 101);
    assert_eq!(code(&ddg(&["simulate", "--model", "normals", "--variant", "wide", "--out", s(&normals)])), 2);
    assert_eq!(code(&ddg(&["simulate", "--model", "7", "--out", s(&normals)])), 2);
}

#[test]
fn unwritable_output_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain");
    fs::write(&file, "x").unwrap();
    let out = ddg(&["simulate", "--model", "1", "--n", "5", "--out", s(&file.join("sub"))]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("plain"));
}

#[test]
fn planar_depth_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("n");
    ok(&ddg(&["simulate", "--model", "normals", "--n", "100", "--seed", "1", "--out", s(&sim)]));
    let features = dir.path().join("hs.csv");
    ok(&ddg(&[
        "depth",
        "--planar",
        s(&sim.join("train.csv")),
        "--labels",
        s(&sim.join("train_labels.csv")),
        "--target",
        s(&sim.join("test.csv")),
        "--out",
        s(&features),
    ]));
    let f = DepthFeatureMatrix::<f64>::load_csv(&features).unwrap();
    assert_eq!(f.names(), ["HS.0", "HS.1"]);
    assert_eq!(f.n_rows(), 200);
    assert!(f.values().iter().all(|&v| (0.0..=0.5).contains(&v)));
}

#[test]
fn train_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (features, labels) = features_fixture(dir.path());
    let model = dir.path().join("glm.json");
    let coef = dir.path().join("coef.csv");
    let text = ok(&ddg(&[
        "train", "--features", s(&features), "--labels", s(&labels), "--classifier", "GLM", "--out", s(&model),
        "--coefficients", s(&coef),
    ]));
    assert!(text.contains("x+dx.mode.1"));
    assert_eq!(lines(&coef), 4);
    let pred = dir.path().join("pred.csv");
    let text = ok(&ddg(&["predict", "--model", s(&model), "--features", s(&features), "--labels", s(&labels), "--out", s(&pred)]));
    assert!(text.starts_with("error: "));
    // predictions equal a direct library fit
    let f = DepthFeatureMatrix::<f64>::load_csv(&features).unwrap();
    let y = load_labels(&labels).unwrap();
    let direct = fit_classifier(ClassifierKind::Glm, &ClassifierOptions::default(), f.values().view(), &y, 2).unwrap();
    assert_eq!(load_labels(&pred).unwrap(), direct.predict(f.values().view()).unwrap());
    // a model needs its feature columns
    let narrow = dir.path().join("narrow.csv");
    f.select_columns(&[0]).save_csv(&narrow).unwrap();
    assert_eq!(code(&ddg(&["predict", "--model", s(&model), "--features", s(&narrow), "--out", s(&pred)])), 2);
}

#[test]
fn computation_failure_is_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let features = dir.path().join("const.csv");
    let labels = dir.path().join("labels.csv");
    fs::write(&features, "a,b\n1,2\n1,2\n1,2\n1,2\n").unwrap();
    fs::write(&labels, "label\n0\n1\n0\n1\n").unwrap();
    let out = ddg(&["train", "--features", s(&features), "--labels", s(&labels), "--classifier", "GLM", "--out", s(&dir.path().join("m.json"))]);
    assert_eq!(code(&out), 1);
    // label count mismatch is a usage error
    fs::write(&labels, "label\n0\n1\n").unwrap();
    let out = ddg(&["train", "--features", s(&features), "--labels", s(&labels), "--classifier", "GLM", "--out", s(&dir.path().join("m.json"))]);
    assert_eq!(code(&out), 2);
}

#[test]
fn dcor_table_and_rejections() {
    let dir = tempfile::tempdir().unwrap();
    let (features, labels) = features_fixture(dir.path());
    let constant = dir.path().join("constant.csv");
    let n = load_labels(&labels).unwrap().len();
    fs::write(&constant, format!("c\n{}", "0.5\n".repeat(n))).unwrap();
    let out = dir.path().join("dcor.csv");
    let text = ok(&ddg(&[
        "dcor", "--features", &format!("hw={}", s(&features)), "--features", &format!("flat={}", s(&constant)),
        "--labels", s(&labels), "--out", s(&out),
    ]));
    assert!(text.contains("selected: hw"));
    let table = fs::read_to_string(&out).unwrap();
    assert!(table.lines().any(|l| l == "flat,0.000000,true,"));
    assert!(table.lines().any(|l| l.starts_with("hw,") && l.ends_with(",false,1")));
    // duplicate candidate names and length mismatches are usage errors
    let dup = ddg(&["dcor", "--features", &format!("a={}", s(&features)), "--features", &format!("a={}", s(&constant)), "--labels", s(&labels), "--out", s(&out)]);
    assert_eq!(code(&dup), 2);
    let short = dir.path().join("short.csv");
    fs::write(&short, "c\n1\n2\n").unwrap();
    assert_eq!(code(&ddg(&["dcor", "--features", s(&short), "--labels", s(&labels), "--out", s(&out)])), 2);
}

fn read_grid(path: &Path) -> (Array2<f64>, Vec<usize>) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let mut pts = Vec::new();
    let mut cls = Vec::new();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        pts.push(rec[0].parse::<f64>().unwrap());
        pts.push(rec[1].parse::<f64>().unwrap());
        cls.push(rec[2].parse::<usize>().unwrap());
    }
    (Array2::from_shape_vec((cls.len(), 2), pts).unwrap(), cls)
}

#[test]
fn ddplot_md_splits_along_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    let (features, labels) = features_fixture(dir.path());
    let svg = dir.path().join("md.svg");
    ok(&ddg(&["ddplot", "--features", s(&features), "--labels", s(&labels), "--classifier", "MD", "--out", s(&svg)]));
    let (grid, classes) = read_grid(&svg.with_extension("csv"));
    assert_eq!(classes.len(), 200 * 200);
    for (p, &c) in grid.rows().into_iter().zip(&classes) {
        if p[0] != p[1] {
            assert_eq!(c, usize::from(p[1] > p[0]), "at {p}");
        }
    }
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") && text.contains("<line") && text.matches("<circle").count() == 60);
}

#[test]
fn ddplot_grid_matches_library_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let (features, labels) = features_fixture(dir.path());
    let svg = dir.path().join("glm.svg");
    let grid_csv = dir.path().join("grid.csv");
    ok(&ddg(&[
        "ddplot", "--features", s(&features), "--labels", s(&labels), "--classifier", "GLM", "--resolution", "50",
        "--out", s(&svg), "--grid-csv", s(&grid_csv),
    ]));
    let (grid, classes) = read_grid(&grid_csv);
    assert_eq!(classes.len(), 2500);
    let f = DepthFeatureMatrix::<f64>::load_csv(&features).unwrap();
    let y = load_labels(&labels).unwrap();
    let m = fit_classifier(ClassifierKind::Glm, &ClassifierOptions::default(), f.values().view(), &y, 2).unwrap();
    assert_eq!(m.predict(grid.view()).unwrap(), classes);
}

#[test]
fn ddplot_empty_points_and_column_checks() {
    let dir = tempfile::tempdir().unwrap();
    let (features, labels) = features_fixture(dir.path());
    let model = dir.path().join("md.json");
    ok(&ddg(&["train", "--features", s(&features), "--labels", s(&labels), "--classifier", "MD", "--out", s(&model)]));
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "x+dx.mode.0,x+dx.mode.1\n").unwrap();
    let svg = dir.path().join("empty.svg");
    ok(&ddg(&["ddplot", "--model", s(&model), "--points", s(&empty), "--out", s(&svg)]));
    let text = fs::read_to_string(&svg).unwrap();
    assert!(!text.contains("<circle") && text.contains("<rect") && text.contains("<line"));
    // more than two columns need an explicit selection
    let wide = dir.path().join("wide.csv");
    let f = DepthFeatureMatrix::<f64>::load_csv(&features).unwrap();
    DepthFeatureMatrix::new(
        vec!["a".into(), "b".into(), "c".into()],
        ndarray::concatenate(ndarray::Axis(1), &[f.values().view(), f.values().column(0).insert_axis(ndarray::Axis(1))]).unwrap(),
    )
    .unwrap()
    .save_csv(&wide)
    .unwrap();
    let out = ddg(&["ddplot", "--features", s(&wide), "--labels", s(&labels), "--classifier", "LDA", "--out", s(&svg)]);
    assert_eq!(code(&out), 2);
    ok(&ddg(&["ddplot", "--features", s(&wide), "--labels", s(&labels), "--classifier", "LDA", "--columns", "b,a,c", "--out", s(&svg)]));
}

const SINGLE_CELL: &str = r#"
runs = 4
seed = 9
depths = ["hM.w"]
classifiers = ["GLM"]

[simulation]
model = 1
n = 20
test_n = 10
"#;

#[test]
fn experiment_single_cell_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("one.toml");
    fs::write(&config, SINGLE_CELL).unwrap();
    let out = dir.path().join("out");
    ok(&ddg(&["experiment", "--config", s(&config), "--out", s(&out)]));
    let table = fs::read_to_string(out.join("table.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0], ",hM.w");
    assert!(rows[2].starts_with("GLM,"));
    assert_eq!(lines(&out.join("std_error.csv")), 2);
    assert_eq!(lines(&out.join("seconds.csv")), 2);

    // an interrupted run: one checkpoint missing, the others reused as is
    let kept = fs::read(out.join("checkpoints/run_0001.json")).unwrap();
    fs::remove_file(out.join("checkpoints/run_0002.json")).unwrap();
    fs::remove_file(out.join("table.csv")).unwrap();
    ok(&ddg(&["experiment", "--config", s(&config), "--out", s(&out)]));
    assert_eq!(fs::read_to_string(out.join("table.csv")).unwrap(), table);
    assert_eq!(fs::read(out.join("checkpoints/run_0001.json")).unwrap(), kept);

    // the worker count does not change the output
    let other = dir.path().join("threads");
    ok(&ddg_env(&["experiment", "--config", s(&config), "--out", s(&other)], "DDG_THREADS", "3"));
    assert_eq!(fs::read_to_string(other.join("table.csv")).unwrap(), table);
    let bad = ddg_env(&["experiment", "--config", s(&config), "--out", s(&other)], "DDG_THREADS", "zero");
    assert_eq!(code(&bad), 2);
}

#[test]
fn experiment_config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    fs::write(&config, SINGLE_CELL.replace("test_n = 10", "test_size = 10")).unwrap();
    let out = ddg(&["experiment", "--config", s(&config), "--out", s(&dir.path().join("o"))]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("test_size"));
    fs::write(&config, SINGLE_CELL.replace("\"GLM\"", "\"SVM\"")).unwrap();
    assert_eq!(code(&ddg(&["experiment", "--config", s(&config)])), 2);
    fs::write(&config, SINGLE_CELL.replace("[simulation]\nmodel = 1", "[simulation]\nmodel = 5")).unwrap();
    assert_eq!(code(&ddg(&["experiment", "--config", s(&config)])), 2);
}

#[test]
fn experiment_on_csv_data() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    ok(&ddg(&["simulate", "--model", "2", "--n", "25", "--seed", "1", "--out", s(&sim)]));
    let config = dir.path().join("data.toml");
    fs::write(
        &config,
        r#"
runs = 3
depths = ["FM.0", "hM.m"]
classifiers = ["MD", "LDA"]
output = "res"

[data]
components = [{ name = "x", path = "sim/train.csv" }]
labels = "sim/train_labels.csv"
derivatives = [{ order = 1, name = "dx" }]
test_fraction = 0.2
"#,
    )
    .unwrap();
    ok(&ddg(&["experiment", "--config", s(&config)]));
    let table = fs::read_to_string(dir.path().join("res/table.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows[0], ",FM.0,hM.m");
    // MD needs one column per group, so it has no hM.m entry
    assert!(rows[2].starts_with("MD,") && rows[2].ends_with(','));
}

#[test]
fn shipped_model1_config_is_valid() {
    let text = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/model1.toml")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("m1.toml");
    fs::write(&config, text.replace("runs = 200", "runs = 1").replace("n = 100", "n = 12").replace("test_n = 50", "test_n = 5")).unwrap();
    let out = dir.path().join("m1");
    ok(&ddg_env(&["experiment", "--config", s(&config), "--out", s(&out)], "RUST_LOG", "error"));
    let table = fs::read_to_string(out.join("table.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows[0].split(',').count(), 16);
    assert_eq!(rows.len(), 2 + 9);
}
