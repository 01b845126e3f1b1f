//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! `cargo test --release -p ddg-core --test acceptance [-- IDS...]`
//! runs every criterion (or only the listed ids). `DDG_ACCEPTANCE_RUNS`
//! overrides the 200 Monte Carlo runs of criteria 2-5, `DDG_TECATOR_DIR`
//! points at the Tecator files for criterion 7, and
//! `DDG_ACCEPTANCE_STRICT=1` turns any FAIL into a non-zero exit.

mod common;

use std::path::PathBuf;
use std::time::Instant;

use common::{brute_force_mbd, exact_tukey_depth, random_curves, rng, Status, Verdict};
use ddg_core::classify::{evaluate, fit_classifier, ClassifierKind, ClassifierOptions, GamModel, GlmModel};
use ddg_core::ddg::DdgTransform;
use ddg_core::depth::{fm_depth, DepthSpec, HalfspaceDepth2d, UnivariateDepthKind, DEFAULT_HALFSPACE_DIRECTIONS};
use ddg_core::energy::DcorTable;
use ddg_core::fdata::{derivative, load_csv, CsvLayout, FunctionalData, Grid, LabeledFunctionalData, MultiFunctionalData};
use ddg_core::sim::{in_rings, run_experiment, simulate_rings, ExperimentSpec, PlanarSample, SimConfig, SimModel};
use ndarray::Array2;
use rand::Rng;

const MASTER_SEED: u64 = 20_160_707;

fn criterion_1() -> Verdict {
    let started = Instant::now();
    let mut worst = 0.0f64;
    for case in 0..50u64 {
        let mut r = rng(case);
        let n = 2 + (case as usize * 7) % 49;
        let t = 2 + (case as usize * 5) % 19;
        let mut pts: Vec<f64> = (0..t).map(|_| r.random::<f64>()).collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        if pts.len() < 2 {
            pts = vec![0.0, 1.0];
        }
        let t = pts.len();
        let grid = Grid::new(pts.clone()).unwrap();
        let reference = random_curves(&mut r, n, t);
        let targets = random_curves(&mut r, 5, t);
        let rd = FunctionalData::from_rows(grid.clone(), &reference).unwrap();
        let td = FunctionalData::from_rows(grid, &targets).unwrap();
        let d = fm_depth(&td, &rd, UnivariateDepthKind::Simplicial).unwrap();
        for (x, got) in targets.iter().zip(d) {
            worst = worst.max((got - brute_force_mbd(x, &reference, &pts)).abs());
        }
    }
    let secs = started.elapsed().as_secs_f64();
    Verdict::check(
        "1",
        worst <= 1e-10 && secs < 10.0,
        format!("FM-SD vs brute-force MBD on 50 datasets: max |diff| = {worst:.2e} (tol 1e-10), {secs:.2} s (limit 10 s)"),
    )
}

fn runs() -> usize {
    std::env::var("DDG_ACCEPTANCE_RUNS").ok().and_then(|v| v.parse().ok()).unwrap_or(200)
}

/// Runs the anchor cells of one model and compares them with the
/// reference means. FM anchors use the original integrated depth
/// `1 - |1/2 - F|`.
fn anchors(id: &'static str, model: SimModel, cells: &[(&str, &str, f64)], tol: f64) -> Verdict {
    let started = Instant::now();
    let mut depths: Vec<String> = Vec::new();
    let mut classifiers: Vec<String> = Vec::new();
    for (d, c, _) in cells {
        if !depths.iter().any(|x| x == d) {
            depths.push(d.to_string());
        }
        if !classifiers.iter().any(|x| x == c) {
            classifiers.push(c.to_string());
        }
    }
    let spec = ExperimentSpec::new(
        SimConfig::new(model, 100, 0),
        depths.iter().map(|d| d.parse().unwrap()).collect(),
        classifiers.iter().map(|c| c.parse().unwrap()).collect(),
        runs(),
        MASTER_SEED + u64::from(u8::from(model)),
    );
    let table = match run_experiment(&spec, None) {
        Ok(t) => t,
        Err(e) => return Verdict::check(id, false, format!("experiment failed: {e}")),
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for &(d, c, target) in cells {
        let label = d.parse::<DepthSpec>().unwrap().label();
        let got = table.cell(c, &label);
        let hit = got.is_some_and(|v| (v - target).abs() <= tol);
        ok &= hit;
        parts.push(format!(
            "{label}/{c} {} vs {target}{}",
            got.map_or("n/a".into(), |v| format!("{v:.1}")),
            if hit { "" } else { " (miss)" }
        ));
    }
    Verdict::check(
        id,
        ok,
        format!(
            "Model {model}, {} runs, tol ±{tol} pp: {} [{:.0} s]",
            table.runs,
            parts.join("; "),
            started.elapsed().as_secs_f64()
        ),
    )
}

fn criterion_2() -> Verdict {
    anchors(
        "2",
        SimModel::Model1,
        &[("FM.0-FMD", "LDA", 24.2), ("hM.w", "GLM", 12.1), ("hM.m", "GLM", 11.6), ("hM.m", "GAM", 11.7)],
        1.5,
    )
}

fn criterion_3() -> Verdict {
    anchors(
        "3",
        SimModel::Model2,
        &[("hM.p", "QDA", 9.3), ("hM.p", "GLM", 9.3), ("hM.p", "GAM", 9.3), ("FM.0-FMD", "GLM", 22.1)],
        1.5,
    )
}

fn criterion_4() -> Verdict {
    anchors("4", SimModel::Model3, &[("hM.w", "GAM", 16.2), ("hM.m", "GAM", 16.2), ("FM.p", "GAM", 20.6)], 2.0)
}

fn criterion_5() -> Verdict {
    anchors("5", SimModel::Model4, &[("hM.w", "GAM", 11.3), ("hM.m", "GLM", 11.3), ("RP.m", "GLM", 14.0)], 2.0)
}

fn hs_features(sample: &PlanarSample<f64>, models: &[HalfspaceDepth2d<f64>]) -> Array2<f64> {
    Array2::from_shape_fn((sample.points.len(), 2), |(i, g)| models[g].depth(sample.points[i]))
}

fn criterion_6() -> Verdict {
    let started = Instant::now();
    let train: PlanarSample<f64> = simulate_rings(2000, 2000, MASTER_SEED).unwrap();
    let test: PlanarSample<f64> = simulate_rings(2000, 2000, MASTER_SEED + 1).unwrap();
    let models: Vec<_> = (0..2)
        .map(|g| HalfspaceDepth2d::fit(&train.class_points(g), DEFAULT_HALFSPACE_DIRECTIONS, MASTER_SEED + 10 + g as u64).unwrap())
        .collect();
    let (ftr, fte) = (hs_features(&train, &models), hs_features(&test, &models));
    let options = ClassifierOptions { seed: MASTER_SEED, ..ClassifierOptions::default() };
    let error = |kind: ClassifierKind| -> f64 {
        let m = fit_classifier(kind, &options, ftr.view(), &train.labels, 2).unwrap();
        evaluate(&m.predict(fte.view()).unwrap(), &test.labels, 2).unwrap().rate
    };
    let knn = error(ClassifierKind::Knn);
    let dd3 = error(ClassifierKind::Ddk(3));
    let lda = error(ClassifierKind::Lda);
    let glm = error(ClassifierKind::Glm);

    // Bayes rule "rings -> class 1": its error on the ball class
    let big: PlanarSample<f64> = simulate_rings(1_000_000, 1, MASTER_SEED + 2).unwrap();
    let ball = big.class_points(0);
    let bayes = ball.iter().filter(|p| in_rings(**p)).count() as f64 / ball.len() as f64;

    // exact angular sweep against the approximation on subsamples
    let mut gap = 0.0f64;
    for (k, g) in [(0usize, 0usize), (1, 1), (2, 0), (3, 1)] {
        let sub: Vec<[f64; 2]> = train.class_points(g).into_iter().skip(100 * k).take(60 + 10 * k).collect();
        let approx = HalfspaceDepth2d::fit(&sub, DEFAULT_HALFSPACE_DIRECTIONS, MASTER_SEED + 20 + k as u64).unwrap();
        for p in sub.iter().chain(test.points.iter().step_by(97)) {
            gap = gap.max((approx.depth(*p) - exact_tukey_depth(*p, &sub)).abs());
        }
    }

    let checks = [
        ("kNN", knn, 0.136, 0.02),
        ("Bayes (ball class)", bayes, 0.138, 0.01),
        ("DD3", dd3, 0.201, 0.03),
        ("LDA", lda, 0.472, 0.03),
        ("GLM", glm, 0.472, 0.03),
    ];
    let mut ok = gap <= 0.02;
    let mut parts = Vec::new();
    for (name, got, target, tol) in checks {
        let hit = (got - target).abs() <= tol;
        ok &= hit;
        parts.push(format!("{name} {got:.3} vs {target}±{tol}{}", if hit { "" } else { " (miss)" }));
    }
    parts.push(format!("exact vs approximate HS max gap {gap:.4} (tol 0.02)"));
    Verdict::check(
        "6",
        ok,
        format!("rings, independent test sample: {} [{:.0} s]", parts.join("; "), started.elapsed().as_secs_f64()),
    )
}

fn read_fat(path: &PathBuf) -> Result<Vec<f64>, String> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    rdr.records()
        .map(|r| {
            let r = r.map_err(|e| e.to_string())?;
            r.get(0).unwrap_or("").trim().parse::<f64>().map_err(|e| e.to_string())
        })
        .collect()
}

fn criterion_7() -> Verdict {
    let Some(dir) = std::env::var_os("DDG_TECATOR_DIR").map(PathBuf::from) else {
        return Verdict {
            id: "7",
            status: Status::Skipped,
            detail: "Tecator data absent (set DDG_TECATOR_DIR to a directory with absorp.csv and fat.csv)".into(),
        };
    };
    let run = || -> Result<Verdict, String> {
        let ab: FunctionalData<f64> = load_csv(dir.join("absorp.csv"), CsvLayout::Wide).map_err(|e| e.to_string())?;
        let fat = read_fat(&dir.join("fat.csv"))?;
        let ab2 = derivative(&ab, 2).map_err(|e| e.to_string())?;
        let labels: Vec<usize> = fat.iter().map(|&f| usize::from(f >= 15.0)).collect();
        let multi = MultiFunctionalData::new(vec![ab, ab2], vec!["ab".into(), "ab2".into()]).map_err(|e| e.to_string())?;
        let data = LabeledFunctionalData::new(multi, labels.clone()).map_err(|e| e.to_string())?;
        let mut candidates = Vec::new();
        for fam in ["FM", "RP", "hM"] {
            for (suffix, comb) in [("0", "0"), ("2", "1"), ("w", "w"), ("m", "m"), ("p", "p")] {
                let mut spec: DepthSpec = format!("{fam}.{comb}").parse().unwrap();
                if fam == "RP" {
                    spec = spec.with_univariate(UnivariateDepthKind::Mahalanobis);
                }
                let (_, f) = DdgTransform::fit_transform(&data, &[spec.with_seed(MASTER_SEED)]).map_err(|e| e.to_string())?;
                candidates.push((format!("{fam}.{suffix}"), f.values().clone()));
            }
        }
        let table = DcorTable::compute(&candidates, &labels).map_err(|e| e.to_string())?;
        let value = |name: &str| table.names.iter().position(|n| n == name).map(|i| table.with_labels[i]).unwrap();
        let first = table.select(1, 1.0)[0].clone();
        let (hm2, fm2, rp2) = (value("hM.2"), value("FM.2"), value("RP.2"));
        let dcor_ok = first == "hM.2"
            && (hm2 - 0.789).abs() <= 0.05
            && (fm2 - 0.771).abs() <= 0.05
            && (rp2 - 0.774).abs() <= 0.05;

        let spec: DepthSpec = "hM.m".parse().unwrap();
        let (_, f) = DdgTransform::fit_transform(&data, &[spec]).map_err(|e| e.to_string())?;
        let glm = GlmModel::fit(f.values().view(), &labels, 2).map_err(|e| e.to_string())?;
        let rows = glm.coefficient_table(f.names());
        let p = |term: &str| rows.iter().find(|r| r.term == term).map(|r| r.p).unwrap_or(f64::NAN);
        let (p20, p21, p11) = (p("ab2.mode.0"), p("ab2.mode.1"), p("ab.mode.1"));
        let glm_ok = p20 < 0.01 && p21 < 0.01 && p11 > 0.5;
        Ok(Verdict::check(
            "7",
            dcor_ok && glm_ok,
            format!(
                "first = {first}; hM.2 {hm2:.3} vs 0.789, FM.2 {fm2:.3} vs 0.771, RP.2 {rp2:.3} vs 0.774 (tol 0.05); \
                 GLM p: ab2.mode.0 {p20:.4}, ab2.mode.1 {p21:.4} (< 0.01), ab.mode.1 {p11:.3} (> 0.5)"
            ),
        ))
    };
    run().unwrap_or_else(|e| Verdict::check("7", false, format!("Tecator workflow failed: {e}")))
}

fn criterion_8() -> Verdict {
    let mut failed = Vec::new();
    let all = common::properties::all();
    for (name, check) in &all {
        if let Err(e) = check() {
            failed.push(format!("{name}: {e}"));
        }
    }
    Verdict::check(
        "8",
        failed.is_empty(),
        if failed.is_empty() {
            format!("{} property suites hold", all.len())
        } else {
            failed.join("; ")
        },
    )
}

fn criterion_9() -> Verdict {
    let mut r = rng(MASTER_SEED);
    let n = 2000;
    let beta = [0.4, 2.0, -1.5];
    let x = Array2::from_shape_fn((n, 2), |_| r.random::<f64>() * 2.0 - 1.0);
    let labels: Vec<usize> = (0..n)
        .map(|i| {
            let eta = beta[0] + beta[1] * x[[i, 0]] + beta[2] * x[[i, 1]];
            usize::from(r.random::<f64>() < 1.0 / (1.0 + (-eta).exp()))
        })
        .collect();
    let glm = GlmModel::fit(x.view(), &labels, 2).unwrap();
    let gam = GamModel::fit(x.view(), &labels, 2, 8, Some(1e8)).unwrap();
    let mut worst = 0.0f64;
    for j in 0..2 {
        let lo = x.column(j).iter().copied().fold(f64::INFINITY, f64::min);
        let hi = x.column(j).iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let slope = (gam.term_value(0, j, hi) - gam.term_value(0, j, lo)) / (hi - lo);
        let b = glm.coefficients()[[0, j + 1]];
        worst = worst.max(((slope - b) / b).abs());
    }
    let agree = (0..n)
        .filter(|&i| {
            let a = glm.posterior_row(x.row(i))[1] > 0.5;
            let b = gam.posterior_row(x.row(i))[1] > 0.5;
            a == b
        })
        .count() as f64
        / n as f64;
    Verdict::check(
        "9",
        worst <= 0.05 && agree >= 0.98,
        format!("heavily penalized GAM vs GLM: max relative slope gap {worst:.4} (tol 0.05), prediction agreement {agree:.4} (min 0.98)"),
    )
}

fn main() {
    let wanted: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    type Criterion = (&'static str, fn() -> Verdict);
    let criteria: [Criterion; 9] = [
        ("1", criterion_1),
        ("2", criterion_2),
        ("3", criterion_3),
        ("4", criterion_4),
        ("5", criterion_5),
        ("6", criterion_6),
        ("7", criterion_7),
        ("8", criterion_8),
        ("9", criterion_9),
    ];
    let mut failures = 0;
    for (id, run) in criteria {
        if !wanted.is_empty() && !wanted.iter().any(|w| w == id) {
            continue;
        }
        let v = run();
        if v.status == Status::Fail {
            failures += 1;
        }
        println!("{}", v.line());
    }
    println!("acceptance: {failures} criteria failed");
    if failures > 0 && std::env::var("DDG_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
