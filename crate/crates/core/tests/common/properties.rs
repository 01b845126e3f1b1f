//! Property checks over seeded random cases. Each returns the first
//! violation found.

use ddg_core::classify::{fit_classifier, ClassifierKind, ClassifierOptions, GlmModel, KnnModel, NpModel};
use ddg_core::ddg::DdgTransform;
use ddg_core::depth::{
    random_directions, univariate_depth, Combination, DepthFamily, DepthModel, DepthSpec, HalfspaceDepth2d,
    MahalanobisReference, UnivariateDepthKind,
};
use ddg_core::energy::{dcor, DistanceMatrix};
use ddg_core::fdata::{FunctionalData, Grid, LabeledFunctionalData, MultiFunctionalData};
use ddg_core::sim::{gp_sample, run_once, simulate_model, ExperimentSpec, SimConfig, SimModel};
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{random_curves, rng};

pub type Check = std::result::Result<(), String>;

const CASES: u64 = 25;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn normal_sample(seed: u64, n: usize) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| StandardNormal.sample(&mut r)).collect()
}

fn functional(seed: u64, n: usize, t: usize) -> FunctionalData<f64> {
    let grid = Grid::equispaced(0.0, 1.0, t).unwrap();
    FunctionalData::from_rows(grid, &random_curves(&mut rng(seed), n, t)).unwrap()
}

/// Two-component labelled sample with `g` groups of `per` curves, the
/// groups shifted apart.
fn labelled(seed: u64, g: usize, per: usize, t: usize) -> LabeledFunctionalData<f64> {
    let grid = Grid::equispaced(0.0, 1.0, t).unwrap();
    let mut r = rng(seed);
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut labels = Vec::new();
    for grp in 0..g {
        for c in random_curves(&mut r, per, t) {
            x.push(c.iter().map(|v| v + 0.6 * grp as f64).collect::<Vec<_>>());
            y.push(c.iter().enumerate().map(|(k, v)| v * (1.0 + 0.3 * grp as f64) + 0.01 * k as f64).collect());
            labels.push(grp);
        }
    }
    let multi = MultiFunctionalData::new(
        vec![FunctionalData::from_rows(grid.clone(), &x).unwrap(), FunctionalData::from_rows(grid, &y).unwrap()],
        vec!["a".into(), "b".into()],
    )
    .unwrap();
    LabeledFunctionalData::new(multi, labels).unwrap()
}

/// Two overlapping gaussian clouds in the plane.
fn planar(seed: u64, n: usize) -> (Array2<f64>, Vec<usize>) {
    let mut r = rng(seed);
    let mut x = Array2::zeros((2 * n, 2));
    let mut labels = Vec::new();
    for i in 0..2 * n {
        let c = usize::from(i >= n);
        let z0: f64 = StandardNormal.sample(&mut r);
        let z1: f64 = StandardNormal.sample(&mut r);
        x[[i, 0]] = 0.3 + 0.1 * z0.abs() * if c == 0 { 1.0 } else { 0.5 };
        x[[i, 1]] = 0.3 + 0.1 * z1.abs() * if c == 0 { 0.5 } else { 1.0 } + 0.05 * c as f64;
        labels.push(c);
    }
    (x, labels)
}

pub fn depth_bounds() -> Check {
    for case in 0..CASES {
        let s = normal_sample(case, 5 + case as usize);
        for &x in s.iter().chain([-10.0, 0.0, 10.0].iter()) {
            let hs = univariate_depth(UnivariateDepthKind::Halfspace, x, &s).unwrap();
            let fmd = univariate_depth(UnivariateDepthKind::FraimanMuniz, x, &s).unwrap();
            let sd = univariate_depth(UnivariateDepthKind::Simplicial, x, &s).unwrap();
            let mhd = univariate_depth(UnivariateDepthKind::Mahalanobis, x, &s).unwrap();
            ensure((0.0..=0.5).contains(&hs), || format!("HS {hs} out of [0, 1/2]"))?;
            ensure((0.5..=1.0).contains(&fmd), || format!("FMD {fmd} out of [1/2, 1]"))?;
            ensure((0.0..=1.0).contains(&sd), || format!("SD {sd} out of [0, 1]"))?;
            ensure(mhd > 0.0 && mhd <= 1.0, || format!("MhD {mhd} out of (0, 1]"))?;
        }
        let data = MultiFunctionalData::single(functional(100 + case, 12, 9));
        for (spec, lo, hi) in [
            ("FM.0-HS", 0.0, 0.5),
            ("FM.0-SD", 0.0, 1.0),
            ("FM.0", 0.0, 1.0),
            ("RP.0", 0.0, 0.5),
            ("hM.0", 0.0, 1.0 / (2.0 * std::f64::consts::PI).sqrt()),
        ] {
            let spec: DepthSpec = spec.parse::<DepthSpec>().unwrap().with_seed(case);
            let d = DepthModel::fit(&spec, &data).unwrap().score_single(&data).unwrap();
            ensure(d.iter().all(|&v| v >= lo && v <= hi + 1e-12), || format!("{} outside [{lo}, {hi}]", spec.label()))?;
        }
    }
    Ok(())
}

pub fn monotone_invariance() -> Check {
    for case in 0..CASES {
        let s = normal_sample(1000 + case, 3 + case as usize);
        let f = |v: f64| v.exp() + 3.0 * v;
        let fs: Vec<f64> = s.iter().map(|&v| f(v)).collect();
        for kind in [UnivariateDepthKind::Halfspace, UnivariateDepthKind::FraimanMuniz, UnivariateDepthKind::Simplicial] {
            for &x in s.iter().chain([-0.3, 0.7].iter()) {
                let a = univariate_depth(kind, x, &s).unwrap();
                let b = univariate_depth(kind, f(x), &fs).unwrap();
                ensure(a == b, || format!("{kind}: {a} != {b} after a monotone map"))?;
            }
        }
    }
    Ok(())
}

pub fn mahalanobis_affine_invariance() -> Check {
    for case in 0..CASES {
        let s = normal_sample(2000 + case, 4 + case as usize);
        let (a, b) = (-2.5 + 0.1 * case as f64, 7.0f64);
        let t: Vec<f64> = s.iter().map(|v| a * v + b).collect();
        for &x in s.iter().chain([1.3].iter()) {
            let d0 = univariate_depth(UnivariateDepthKind::Mahalanobis, x, &s).unwrap();
            let d1 = univariate_depth(UnivariateDepthKind::Mahalanobis, a * x + b, &t).unwrap();
            ensure((d0 - d1).abs() < 1e-12, || format!("univariate MhD {d0} vs {d1}"))?;
        }
        let mut r = rng(2500 + case);
        let n = 12;
        let pts: Array2<f64> = Array2::from_shape_fn((n, 3), |_| StandardNormal.sample(&mut r));
        let m = Array2::from_shape_vec((3, 3), vec![2.0, 0.5, 0.0, -1.0, 1.0, 0.3, 0.2, 0.0, 1.5]).unwrap();
        let shift = Array1::from(vec![1.0, -2.0, 0.5]);
        let moved = pts.dot(&m.t()) + &shift;
        let r0 = MahalanobisReference::fit(pts.view()).unwrap();
        let r1 = MahalanobisReference::fit(moved.view()).unwrap();
        for i in 0..n {
            let d0 = r0.depth(pts.row(i)).unwrap();
            let d1 = r1.depth(moved.row(i)).unwrap();
            ensure((d0 - d1).abs() < 1e-9, || format!("3-variate MhD {d0} vs {d1}"))?;
        }
    }
    Ok(())
}

pub fn hm_translation_invariance() -> Check {
    for case in 0..CASES {
        let data = functional(3000 + case, 15, 11);
        let shift: Vec<f64> = data.grid().points().iter().map(|t| (3.0 * t).sin() * 5.0).collect();
        let moved = FunctionalData::new(
            data.grid().clone(),
            data.values() + &Array1::from(shift).broadcast((data.n_curves(), data.n_points())).unwrap(),
        )
        .unwrap();
        let spec: DepthSpec = "hM.0".parse().unwrap();
        let a = MultiFunctionalData::single(data);
        let b = MultiFunctionalData::single(moved);
        let d0 = DepthModel::fit(&spec, &a).unwrap().score_single(&a).unwrap();
        let d1 = DepthModel::fit(&spec, &b).unwrap().score_single(&b).unwrap();
        for (x, y) in d0.iter().zip(&d1) {
            ensure((x - y).abs() < 1e-10, || format!("hM depth {x} vs {y} after translation"))?;
        }
    }
    Ok(())
}

pub fn dcor_invariances() -> Check {
    for case in 0..CASES {
        let mut r = rng(4000 + case);
        let n = 10 + case as usize;
        let x = Array2::from_shape_fn((n, 2), |_| r.random::<f64>());
        let labels: Vec<usize> = (0..n).map(|i| usize::from(x[[i, 0]] + 0.3 * r.random::<f64>() > 0.6)).collect();
        if labels.iter().all(|&l| l == labels[0]) {
            continue;
        }
        let dx = DistanceMatrix::euclidean(x.view()).unwrap();
        let dy = DistanceMatrix::labels(&labels).unwrap();
        let scaled = DistanceMatrix::euclidean(x.mapv(|v| 3.7 * v).view()).unwrap();
        for corrected in [false, true] {
            let a = dcor(&dx, &dy, corrected).unwrap().value;
            let b = dcor(&scaled, &dy, corrected).unwrap().value;
            ensure((a - b).abs() < 1e-12, || format!("dcor {a} vs {b} after scaling"))?;
            let s = dcor(&dx, &dx, corrected).unwrap().value;
            ensure((s - 1.0).abs() < 1e-12, || format!("dcor(a, a) = {s}"))?;
        }
    }
    Ok(())
}

pub fn glm_posteriors_normalized() -> Check {
    for case in 0..CASES {
        let mut r = rng(5000 + case);
        let g = 2 + (case as usize % 3);
        let n = 30 * g;
        let labels: Vec<usize> = (0..n).map(|i| i % g).collect();
        let x = Array2::from_shape_fn((n, g), |(i, j)| r.random::<f64>() + if labels[i] == j { 0.4 } else { 0.0 });
        let m = GlmModel::fit(x.view(), &labels, g).unwrap();
        for i in 0..n {
            let p = m.posterior_row(x.row(i));
            let s: f64 = p.iter().sum();
            ensure((s - 1.0).abs() < 1e-12 && p.iter().all(|v| (0.0..=1.0).contains(v)), || {
                format!("posterior row {p:?} sums to {s}")
            })?;
        }
    }
    Ok(())
}

pub fn knn_np_rescaling() -> Check {
    for case in 0..CASES / 5 {
        let (x, labels) = planar(6000 + case, 40);
        let probe = planar(6500 + case, 20).0;
        for c in [0.25, 8.0] {
            let xs = x.mapv(|v| v * c);
            let ps = probe.mapv(|v| v * c);
            let k0 = KnnModel::fit(x.view(), &labels, 2, None).unwrap();
            let k1 = KnnModel::fit(xs.view(), &labels, 2, None).unwrap();
            ensure(k0.k() == k1.k(), || format!("kNN picked k = {} and {}", k0.k(), k1.k()))?;
            let n0 = NpModel::fit(x.view(), &labels, 2, None).unwrap();
            let n1 = NpModel::fit(xs.view(), &labels, 2, None).unwrap();
            for i in 0..probe.nrows() {
                let (a, b) = (probe.row(i).to_vec(), ps.row(i).to_vec());
                ensure(k0.predict_row(&a).0 == k1.predict_row(&b).0, || "kNN prediction changed".into())?;
                ensure(n0.predict_row(&a).0 == n1.predict_row(&b).0, || "NP prediction changed".into())?;
            }
        }
    }
    Ok(())
}

pub fn ddk_degree_nesting() -> Check {
    for case in 0..CASES / 5 {
        let (x, labels) = planar(7000 + case, 60);
        let opts = ClassifierOptions { ddk_candidates: 2000, seed: case, ..ClassifierOptions::default() };
        let errs: Vec<f64> = (1..=3)
            .map(|k| fit_classifier(ClassifierKind::Ddk(k), &opts, x.view(), &labels, 2).unwrap().training_error())
            .collect();
        ensure(errs[1] <= errs[0] && errs[2] <= errs[1], || format!("training errors by degree {errs:?}"))?;
    }
    Ok(())
}

pub fn group_exchange_equivariance() -> Check {
    let specs: Vec<DepthSpec> = ["FM.0", "hM.w", "RP.m", "FM.p", "hM.p"]
        .iter()
        .map(|s| s.parse::<DepthSpec>().unwrap().with_seed(9))
        .collect();
    for case in 0..CASES / 5 {
        let data = labelled(8000 + case, 3, 8, 9);
        let perm = [2usize, 0, 1];
        let relabelled: Vec<usize> = data.labels().iter().map(|&l| perm[l]).collect();
        let other = LabeledFunctionalData::new(data.data().clone(), relabelled).unwrap();
        let (t0, f0) = DdgTransform::fit_transform(&data, &specs).unwrap();
        let (_, f1) = DdgTransform::fit_transform(&other, &specs).unwrap();
        for (col, c) in t0.columns().iter().enumerate() {
            let name = f0.names()[col].clone();
            let moved = t0
                .columns()
                .iter()
                .position(|o| o.spec == c.spec && o.coordinate == c.coordinate && o.group == perm[c.group])
                .unwrap();
            ensure(f0.values().column(col) == f1.values().column(moved), || {
                format!("column {name} did not follow its group")
            })?;
        }
    }
    Ok(())
}

pub fn seed_determinism() -> Check {
    let grid: Grid<f64> = Grid::equispaced(0.0, 1.0, 21).unwrap();
    ensure(random_directions(&grid, 5, 3, 1) == random_directions(&grid, 5, 3, 1), || "directions".into())?;
    let data = labelled(9000, 2, 10, 11);
    let rp = DepthSpec::new(DepthFamily::RandomProjection, Combination::Joint).with_seed(5);
    let a = DepthModel::fit(&rp, data.data()).unwrap().score(data.data()).unwrap();
    let b = DepthModel::fit(&rp, data.data()).unwrap().score(data.data()).unwrap();
    ensure(a == b, || "RP depth".into())?;
    let pts: Vec<[f64; 2]> = (0..30).map(|i| [(i as f64 * 0.37).sin(), (i as f64 * 0.91).cos()]).collect();
    let h0 = HalfspaceDepth2d::fit(&pts, 64, 7).unwrap();
    let h1 = HalfspaceDepth2d::fit(&pts, 64, 7).unwrap();
    ensure(h0 == h1, || "2-D halfspace angles".into())?;
    let (x, labels) = planar(9100, 30);
    let opts = ClassifierOptions { ddk_candidates: 500, seed: 4, ..ClassifierOptions::default() };
    let c0 = fit_classifier(ClassifierKind::Ddk(2), &opts, x.view(), &labels, 2).unwrap();
    let c1 = fit_classifier(ClassifierKind::Ddk(2), &opts, x.view(), &labels, 2).unwrap();
    ensure(c0 == c1, || "DD2 fit".into())?;
    let mean = vec![0.0; 21];
    ensure(gp_sample(&mean, &grid, 0.5, 0.3, 4, 1).unwrap() == gp_sample(&mean, &grid, 0.5, 0.3, 4, 1).unwrap(), || {
        "gaussian process draws".into()
    })?;
    let cfg = SimConfig::new(SimModel::Model2, 10, 3);
    ensure(simulate_model::<f64>(&cfg).unwrap() == simulate_model::<f64>(&cfg).unwrap(), || "simulation".into())?;
    let mut small = SimConfig::new(SimModel::Model1, 10, 0);
    small.grid_points = 15;
    let mut spec = ExperimentSpec::new(
        small,
        vec!["RP.0".parse().unwrap()],
        vec![ClassifierKind::Ddk(1), ClassifierKind::Knn],
        1,
        8,
    );
    spec.test_n = 5;
    spec.classifier_options.ddk_candidates = 100;
    ensure(run_once(&spec, 0).unwrap().errors == run_once(&spec, 0).unwrap().errors, || "experiment run".into())?;
    Ok(())
}

pub type Property = (&'static str, fn() -> Check);

/// Every property, by name.
pub fn all() -> Vec<Property> {
    vec![
        ("depth range bounds", depth_bounds),
        ("monotone invariance of HS/FMD/SD", monotone_invariance),
        ("affine invariance of MhD", mahalanobis_affine_invariance),
        ("hM translation invariance", hm_translation_invariance),
        ("dcor scale invariance and dcor(a,a)=1", dcor_invariances),
        ("GLM posterior rows sum to one", glm_posteriors_normalized),
        ("kNN/NP rescaling invariance", knn_np_rescaling),
        ("DDk degree nesting", ddk_degree_nesting),
        ("DD^G group-exchange equivariance", group_exchange_equivariance),
        ("seed determinism", seed_determinism),
    ]
}
