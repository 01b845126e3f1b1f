use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdata::{FunctionalData, Grid, LabeledFunctionalData, MultiFunctionalData};
use crate::linalg;
use crate::Scalar;

/// The four functional simulation models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum SimModel {
    Model1,
    Model2,
    Model3,
    Model4,
}

impl SimModel {
    pub fn n_groups(self) -> usize {
        match self {
            SimModel::Model4 => 4,
            _ => 2,
        }
    }
}

impl From<SimModel> for u8 {
    fn from(m: SimModel) -> u8 {
        match m {
            SimModel::Model1 => 1,
            SimModel::Model2 => 2,
            SimModel::Model3 => 3,
            SimModel::Model4 => 4,
        }
    }
}

impl TryFrom<u8> for SimModel {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        Ok(match v {
            1 => SimModel::Model1,
            2 => SimModel::Model2,
            3 => SimModel::Model3,
            4 => SimModel::Model4,
            _ => return Err(Error::Parameter(format!("unknown simulation model {v}"))),
        })
    }
}

impl FromStr for SimModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.trim_start_matches("model").parse::<u8>().map_err(|_| Error::Parameter(format!("unknown simulation model `{s}`")))?.try_into()
    }
}

impl fmt::Display for SimModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", u8::from(*self))
    }
}

fn d_grid() -> usize {
    51
}
fn d_k() -> f64 {
    1.1
}
fn d_theta1() -> f64 {
    0.5
}
fn d_theta2() -> f64 {
    0.25
}
fn d_range() -> f64 {
    0.3
}
fn d_n() -> usize {
    100
}

/// Parameters of a functional simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub model: SimModel,
    /// Training curves per group (Models 1, 2) or per subgroup (3, 4).
    #[serde(default = "d_n")]
    pub n: usize,
    #[serde(default = "d_grid")]
    pub grid_points: usize,
    #[serde(default = "d_k")]
    pub k: f64,
    #[serde(default = "d_theta1")]
    pub theta1: f64,
    #[serde(default = "d_theta2")]
    pub theta2: f64,
    /// Range of the exponential covariance.
    #[serde(default = "d_range")]
    pub range: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SimConfig {
    pub fn new(model: SimModel, n: usize, seed: u64) -> Self {
        SimConfig {
            model,
            n,
            grid_points: d_grid(),
            k: d_k(),
            theta1: d_theta1(),
            theta2: d_theta2(),
            range: d_range(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta1 > 0.0 && self.theta2 > 0.0 && self.k > 0.0 && self.range > 0.0) {
            return Err(Error::Parameter("theta1, theta2, k and range must be positive".into()));
        }
        if self.grid_points < 2 {
            return Err(Error::Parameter("the grid needs at least two points".into()));
        }
        if self.n == 0 {
            return Err(Error::Parameter("n must be at least 1".into()));
        }
        Ok(())
    }

    pub fn grid<T: Scalar>(&self) -> Result<Grid<T>> {
        Grid::equispaced(T::zero(), T::one(), self.grid_points)
    }
}

/// Mean function of `group` (and `subgroup` where the group is a mixture).
/// Model 4 groups are Model 3's subgroups in the order
/// (P1, I=0), (P1, I=1), (P2, I=0), (P2, I=1); `subgroup` is ignored there.
pub fn model_mean(model: SimModel, group: usize, subgroup: usize, t: f64, k: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Parameter(format!("t = {t} outside [0, 1]")));
    }
    let p1 = |a: f64| a * (1.0 - t) * t.powf(k);
    let p2 = |a: f64| a * (1.0 - t).powf(k) * t;
    let bad = || Error::Parameter(format!("model {model} has no group {group} / subgroup {subgroup}"));
    Ok(match (model, group, subgroup) {
        (SimModel::Model1, 0, _) | (SimModel::Model2, 0, _) => p1(30.0),
        (SimModel::Model1, 1, _) => p2(30.0),
        (SimModel::Model2, 1, 0) => p2(25.0),
        (SimModel::Model2, 1, 1) => p2(35.0),
        (SimModel::Model3, 0, 0) | (SimModel::Model4, 0, _) => p1(22.0),
        (SimModel::Model3, 0, 1) | (SimModel::Model4, 1, _) => p1(30.0),
        (SimModel::Model3, 1, 0) | (SimModel::Model4, 2, _) => p2(26.0),
        (SimModel::Model3, 1, 1) | (SimModel::Model4, 3, _) => p2(34.0),
        _ => return Err(bad()),
    })
}

/// Error variance scale of `group`: population 1 gets `theta1`.
fn theta_of(cfg: &SimConfig, group: usize) -> f64 {
    let population = match cfg.model {
        SimModel::Model4 => group / 2,
        _ => group,
    };
    if population == 0 {
        cfg.theta1
    } else {
        cfg.theta2
    }
}

/// Lower Cholesky factor of `theta exp(-|s - t| / range)` on the grid, with
/// jitter `1e-10 theta`, `1e-9 theta`, `1e-8 theta` tried in turn if needed.
pub fn gp_cholesky<T: Scalar>(grid: &Grid<T>, theta: f64, range: f64) -> Result<Array2<T>> {
    if !(theta > 0.0) {
        return Err(Error::Parameter(format!("theta must be positive, got {theta}")));
    }
    let pts = grid.points();
    let c = Array2::from_shape_fn((pts.len(), pts.len()), |(i, j)| {
        T::lit(theta * (-(pts[i] - pts[j]).abs().as_f64() / range).exp())
    });
    if let Some(l) = linalg::cholesky(c.view(), T::zero()) {
        return Ok(l);
    }
    for jitter in [1e-10, 1e-9, 1e-8] {
        let mut cj = c.clone();
        for i in 0..pts.len() {
            cj[[i, i]] += T::lit(jitter * theta);
        }
        if let Some(l) = linalg::cholesky(cj.view(), T::zero()) {
            return Ok(l);
        }
    }
    Err(Error::Numerical("covariance not positive definite after jitter".into()))
}

fn draw_curve<T: Scalar>(mean: &[T], chol: &Array2<T>, rng: &mut ChaCha8Rng) -> Vec<T> {
    let z: Vec<T> = (0..mean.len()).map(|_| T::lit(StandardNormal.sample(rng))).collect();
    (0..mean.len())
        .map(|i| mean[i] + (0..=i).map(|j| chol[[i, j]] * z[j]).sum::<T>())
        .collect()
}

/// `n` curves `mean + e` with `e` a zero-mean gaussian process of covariance
/// `theta exp(-|s - t| / range)`.
pub fn gp_sample<T: Scalar>(
    mean: &[T],
    grid: &Grid<T>,
    theta: f64,
    range: f64,
    n: usize,
    seed: u64,
) -> Result<FunctionalData<T>> {
    if mean.len() != grid.len() {
        return Err(Error::Dimension("mean curve and grid differ in length".into()));
    }
    let chol = gp_cholesky(grid, theta, range)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<T>> = (0..n).map(|_| draw_curve(mean, &chol, &mut rng)).collect();
    FunctionalData::from_rows(grid.clone(), &rows)
}

/// How many curves of each (group, subgroup) block to draw.
enum Design {
    /// `n` curves per group; mixture groups draw the subgroup per curve.
    PerGroup(usize),
    /// `counts[group][subgroup]`.
    Blocks(Vec<Vec<usize>>),
}

fn simulate<T: Scalar>(cfg: &SimConfig, design: Design, seed: u64) -> Result<LabeledFunctionalData<T>> {
    cfg.validate()?;
    let grid = cfg.grid::<T>()?;
    let g = cfg.model.n_groups();
    let chols = (0..g)
        .map(|grp| gp_cholesky(&grid, theta_of(cfg, grp), cfg.range))
        .collect::<Result<Vec<_>>>()?;
    let mean = |grp: usize, sub: usize| -> Result<Vec<T>> {
        grid.points()
            .iter()
            .map(|&t| model_mean(cfg.model, grp, sub, t.as_f64().clamp(0.0, 1.0), cfg.k).map(T::lit))
            .collect()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    match design {
        Design::PerGroup(n) => {
            for (grp, chol) in chols.iter().enumerate().take(g) {
                let mixture = cfg.model == SimModel::Model2 && grp == 1;
                let means = [mean(grp, 0)?, if mixture { mean(grp, 1)? } else { Vec::new() }];
                for _ in 0..n {
                    let sub = if mixture { usize::from(rng.random::<bool>()) } else { 0 };
                    rows.push(draw_curve(&means[sub], chol, &mut rng));
                    labels.push(grp);
                }
            }
        }
        Design::Blocks(counts) => {
            for (grp, subs) in counts.iter().enumerate() {
                for (sub, &n) in subs.iter().enumerate() {
                    let m = mean(grp, sub)?;
                    for _ in 0..n {
                        rows.push(draw_curve(&m, &chols[grp], &mut rng));
                        labels.push(grp);
                    }
                }
            }
        }
    }
    let data = FunctionalData::from_rows(grid, &rows)?;
    LabeledFunctionalData::new(MultiFunctionalData::single(data), labels)
}

/// Training sample: `n` curves per group for Models 1 and 2 (Model 2's
/// second group draws its subgroup by a fair coin per curve) and `n` per
/// subgroup for Models 3 and 4.
pub fn simulate_model<T: Scalar>(cfg: &SimConfig) -> Result<LabeledFunctionalData<T>> {
    let n = cfg.n;
    let design = match cfg.model {
        SimModel::Model1 | SimModel::Model2 => Design::PerGroup(n),
        SimModel::Model3 => Design::Blocks(vec![vec![n, n], vec![n, n]]),
        SimModel::Model4 => Design::Blocks(vec![vec![n]; 4]),
    };
    simulate(cfg, design, cfg.seed)
}

/// Test sample with `n_per_group` curves per group; Model 3 splits each
/// group evenly over its two subgroups (the first gets the extra curve when
/// `n_per_group` is odd).
pub fn simulate_test<T: Scalar>(cfg: &SimConfig, n_per_group: usize, seed: u64) -> Result<LabeledFunctionalData<T>> {
    let n = n_per_group;
    let design = match cfg.model {
        SimModel::Model1 | SimModel::Model2 => Design::PerGroup(n),
        SimModel::Model3 => {
            let a = n.div_ceil(2);
            Design::Blocks(vec![vec![a, n - a], vec![a, n - a]])
        }
        SimModel::Model4 => Design::Blocks(vec![vec![n]; 4]),
    };
    simulate(cfg, design, seed)
}
