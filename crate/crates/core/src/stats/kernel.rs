//! RBF kernel ridge regression with grid-searched hyperparameters.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use super::{kfold_split, StatsError};
use crate::rng::SimRng;

/// Per-column min-max scaling onto `[0, 1]`; constant columns map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    min: Vec<f64>,
    range: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        let mut min = vec![f64::INFINITY; dim];
        let mut max = vec![f64::NEG_INFINITY; dim];
        for r in rows {
            for (j, &v) in r.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        let range = min.iter().zip(&max).map(|(lo, hi)| hi - lo).collect();
        MinMaxScaler { min, range }
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|r| {
                r.iter().enumerate().map(|(j, &v)| if self.range[j] > 0.0 { (v - self.min[j]) / self.range[j] } else { 0.0 }).collect()
            })
            .collect()
    }

    /// Columns with zero spread in the fitted data.
    pub fn constant_columns(&self) -> usize {
        self.range.iter().filter(|r| **r == 0.0).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KrrParams {
    /// RBF width: `k(a, b) = exp(−γ‖a − b‖²)`.
    pub gamma: f64,
    pub lambda: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn distance_matrix(rows: &[Vec<f64>]) -> Mat<f64> {
    let n = rows.len();
    let mut d = Mat::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = sq_dist(&rows[i], &rows[j]);
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

fn rbf(dist: &Mat<f64>, gamma: f64) -> Mat<f64> {
    Mat::from_fn(dist.nrows(), dist.ncols(), |i, j| (-gamma * dist[(i, j)]).exp())
}

/// Solves `(K + λI) α = y − ȳ`.
fn solve(kernel: &Mat<f64>, lambda: f64, y_centered: &Mat<f64>) -> Result<Mat<f64>, StatsError> {
    let mut system = kernel.clone();
    for i in 0..system.nrows() {
        system[(i, i)] += lambda;
    }
    let chol = system.llt(Side::Lower).map_err(|_| StatsError::Singular)?;
    let alpha = chol.solve(y_centered);
    if alpha.col(0).iter().all(|v| v.is_finite()) {
        Ok(alpha)
    } else {
        Err(StatsError::Singular)
    }
}

fn column(values: impl ExactSizeIterator<Item = f64>) -> Mat<f64> {
    let v: Vec<f64> = values.collect();
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

/// A fitted model; expects inputs already scaled like its training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelModel {
    rows: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    y_mean: f64,
    params: KrrParams,
}

impl KernelModel {
    pub fn fit(rows: &[Vec<f64>], targets: &[f64], params: KrrParams) -> Result<Self, StatsError> {
        if rows.len() != targets.len() {
            return Err(StatsError::LengthMismatch(rows.len(), targets.len()));
        }
        if rows.len() < 2 {
            return Err(StatsError::TooFewPoints { needed: 2, got: rows.len() });
        }
        if !(params.gamma > 0.0 && params.lambda >= 0.0) {
            return Err(StatsError::Invalid(format!("invalid hyperparameters {params:?}")));
        }
        if params.lambda == 0.0 {
            let mut sorted: Vec<&Vec<f64>> = rows.iter().collect();
            sorted.sort_by(|a, b| {
                a.iter().zip(b.iter()).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
            });
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(StatsError::Singular);
            }
        }
        let y_mean = targets.iter().sum::<f64>() / targets.len() as f64;
        let y = column(targets.iter().map(|t| t - y_mean));
        let alpha = solve(&rbf(&distance_matrix(rows), params.gamma), params.lambda, &y)?;
        Ok(KernelModel { rows: rows.to_vec(), alpha: alpha.col(0).iter().copied().collect(), y_mean, params })
    }

    pub fn params(&self) -> KrrParams {
        self.params
    }

    pub fn predict_one(&self, x: &[f64]) -> f64 {
        self.y_mean + self.rows.iter().zip(&self.alpha).map(|(r, a)| a * (-self.params.gamma * sq_dist(r, x)).exp()).sum::<f64>()
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter().map(|r| self.predict_one(r)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSearch {
    pub gammas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub folds: usize,
}

/// `10^-3 … 10^3`, one value per decade.
pub const DEFAULT_GRID: [f64; 7] = [1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3];

impl Default for GridSearch {
    fn default() -> Self {
        GridSearch { gammas: DEFAULT_GRID.to_vec(), lambdas: DEFAULT_GRID.to_vec(), folds: 3 }
    }
}

/// Picks the hyperparameters with the lowest inner cross-validated MSE.
/// Ties keep the first cell in grid order.
pub fn grid_search(rows: &[Vec<f64>], targets: &[f64], grid: &GridSearch, rng: &mut SimRng) -> Result<(KrrParams, f64), StatsError> {
    if rows.len() != targets.len() {
        return Err(StatsError::LengthMismatch(rows.len(), targets.len()));
    }
    if grid.gammas.is_empty() || grid.lambdas.is_empty() {
        return Err(StatsError::Invalid("empty hyperparameter grid".into()));
    }
    let folds = kfold_split(rows.len(), grid.folds, rng)?;
    let dist = distance_matrix(rows);
    let splits: Vec<(Vec<usize>, &Vec<usize>)> = folds
        .iter()
        .map(|held| {
            let train = (0..rows.len()).filter(|i| held.binary_search(i).is_err()).collect();
            (train, held)
        })
        .collect();

    let mut best: Option<(KrrParams, f64)> = None;
    for &gamma in &grid.gammas {
        let kernel = rbf(&dist, gamma);
        let mut sq = vec![0.0; grid.lambdas.len()];
        let mut ok = vec![true; grid.lambdas.len()];
        for (train, held) in &splits {
            if train.len() < 2 {
                return Err(StatsError::TooFewPoints { needed: 2, got: train.len() });
            }
            let y_mean = train.iter().map(|&i| targets[i]).sum::<f64>() / train.len() as f64;
            let y = column(train.iter().map(|&i| targets[i] - y_mean));
            let k_tt = Mat::from_fn(train.len(), train.len(), |a, b| kernel[(train[a], train[b])]);
            let k_vt = Mat::from_fn(held.len(), train.len(), |a, b| kernel[(held[a], train[b])]);
            for (l, &lambda) in grid.lambdas.iter().enumerate() {
                if !ok[l] {
                    continue;
                }
                let Ok(alpha) = solve(&k_tt, lambda, &y) else {
                    ok[l] = false;
                    continue;
                };
                let pred = &k_vt * &alpha;
                sq[l] += held.iter().zip(pred.col(0).iter()).map(|(&i, p)| (p + y_mean - targets[i]).powi(2)).sum::<f64>();
            }
        }
        for (l, &lambda) in grid.lambdas.iter().enumerate() {
            let mse = sq[l] / rows.len() as f64;
            if ok[l] && best.is_none_or(|(_, b)| mse < b) {
                best = Some((KrrParams { gamma, lambda }, mse));
            }
        }
    }
    best.ok_or(StatsError::Singular)
}
