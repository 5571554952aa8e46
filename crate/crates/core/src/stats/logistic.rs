use serde::{Deserialize, Serialize};

use super::{check_pair, median, sample_std, StatsError};

pub const MAX_ITERATIONS: usize = 2000;
const RESTARTS: usize = 5;
/// A run stops once this many iterations improve the best value by less
/// than `STALL_TOLERANCE`, relative.
const STALL_WINDOW: usize = 100;
const STALL_TOLERANCE: f64 = 1e-9;

/// `Q' = β2 + (β1 − β2) / (1 + exp(−(Q − β3) / |β4|))`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Logistic4Params {
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub beta4: f64,
}

impl Logistic4Params {
    fn from_slice(v: &[f64]) -> Self {
        Logistic4Params { beta1: v[0], beta2: v[1], beta3: v[2], beta4: v[3] }
    }

    fn to_vec(self) -> Vec<f64> {
        vec![self.beta1, self.beta2, self.beta3, self.beta4]
    }

    pub fn eval(&self, q: f64) -> f64 {
        let s = self.beta4.abs().max(f64::MIN_POSITIVE);
        self.beta2 + (self.beta1 - self.beta2) / (1.0 + (-(q - self.beta3) / s).exp())
    }

    pub fn apply(&self, q: &[f64]) -> Vec<f64> {
        q.iter().map(|&v| self.eval(v)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub params: Logistic4Params,
    pub sse: f64,
    pub initial_sse: f64,
    /// False when the best run stopped at the iteration cap.
    pub converged: bool,
    /// Targets are constant, so the mapping is a flat line.
    pub degenerate: bool,
}

fn sse(p: &Logistic4Params, pred: &[f64], mos: &[f64]) -> f64 {
    pred.iter().zip(mos).map(|(&q, &m)| (p.eval(q) - m).powi(2)).sum()
}

struct Simplex {
    best: Vec<f64>,
    value: f64,
    converged: bool,
}

/// Nelder-Mead with standard coefficients; `scale` sets the initial simplex.
fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], scale: &[f64], max_iter: usize) -> Simplex {
    let n = x0.len();
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += scale[i];
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    let mut converged = false;
    let mut checkpoint = f64::INFINITY;
    for iter in 0..max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let spread = vals[n] - vals[0];
        let diameter = (1..=n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (pts[i][j] - pts[0][j]).abs() / (1.0 + pts[0][j].abs()))
            .fold(0.0, f64::max);
        if spread <= 1e-10 * (1.0 + vals[0].abs()) && diameter <= 1e-9 {
            converged = true;
            break;
        }
        if iter % STALL_WINDOW == 0 {
            if checkpoint - vals[0] <= STALL_TOLERANCE * (1.0 + vals[0].abs()) {
                break;
            }
            checkpoint = vals[0];
        }

        let centroid: Vec<f64> = (0..n).map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (pts[n][j] - centroid[j])).collect() };
        let reflected = along(-1.0);
        let fr = f(&reflected);
        if fr < vals[0] {
            let expanded = along(-2.0);
            let fe = f(&expanded);
            if fe < fr {
                pts[n] = expanded;
                vals[n] = fe;
            } else {
                pts[n] = reflected;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            pts[n] = reflected;
            vals[n] = fr;
        } else {
            let (contracted, fc) = if fr < vals[n] {
                let c = along(-0.5);
                let fc = f(&c);
                (c, fc)
            } else {
                let c = along(0.5);
                let fc = f(&c);
                (c, fc)
            };
            if fc < vals[n].min(fr) {
                pts[n] = contracted;
                vals[n] = fc;
            } else {
                for i in 1..=n {
                    pts[i] = (0..n).map(|j| pts[0][j] + 0.5 * (pts[i][j] - pts[0][j])).collect();
                    vals[i] = f(&pts[i]);
                }
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).expect("non-empty simplex");
    Simplex { best: pts[best].clone(), value: vals[best], converged }
}

/// Least-squares fit of the monotone 4-parameter logistic.
pub fn fit_logistic4(pred: &[f64], mos: &[f64]) -> Result<LogisticFit, StatsError> {
    check_pair(pred, mos, 5)?;
    let pred_sd = sample_std(pred);
    if pred_sd == 0.0 {
        return Err(StatsError::Constant);
    }
    let hi = mos.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = mos.iter().copied().fold(f64::INFINITY, f64::min);
    let init = Logistic4Params { beta1: hi, beta2: lo, beta3: median(pred), beta4: pred_sd / 4.0 };
    let initial_sse = sse(&init, pred, mos);
    if hi == lo {
        return Ok(LogisticFit { params: init, sse: initial_sse, initial_sse, converged: true, degenerate: true });
    }

    let f = |v: &[f64]| sse(&Logistic4Params::from_slice(v), pred, mos);
    let span = hi - lo;
    let scale = [0.1 * span, 0.1 * span, 0.5 * pred_sd, 0.5 * init.beta4];
    let mut starts = vec![init.to_vec()];
    let p_min = pred.iter().copied().fold(f64::INFINITY, f64::min);
    let p_max = pred.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for (k, (b3, b4_mult)) in [(0.25, 1.0), (0.75, 1.0), (0.5, 0.25), (0.5, 4.0)].iter().enumerate().take(RESTARTS - 1) {
        let mut s = init;
        s.beta3 = p_min + b3 * (p_max - p_min);
        s.beta4 = init.beta4 * b4_mult;
        if k % 2 == 1 {
            std::mem::swap(&mut s.beta1, &mut s.beta2);
        }
        starts.push(s.to_vec());
    }

    let mut best = Simplex { best: init.to_vec(), value: initial_sse, converged: false };
    for s in &starts {
        let run = nelder_mead(&f, s, &scale, MAX_ITERATIONS);
        if run.value < best.value {
            best = run;
        }
    }
    let polish = nelder_mead(&f, &best.best, &scale.map(|v| v * 0.01), MAX_ITERATIONS);
    if polish.value <= best.value {
        best = Simplex { converged: polish.converged || best.converged, ..polish };
    }

    let mut params = Logistic4Params::from_slice(&best.best);
    params.beta4 = params.beta4.abs();
    Ok(LogisticFit { params, sse: best.value, initial_sse, converged: best.converged, degenerate: false })
}
