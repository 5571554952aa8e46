use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::{check_pair, fractional_ranks, StatsError};

/// Largest sample size handled by exact enumeration.
pub const EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Pairs left after dropping zero differences.
    pub n: usize,
    pub w_plus: f64,
    pub p_value: f64,
    pub method: WilcoxonMethod,
}

/// Two-sided paired signed-rank test, exact up to [`EXACT_MAX_N`] non-zero pairs.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult, StatsError> {
    wilcoxon_signed_rank_with(a, b, None)
}

pub fn wilcoxon_signed_rank_with(a: &[f64], b: &[f64], method: Option<WilcoxonMethod>) -> Result<WilcoxonResult, StatsError> {
    check_pair(a, b, 0)?;
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = d.len();
    let method = method.unwrap_or(if n <= EXACT_MAX_N { WilcoxonMethod::Exact } else { WilcoxonMethod::Normal });
    if n == 0 {
        return Ok(WilcoxonResult { n, w_plus: 0.0, p_value: 1.0, method });
    }
    let magnitudes: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let (ranks, _) = fractional_ranks(&magnitudes);
    let w_plus: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let p_value = match method {
        WilcoxonMethod::Exact => exact_p(&ranks, w_plus),
        WilcoxonMethod::Normal => normal_p(&ranks, w_plus),
    };
    Ok(WilcoxonResult { n, w_plus, p_value, method })
}

/// Enumerates the sign-flip null distribution over doubled (integer) ranks.
fn exact_p(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0.0_f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] > 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let all = 2f64.powi(ranks.len() as i32);
    let w = (2.0 * w_plus).round() as usize;
    let lower: f64 = counts[..=w].iter().sum::<f64>() / all;
    let upper: f64 = counts[w..].iter().sum::<f64>() / all;
    (2.0 * lower.min(upper)).min(1.0)
}

fn normal_p(ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    let dev = (w_plus - mean).abs() - 0.5;
    if dev <= 0.0 || var <= 0.0 {
        return 1.0;
    }
    let z = dev / var.sqrt();
    erfc(z / std::f64::consts::SQRT_2).min(1.0)
}
