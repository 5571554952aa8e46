//! Numerical kernels used by screening, aggregation and predictor evaluation.

mod correlation;
mod kernel;
mod kfold;
mod logistic;
mod wilcoxon;

pub use correlation::{fractional_ranks, kurtosis_beta2, mean, median, metric_triple, plcc, rmse, sample_std, srocc, MetricTriple};
pub use kernel::{grid_search, GridSearch, KernelModel, KrrParams, MinMaxScaler, DEFAULT_GRID};
pub use kfold::kfold_split;
pub use logistic::{fit_logistic4, Logistic4Params, LogisticFit};
pub use wilcoxon::{wilcoxon_signed_rank, wilcoxon_signed_rank_with, WilcoxonMethod, WilcoxonResult};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("inputs have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("input has zero variance")]
    Constant,
    #[error("linear system is singular")]
    Singular,
    #[error("non-finite input")]
    NonFinite,
    #[error("{0}")]
    Invalid(String),
}

pub(crate) fn check_pair(x: &[f64], y: &[f64], needed: usize) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < needed {
        return Err(StatsError::TooFewPoints { needed, got: x.len() });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}
