//! Benchmark harness for external quality predictors.
//!
//! A predictor arrives as a CSV keyed by `video_id`: a single `score` column
//! for opinion-unaware models, or feature columns for trainable ones.
//! Trainable predictors go through an RBF kernel ridge regressor whose
//! scaling and hyperparameters are fitted on training rows only.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::DataError;
use crate::exec::{map_range, Execution};
use crate::io::write_rows;
use crate::model::text_enum;
use crate::rng::{domain, stream};
use crate::stats::{
    fit_logistic4, grid_search, kfold_split, median, metric_triple, GridSearch, KernelModel, MetricTriple, MinMaxScaler, StatsError,
};

#[derive(Debug, Error)]
pub enum PredictorError {
    #[error("predictor file has no rows")]
    Empty,
    #[error("bad header: {0}")]
    Header(String),
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("video `{0}` appears twice with different values")]
    Conflict(String),
    #[error("{protocol} needs a {expected} predictor")]
    WrongKind { protocol: Protocol, expected: PredictorKind },
    #[error("only {got} videos overlap with the MOS table; need {needed}")]
    Overlap { needed: usize, got: usize },
    #[error("degenerate predictor: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorKind {
    OpinionUnawareScores,
    TrainableFeatures,
}

text_enum!(PredictorKind { OpinionUnawareScores => "opinion_unaware_scores", TrainableFeatures => "trainable_features" });

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Protocol {
    #[serde(rename = "direct")]
    Direct,
    #[serde(rename = "cv5_aggregate")]
    Cv5Aggregate,
    #[serde(rename = "split80_20_median100")]
    Median100,
}

text_enum!(Protocol { Direct => "direct", Cv5Aggregate => "cv5_aggregate", Median100 => "split80_20_median100" });

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorInput {
    pub name: String,
    pub kind: PredictorKind,
    pub dim: usize,
    pub values: BTreeMap<String, Vec<f64>>,
}

impl PredictorInput {
    pub fn coverage(&self) -> BTreeSet<&str> {
        self.values.keys().map(String::as_str).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedPredictor {
    pub input: PredictorInput,
    /// Catalog videos the file does not cover.
    pub missing: Vec<String>,
    /// Ids in the file that are not in the catalog; dropped.
    pub unknown: Vec<String>,
}

/// Parses a predictor CSV. With `catalog_ids`, coverage is restricted to
/// the catalog and gaps are reported.
pub fn load_predictor<R: Read>(name: &str, reader: R, catalog_ids: Option<&[String]>) -> Result<LoadedPredictor, PredictorError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some("video_id") {
        return Err(PredictorError::Header("first column must be `video_id`".into()));
    }
    if headers.len() < 2 {
        return Err(PredictorError::Header("no score or feature columns".into()));
    }
    let kind =
        if headers.len() == 2 && &headers[1] == "score" { PredictorKind::OpinionUnawareScores } else { PredictorKind::TrainableFeatures };
    let dim = headers.len() - 1;

    let mut values: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| PredictorError::Parse { row, message: e.to_string() })?;
        let id = rec[0].trim().to_string();
        if id.is_empty() {
            return Err(PredictorError::Parse { row, message: "empty video_id".into() });
        }
        let v = rec
            .iter()
            .skip(1)
            .map(|cell| match cell.trim().parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(PredictorError::Parse { row, message: format!("`{cell}` is not a finite number") }),
            })
            .collect::<Result<Vec<f64>, _>>()?;
        match values.get(&id) {
            Some(prev) if *prev != v => return Err(PredictorError::Conflict(id)),
            Some(_) => {}
            None => {
                values.insert(id, v);
            }
        }
    }
    if values.is_empty() {
        return Err(PredictorError::Empty);
    }

    let (missing, unknown) = match catalog_ids {
        Some(ids) => {
            let known: BTreeSet<&str> = ids.iter().map(String::as_str).collect();
            let unknown: Vec<String> = values.keys().filter(|k| !known.contains(k.as_str())).cloned().collect();
            values.retain(|k, _| known.contains(k.as_str()));
            let mut missing: Vec<String> = ids.iter().filter(|id| !values.contains_key(*id)).cloned().collect();
            missing.sort();
            (missing, unknown)
        }
        None => (Vec::new(), Vec::new()),
    };
    Ok(LoadedPredictor { input: PredictorInput { name: name.to_string(), kind, dim, values }, missing, unknown })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub folds: usize,
    pub reps: usize,
    pub test_fraction: f64,
    pub grid: GridSearch,
    pub min_overlap_unaware: usize,
    pub min_overlap_trainable: usize,
    /// Permute test targets within each split; a leak-free protocol then
    /// scores near zero correlation.
    pub shuffle_test_targets: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            folds: 5,
            reps: 100,
            test_fraction: 0.2,
            grid: GridSearch::default(),
            min_overlap_unaware: 20,
            min_overlap_trainable: 50,
            shuffle_test_targets: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub name: String,
    pub protocol: Protocol,
    pub plcc: f64,
    pub srocc: f64,
    pub rmse: f64,
    pub n_videos_used: usize,
}

impl EvalReport {
    fn new(name: &str, protocol: Protocol, m: MetricTriple, n: usize) -> Self {
        EvalReport { name: name.to_string(), protocol, plcc: m.plcc, srocc: m.srocc, rmse: m.rmse, n_videos_used: n }
    }

    pub fn metrics(&self) -> MetricTriple {
        MetricTriple { plcc: self.plcc, srocc: self.srocc, rmse: self.rmse }
    }
}

pub fn write_report<W: Write>(writer: W, reports: &[EvalReport]) -> Result<(), DataError> {
    write_rows(writer, &["name", "protocol", "plcc", "srocc", "rmse", "n_videos_used"], reports)
}

/// Rows and targets for videos present in both inputs, in id order.
fn join(pred: &PredictorInput, mos: &BTreeMap<String, f64>) -> (Vec<Vec<f64>>, Vec<f64>) {
    pred.values.iter().filter_map(|(id, v)| mos.get(id).map(|m| (v.clone(), *m))).unzip()
}

fn check(pred: &PredictorInput, protocol: Protocol, expected: PredictorKind, n: usize, needed: usize) -> Result<(), PredictorError> {
    if pred.kind != expected {
        return Err(PredictorError::WrongKind { protocol, expected });
    }
    if n < needed {
        return Err(PredictorError::Overlap { needed, got: n });
    }
    Ok(())
}

fn degenerate(e: StatsError) -> PredictorError {
    match e {
        StatsError::Constant => PredictorError::Degenerate("predictions are constant".into()),
        other => PredictorError::Stats(other),
    }
}

/// Training-free scores; `distance` negates scores that grow with distortion.
pub fn eval_unaware(
    pred: &PredictorInput,
    mos: &BTreeMap<String, f64>,
    distance: bool,
    cfg: &EvalConfig,
) -> Result<EvalReport, PredictorError> {
    let (rows, targets) = join(pred, mos);
    check(pred, Protocol::Direct, PredictorKind::OpinionUnawareScores, rows.len(), cfg.min_overlap_unaware)?;
    let sign = if distance { -1.0 } else { 1.0 };
    let x: Vec<f64> = rows.iter().map(|r| sign * r[0]).collect();
    let fit = fit_logistic4(&x, &targets).map_err(degenerate)?;
    let m = metric_triple(&x, &fit.params.apply(&x), &targets).map_err(degenerate)?;
    Ok(EvalReport::new(&pred.name, Protocol::Direct, m, rows.len()))
}

fn pick<T: Clone>(v: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| v[i].clone()).collect()
}

struct Trained {
    scaler: MinMaxScaler,
    model: KernelModel,
}

impl Trained {
    fn fit(rows: &[Vec<f64>], targets: &[f64], grid: &GridSearch, seed: u64, index: u64) -> Result<Self, PredictorError> {
        if rows.len() < 2 {
            return Err(StatsError::TooFewPoints { needed: 2, got: rows.len() }.into());
        }
        let scaler = MinMaxScaler::fit(rows);
        if scaler.constant_columns() == rows[0].len() {
            return Err(PredictorError::Degenerate("every feature is constant on the training rows".into()));
        }
        let scaled = scaler.transform(rows);
        let (params, _) = grid_search(&scaled, targets, grid, &mut stream(seed, domain::EVALUATION, index))?;
        let model = KernelModel::fit(&scaled, targets, params)?;
        Ok(Trained { scaler, model })
    }

    fn predict(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        self.model.predict(&self.scaler.transform(rows))
    }
}

/// Held-out predictions from k folds, concatenated and scored once.
/// Returns the report and the per-video held-out predictions in id order.
pub fn eval_cv5_predictions(
    pred: &PredictorInput,
    mos: &BTreeMap<String, f64>,
    cfg: &EvalConfig,
    seed: u64,
    mode: Execution,
) -> Result<(EvalReport, Vec<f64>), PredictorError> {
    let (rows, targets) = join(pred, mos);
    check(pred, Protocol::Cv5Aggregate, PredictorKind::TrainableFeatures, rows.len(), cfg.min_overlap_trainable)?;
    let folds = kfold_split(rows.len(), cfg.folds, &mut stream(seed, domain::EVALUATION, 0))?;
    let per_fold = map_range(folds.len(), mode, |f| {
        let held = &folds[f];
        let train: Vec<usize> = (0..rows.len()).filter(|i| held.binary_search(i).is_err()).collect();
        let t = Trained::fit(&pick(&rows, &train), &pick(&targets, &train), &cfg.grid, seed, 1 + f as u64)?;
        Ok::<_, PredictorError>(t.predict(&pick(&rows, held)))
    });
    let mut predictions = vec![f64::NAN; rows.len()];
    for (held, p) in folds.iter().zip(per_fold) {
        for (&i, v) in held.iter().zip(p?) {
            predictions[i] = v;
        }
    }
    let fit = fit_logistic4(&predictions, &targets).map_err(degenerate)?;
    let m = metric_triple(&predictions, &fit.params.apply(&predictions), &targets).map_err(degenerate)?;
    Ok((EvalReport::new(&pred.name, Protocol::Cv5Aggregate, m, rows.len()), predictions))
}

pub fn eval_cv5(
    pred: &PredictorInput,
    mos: &BTreeMap<String, f64>,
    cfg: &EvalConfig,
    seed: u64,
    mode: Execution,
) -> Result<EvalReport, PredictorError> {
    eval_cv5_predictions(pred, mos, cfg, seed, mode).map(|(r, _)| r)
}

const MEDIAN_STREAM_OFFSET: u64 = 1_000;

/// Random train/test splits; the logistic map is fitted on training
/// predictions and applied to the test split. Medians are per metric.
pub fn eval_median100(
    pred: &PredictorInput,
    mos: &BTreeMap<String, f64>,
    cfg: &EvalConfig,
    seed: u64,
    mode: Execution,
) -> Result<EvalReport, PredictorError> {
    let (rows, targets) = join(pred, mos);
    check(pred, Protocol::Median100, PredictorKind::TrainableFeatures, rows.len(), cfg.min_overlap_trainable)?;
    let n_test = ((rows.len() as f64 * cfg.test_fraction).round() as usize).clamp(2, rows.len() - 2);
    let per_split = map_range(cfg.reps, mode, |s| {
        let index = MEDIAN_STREAM_OFFSET + 2 * s as u64;
        let mut rng = stream(seed, domain::EVALUATION, index);
        let mut idx: Vec<usize> = (0..rows.len()).collect();
        idx.shuffle(&mut rng);
        let (test, train) = idx.split_at(n_test);
        let mut test_targets = pick(&targets, test);
        if cfg.shuffle_test_targets {
            test_targets.shuffle(&mut rng);
        }
        let train_targets = pick(&targets, train);
        let t = Trained::fit(&pick(&rows, train), &train_targets, &cfg.grid, seed, index + 1)?;
        let fit = fit_logistic4(&t.predict(&pick(&rows, train)), &train_targets).map_err(degenerate)?;
        let test_pred = t.predict(&pick(&rows, test));
        metric_triple(&test_pred, &fit.params.apply(&test_pred), &test_targets).map_err(degenerate)
    });
    let splits = per_split.into_iter().collect::<Result<Vec<_>, _>>()?;
    if splits.is_empty() {
        return Err(StatsError::TooFewPoints { needed: 1, got: 0 }.into());
    }
    let col = |f: fn(&MetricTriple) -> f64| median(&splits.iter().map(f).collect::<Vec<_>>());
    let m = MetricTriple { plcc: col(|m| m.plcc), srocc: col(|m| m.srocc), rmse: col(|m| m.rmse) };
    Ok(EvalReport::new(&pred.name, Protocol::Median100, m, rows.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn mos_table(n: usize, seed: u64) -> BTreeMap<String, f64> {
        let mut r = stream(seed, domain::TEST, 0);
        (0..n).map(|i| (format!("V{i:04}"), r.random_range(10.0..90.0))).collect()
    }

    fn input(kind: PredictorKind, values: BTreeMap<String, Vec<f64>>) -> PredictorInput {
        let dim = values.values().next().map_or(1, Vec::len);
        PredictorInput { name: "p".into(), kind, dim, values }
    }

    fn quick() -> EvalConfig {
        EvalConfig {
            reps: 10,
            grid: GridSearch { gammas: vec![0.1, 1.0, 10.0], lambdas: vec![1e-3, 1e-1, 10.0], folds: 3 },
            ..Default::default()
        }
    }

    #[test]
    fn load_reports_coverage() {
        let ids: Vec<String> = (0..5).map(|i| format!("V{i}")).collect();
        let csv = "video_id,score\nV0,1.5\nV1,2\nV1,2\nV3,4\nX9,0\n";
        let p = load_predictor("niqe", csv.as_bytes(), Some(&ids)).unwrap();
        assert_eq!(p.input.kind, PredictorKind::OpinionUnawareScores);
        assert_eq!(p.input.coverage().len(), 3);
        assert_eq!(p.missing, vec!["V2", "V4"]);
        assert_eq!(p.unknown, vec!["X9"]);
    }

    #[test]
    fn load_detects_features_and_errors() {
        let header: Vec<String> = std::iter::once("video_id".to_string()).chain((1..=36).map(|k| format!("f{k}"))).collect();
        let row: Vec<String> = std::iter::once("V0".to_string()).chain((0..36).map(|k| k.to_string())).collect();
        let csv = format!("{}\n{}\n", header.join(","), row.join(","));
        let p = load_predictor("brisque", csv.as_bytes(), None).unwrap();
        assert_eq!((p.input.kind, p.input.dim), (PredictorKind::TrainableFeatures, 36));

        assert!(matches!(load_predictor("e", "video_id,score\n".as_bytes(), None), Err(PredictorError::Empty)));
        assert!(matches!(load_predictor("e", "".as_bytes(), None), Err(PredictorError::Header(_))));
        assert!(matches!(
            load_predictor("e", "video_id,score\nV0,1\nV1,abc\n".as_bytes(), None),
            Err(PredictorError::Parse { row: 3, .. })
        ));
        assert!(
            matches!(load_predictor("e", "video_id,score\nV0,1\nV0,2\n".as_bytes(), None), Err(PredictorError::Conflict(id)) if id == "V0")
        );
    }

    #[test]
    fn perfect_and_flipped_scores() {
        let mos = mos_table(60, 1);
        let exact = input(PredictorKind::OpinionUnawareScores, mos.iter().map(|(k, v)| (k.clone(), vec![*v])).collect());
        let r = eval_unaware(&exact, &mos, false, &EvalConfig::default()).unwrap();
        assert!((r.plcc - 1.0).abs() < 1e-6 && r.srocc == 1.0 && r.rmse < 1e-3, "{r:?}");
        let negated = input(PredictorKind::OpinionUnawareScores, mos.iter().map(|(k, v)| (k.clone(), vec![-v])).collect());
        let r = eval_unaware(&negated, &mos, true, &EvalConfig::default()).unwrap();
        assert!((r.plcc - 1.0).abs() < 1e-6 && r.srocc == 1.0 && r.rmse < 1e-3, "{r:?}");
        let few: BTreeMap<String, f64> = mos.iter().take(10).map(|(k, v)| (k.clone(), *v)).collect();
        assert!(matches!(eval_unaware(&exact, &few, false, &EvalConfig::default()), Err(PredictorError::Overlap { needed: 20, got: 10 })));
    }

    #[test]
    fn oracle_feature_under_both_protocols() {
        let mos = mos_table(120, 2);
        let oracle = input(PredictorKind::TrainableFeatures, mos.iter().map(|(k, v)| (k.clone(), vec![*v])).collect());
        let (cv, preds) = eval_cv5_predictions(&oracle, &mos, &quick(), 7, Execution::Sequential).unwrap();
        assert_eq!(preds.len(), 120);
        assert!(preds.iter().all(|p| p.is_finite()));
        assert!(cv.srocc >= 0.99, "{cv:?}");
        assert_eq!(cv, eval_cv5(&oracle, &mos, &quick(), 7, Execution::Parallel).unwrap());
        let med = eval_median100(&oracle, &mos, &quick(), 7, Execution::Sequential).unwrap();
        assert!(med.srocc >= 0.99, "{med:?}");
    }

    #[test]
    fn shuffled_test_targets_collapse() {
        let mos = mos_table(150, 3);
        let oracle = input(PredictorKind::TrainableFeatures, mos.iter().map(|(k, v)| (k.clone(), vec![*v])).collect());
        let cfg = EvalConfig { reps: 30, shuffle_test_targets: true, ..quick() };
        let med = eval_median100(&oracle, &mos, &cfg, 4, Execution::Parallel).unwrap();
        assert!(med.srocc.abs() <= 0.15, "{med:?}");
    }

    #[test]
    fn constant_feature_is_degenerate() {
        let mos = mos_table(60, 4);
        let flat = input(PredictorKind::TrainableFeatures, mos.keys().map(|k| (k.clone(), vec![3.0, 3.0])).collect());
        assert!(matches!(eval_median100(&flat, &mos, &quick(), 1, Execution::Sequential), Err(PredictorError::Degenerate(_))));
        assert!(matches!(eval_cv5(&flat, &mos, &quick(), 1, Execution::Sequential), Err(PredictorError::Degenerate(_))));
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let mos = mos_table(60, 5);
        let scores = input(PredictorKind::OpinionUnawareScores, mos.iter().map(|(k, v)| (k.clone(), vec![*v])).collect());
        assert!(matches!(eval_cv5(&scores, &mos, &quick(), 1, Execution::Sequential), Err(PredictorError::WrongKind { .. })));
    }

    #[test]
    fn report_csv_layout() {
        let r = EvalReport { name: "x".into(), protocol: Protocol::Median100, plcc: 0.5, srocc: 0.25, rmse: 10.0, n_videos_used: 553 };
        let mut buf = Vec::new();
        write_report(&mut buf, &[r]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "name,protocol,plcc,srocc,rmse,n_videos_used\nx,split80_20_median100,0.5,0.25,10.0,553\n"
        );
    }
}
