use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use vqcsim::aggregate::{
    compute_mos, facet_labels, golden_validation, sample_size_curve, split_half, stratified_analysis, write_mos, Facet, GoldenValidation,
    SampleCurve, Stratified,
};
use vqcsim::io::{read_catalog, read_ratings, read_rows, read_sessions, write_catalog, write_ratings, write_sessions};
use vqcsim::model::RatingRecord;
use vqcsim::predictor::{eval_cv5, eval_median100, eval_unaware, load_predictor, write_report, EvalReport, PredictorKind};
use vqcsim::screening::{screen, write_ledger, Stage};
use vqcsim::study::run_study;
use vqcsim::Execution;

use crate::config::Config;
use crate::manifest::{OutDir, RunManifest};

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn load_ratings(path: &Path) -> Result<Vec<RatingRecord>> {
    read_ratings(open(path)?).with_context(|| format!("reading ratings from {}", path.display()))
}

fn load_sessions(path: &Path) -> Result<Vec<vqcsim::io::SessionRow>> {
    read_sessions(open(path)?).with_context(|| format!("reading sessions from {}", path.display()))
}

pub struct SimulateArgs {
    pub out: PathBuf,
    pub subjects: Option<usize>,
}

pub fn simulate(cfg: &Config, seed: u64, mode: Execution, args: &SimulateArgs) -> Result<()> {
    let mut spec = cfg.study_spec();
    if let Some(n) = args.subjects {
        spec.population.n_subjects = n;
    }
    spec.validate()?;
    let output = run_study(&spec, seed, mode)?;
    let ratings = output.ratings();
    let sessions = output.session_rows();

    let mut out = OutDir::create(&args.out)?;
    out.write("catalog.csv", |b| Ok(write_catalog(b, &output.catalog)?))?;
    out.write("ratings.csv", |b| Ok(write_ratings(b, &ratings)?))?;
    out.write("sessions.csv", |b| Ok(write_sessions(b, &sessions)?))?;
    out.finish(RunManifest::new("simulate", Some(seed), &spec)?)?;

    let mut by_end: BTreeMap<&str, usize> = BTreeMap::new();
    for s in &sessions {
        *by_end.entry(s.termination.as_str()).or_default() += 1;
    }
    let ends: Vec<String> = by_end.iter().map(|(k, v)| format!("{k} {v}")).collect();
    println!("{} sessions, {} ratings ({})", sessions.len(), ratings.len(), ends.join(", "));
    Ok(())
}

pub struct ScreenArgs {
    pub ratings: PathBuf,
    pub sessions: PathBuf,
    pub out: PathBuf,
}

#[derive(Serialize)]
struct ScreenSummary {
    subjects_in: usize,
    subjects_surviving: usize,
    removed: BTreeMap<String, usize>,
    unscreenable: usize,
    consistency_threshold: f64,
    /// Share of subjects with repeat pairs that agree on at least half of them.
    consistent_on_half: Option<f64>,
    ratings_surviving: usize,
}

pub fn screen_cmd(cfg: &Config, args: &ScreenArgs) -> Result<()> {
    let ratings = load_ratings(&args.ratings)?;
    let sessions = load_sessions(&args.sessions)?;
    let report = screen(&ratings, &sessions, &cfg.screening)?;

    let mut removed: BTreeMap<String, usize> = BTreeMap::new();
    for e in &report.ledger {
        *removed.entry(e.stage.to_string()).or_default() += 1;
    }
    let with_pairs: Vec<f64> = report.consistency.values().filter_map(|c| c.fraction()).collect();
    let subjects_in: BTreeSet<&str> =
        ratings.iter().map(|r| r.subject_id.as_str()).chain(sessions.iter().map(|s| s.subject_id.as_str())).collect();
    let summary = ScreenSummary {
        subjects_in: subjects_in.len(),
        subjects_surviving: report.surviving_subjects().len(),
        removed,
        unscreenable: report.unscreenable.len(),
        consistency_threshold: report.consistency_threshold,
        consistent_on_half: (!with_pairs.is_empty())
            .then(|| with_pairs.iter().filter(|&&f| f >= 0.5).count() as f64 / with_pairs.len() as f64),
        ratings_surviving: report.surviving_ratings.len(),
    };

    let mut out = OutDir::create(&args.out)?;
    out.write("ledger.csv", |b| Ok(write_ledger(b, &report.ledger)?))?;
    out.write("surviving.csv", |b| Ok(write_ratings(b, &report.surviving_ratings)?))?;
    out.write_json("screening.json", &summary)?;
    let mut manifest = RunManifest::new("screen", None, &cfg.screening)?;
    manifest.add_input(&args.ratings)?;
    manifest.add_input(&args.sessions)?;
    out.finish(manifest)?;

    let bt500 = report.ledger.iter().filter(|e| e.stage == Stage::Bt500).count();
    println!(
        "{} of {} subjects kept; {} removed ({} by bt500)",
        summary.subjects_surviving,
        summary.subjects_in,
        report.ledger.len(),
        bt500
    );
    Ok(())
}

pub struct AggregateArgs {
    pub ratings: PathBuf,
    pub sessions: PathBuf,
    pub catalog: PathBuf,
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Validation {
    split_half_mean_srocc: f64,
    split_half_reps: usize,
    golden: Option<GoldenValidation>,
    golden_error: Option<String>,
    rated_videos: usize,
    unrated_videos: Vec<String>,
    dmos_positive_share: Option<f64>,
    stratified: BTreeMap<String, Stratified>,
    sample_size: Vec<SampleCurve>,
}

pub fn aggregate(cfg: &Config, seed: u64, mode: Execution, args: &AggregateArgs) -> Result<()> {
    let ratings = load_ratings(&args.ratings)?;
    if ratings.is_empty() {
        bail!("{} holds no ratings; nothing survived screening", args.ratings.display());
    }
    let sessions = load_sessions(&args.sessions)?;
    let catalog = read_catalog(open(&args.catalog)?).with_context(|| format!("reading catalog from {}", args.catalog.display()))?;
    let known: Vec<String> = catalog.assets().iter().map(|a| a.id.clone()).collect();

    let opts = &cfg.aggregate;
    let mos = compute_mos(&ratings, &known);
    let split = split_half(&ratings, opts.split_half_reps, seed, mode)?;
    let (golden, golden_error) = match golden_validation(&ratings, &catalog.golden_ground_truth()) {
        Ok(g) => (Some(g), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let dmos: Vec<f64> = mos.videos.iter().filter_map(|v| v.dmos).collect();
    let stratified = Facet::ALL
        .iter()
        .map(|&f| (f.to_string(), stratified_analysis(&ratings, &facet_labels(&sessions, f), opts.min_stratum_ratings, mode)))
        .collect();
    let common: BTreeSet<String> = ratings.iter().filter(|r| r.is_common).map(|r| r.video_id.clone()).collect();
    let common: Vec<String> = common.into_iter().collect();

    let validation = Validation {
        split_half_mean_srocc: split,
        split_half_reps: opts.split_half_reps,
        golden_error,
        rated_videos: mos.videos.len(),
        unrated_videos: mos.unrated.clone(),
        dmos_positive_share: (!dmos.is_empty()).then(|| dmos.iter().filter(|&&d| d > 0.0).count() as f64 / dmos.len() as f64),
        stratified,
        sample_size: sample_size_curve(&ratings, &common, opts.curve_max_n, opts.curve_step, seed),
        golden,
    };

    let mut out = OutDir::create(&args.out)?;
    out.write("mos.csv", |b| Ok(write_mos(b, &mos)?))?;
    out.write_json("validation.json", &validation)?;
    let mut manifest = RunManifest::new("aggregate", Some(seed), &cfg.aggregate)?;
    for p in [&args.ratings, &args.sessions, &args.catalog] {
        manifest.add_input(p)?;
    }
    out.finish(manifest)?;
    println!("{} videos rated; split-half SROCC {:.3}", mos.videos.len(), split);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ProtocolArg {
    Cv5,
    Median100,
}

pub struct EvaluateArgs {
    pub mos: PathBuf,
    pub predictors: Vec<String>,
    pub protocol: ProtocolArg,
    pub distance: Vec<String>,
    pub out: PathBuf,
}

#[derive(Deserialize)]
struct MosRow {
    video_id: String,
    mos: f64,
}

#[derive(Serialize)]
struct ErrorRow<'a> {
    name: &'a str,
    error: String,
}

/// `name=path`, or a bare path named after its file stem.
fn predictor_source(arg: &str) -> (String, PathBuf) {
    match arg.split_once('=') {
        Some((name, path)) if !name.is_empty() => (name.to_string(), PathBuf::from(path)),
        _ => {
            let path = PathBuf::from(arg);
            let name = path.file_stem().map_or_else(|| arg.to_string(), |s| s.to_string_lossy().into_owned());
            (name, path)
        }
    }
}

pub fn evaluate(cfg: &Config, seed: u64, mode: Execution, args: &EvaluateArgs) -> Result<()> {
    if args.predictors.is_empty() {
        bail!("at least one predictor file is required");
    }
    let rows: Vec<MosRow> = read_rows(open(&args.mos)?, &["video_id", "mos"]).with_context(|| format!("reading {}", args.mos.display()))?;
    let mos: BTreeMap<String, f64> = rows.into_iter().map(|r| (r.video_id, r.mos)).collect();

    let sources: Vec<(String, PathBuf)> = args.predictors.iter().map(|a| predictor_source(a)).collect();
    for d in &args.distance {
        if !sources.iter().any(|(n, _)| n == d) {
            bail!("--distance names `{d}`, which is not among the predictors");
        }
    }

    let mut reports: Vec<EvalReport> = Vec::new();
    let mut errors = Vec::new();
    for (name, path) in &sources {
        let result = (|| -> Result<EvalReport> {
            let loaded = load_predictor(name, open(path)?, None)?;
            let report = match (loaded.input.kind, args.protocol) {
                (PredictorKind::OpinionUnawareScores, _) => {
                    eval_unaware(&loaded.input, &mos, args.distance.contains(name), &cfg.evaluation)?
                }
                (PredictorKind::TrainableFeatures, ProtocolArg::Cv5) => eval_cv5(&loaded.input, &mos, &cfg.evaluation, seed, mode)?,
                (PredictorKind::TrainableFeatures, ProtocolArg::Median100) => {
                    eval_median100(&loaded.input, &mos, &cfg.evaluation, seed, mode)?
                }
            };
            Ok(report)
        })();
        match result {
            Ok(r) => reports.push(r),
            Err(e) => {
                eprintln!("warning: predictor `{name}` skipped: {e:#}");
                errors.push(ErrorRow { name, error: format!("{e:#}") });
            }
        }
    }
    if reports.is_empty() {
        bail!("no predictor could be evaluated");
    }

    let mut out = OutDir::create(&args.out)?;
    out.write("report.csv", |b| Ok(write_report(b, &reports)?))?;
    out.write_json("report.json", &reports)?;
    if !errors.is_empty() {
        out.write("errors.csv", |b| {
            let mut w = csv::Writer::from_writer(b);
            for e in &errors {
                w.serialize(e)?;
            }
            w.flush()?;
            Ok(())
        })?;
    }
    let mut manifest = RunManifest::new("evaluate", Some(seed), &cfg.evaluation)?;
    manifest.add_input(&args.mos)?;
    for (_, path) in &sources {
        if path.exists() {
            manifest.add_input(path)?;
        }
    }
    out.finish(manifest)?;
    for r in &reports {
        println!("{} [{}] plcc {:.3} srocc {:.3} rmse {:.2} n {}", r.name, r.protocol, r.plcc, r.srocc, r.rmse, r.n_videos_used);
    }
    Ok(())
}
