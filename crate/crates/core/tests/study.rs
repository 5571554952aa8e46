//! Statistics of full simulated studies under the default rater model.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rand::Rng;
use vqcsim::aggregate::{
    compute_mos, facet_labels, golden_validation, sample_size_curve, split_half, stratified_analysis, Facet, StratumPair,
};
use vqcsim::model::{AgeGroup, RatingRecord};
use vqcsim::predictor::{eval_cv5, eval_unaware, load_predictor, EvalConfig, PredictorInput, PredictorKind};
use vqcsim::rng::{domain, stream};
use vqcsim::screening::{screen, ScreeningConfig, ScreeningReport};
use vqcsim::study::{run_study, StudyOutput, StudySpec};
use vqcsim::Execution;

const SEED: u64 = 7;

struct Default {
    out: StudyOutput,
    report: ScreeningReport,
    mos: BTreeMap<String, f64>,
}

fn default_study() -> &'static Default {
    static RUN: OnceLock<Default> = OnceLock::new();
    RUN.get_or_init(|| {
        let out = run_study(&StudySpec::default(), SEED, Execution::Parallel).unwrap();
        let report = screen(&out.ratings(), &out.session_rows(), &ScreeningConfig::default()).unwrap();
        let mos = compute_mos(&report.surviving_ratings, &[]).as_map();
        Default { out, report, mos }
    })
}

fn either(pairs: &[StratumPair], a: &str, b: &str) -> Option<(f64, f64)> {
    pairs.iter().find_map(|p| match (p.a.as_str(), p.b.as_str()) {
        (x, y) if x == a && y == b => Some((p.srocc, p.mean_diff)),
        (x, y) if x == b && y == a => Some((p.srocc, -p.mean_diff)),
        _ => None,
    })
}

#[test]
fn per_video_spread_matches_crowd_level() {
    let d = default_study();
    let table = compute_mos(&d.report.surviving_ratings, &[]);
    let stds: Vec<f64> = table.videos.iter().filter(|v| v.n_ratings >= 2).map(|v| v.std).collect();
    let mean = stds.iter().sum::<f64>() / stds.len() as f64;
    assert!((mean - 18.0).abs() <= 2.0, "mean per-video std {mean}");
}

#[test]
fn nearly_all_subjects_repeat_themselves() {
    let c = &default_study().report.consistency;
    let fractions: Vec<f64> = c.values().filter_map(|c| c.fraction()).collect();
    let share = fractions.iter().filter(|&&f| f >= 0.5).count() as f64 / fractions.len() as f64;
    assert!(share >= 0.98, "{share} of {} subjects consistent", fractions.len());
}

#[test]
fn stalls_lower_the_score() {
    let table = compute_mos(&default_study().report.surviving_ratings, &[]);
    let dmos: Vec<f64> = table.videos.iter().filter_map(|v| v.dmos).collect();
    let share = dmos.iter().filter(|&&d| d > 0.0).count() as f64 / dmos.len() as f64;
    assert!(share >= 0.95, "{share}");
}

#[test]
fn halves_of_the_crowd_agree() {
    let rho = split_half(&default_study().report.surviving_ratings, 100, SEED, Execution::Parallel).unwrap();
    assert!(rho >= 0.97, "{rho}");
}

#[test]
fn golden_ranking_survives_default_noise() {
    let d = default_study();
    let g = golden_validation(&d.report.surviving_ratings, &d.out.catalog.golden_ground_truth()).unwrap();
    assert!(g.srocc >= 0.97, "{}", g.srocc);
}

#[test]
fn two_hundred_raters_are_enough() {
    let d = default_study();
    let mut common: Vec<String> = d.report.surviving_ratings.iter().filter(|r| r.is_common).map(|r| r.video_id.clone()).collect();
    common.sort();
    common.dedup();
    assert!(!common.is_empty());
    for curve in sample_size_curve(&d.report.surviving_ratings, &common, 2000, 200, SEED) {
        assert!(curve.available >= 200, "{} has {}", curve.video_id, curve.available);
        let at = |n: usize| curve.points.iter().find(|p| p.n == n).unwrap();
        let last = curve.points.last().unwrap();
        assert_eq!(last.n, curve.available.min(2000));
        // 99% band for a 200-subset mean nested in the full set
        let band = 2.576 * last.std * (1.0 / 200.0 - 1.0 / last.n as f64).sqrt();
        let diff = (at(200).mos - last.mos).abs();
        assert!(diff < band, "{}: {diff} outside {band}", curve.video_id);
        assert!((at(200).std - last.std).abs() < 0.15 * last.std, "{}", curve.video_id);
    }
}

#[test]
fn display_pools_rank_shared_videos_alike() {
    let d = default_study();
    let labels = facet_labels(&d.out.session_rows(), Facet::ResolutionPool);
    let st = stratified_analysis(&d.report.surviving_ratings, &labels, 5, Execution::Parallel);
    let (rho, _) = either(&st.pairs, "high_res", "low_res").unwrap();
    assert!(rho >= 0.95, "{rho}");
}

#[test]
fn compliant_crowd_has_few_outliers() {
    let mut spec = StudySpec::default();
    spec.population.share_random_raters = 0.0;
    let out = run_study(&spec, SEED, Execution::Parallel).unwrap();
    let report = screen(&out.ratings(), &out.session_rows(), &ScreeningConfig::default()).unwrap();
    let screened = report.surviving_subjects().len() + report.removed_bt500.len();
    let rate = report.removed_bt500.len() as f64 / screened as f64;
    assert!(rate <= 0.01, "{rate}");
}

#[test]
fn age_offsets_separate_age_groups() {
    let mut spec = StudySpec::default();
    spec.population.n_subjects = 20_000;
    spec.population.age_mix = AgeGroup::ALL.iter().map(|&g| (g, 0.25)).collect();
    spec.population.age_offsets = vec![(AgeGroup::Under20, -4.0), (AgeGroup::Over40, 4.0)];
    let out = run_study(&spec, SEED, Execution::Parallel).unwrap();
    let report = screen(&out.ratings(), &out.session_rows(), &ScreeningConfig::default()).unwrap();
    let labels = facet_labels(&out.session_rows(), Facet::AgeGroup);
    let st = stratified_analysis(&report.surviving_ratings, &labels, 5, Execution::Parallel);

    let young = AgeGroup::Under20.to_string();
    let old = AgeGroup::Over40.to_string();
    let (_, diff) = either(&st.pairs, &young, &old).unwrap();
    assert!((diff + 8.0).abs() <= 1.0, "{diff}");
    for g in AgeGroup::ALL.iter().filter(|&&g| g != AgeGroup::Under20) {
        let (rho, d) = either(&st.pairs, &young, &g.to_string()).unwrap();
        assert!(d < 0.0, "{g}: {d}");
        assert!(rho >= 0.95, "{g}: {rho}");
    }
}

#[test]
fn unrelated_scores_do_not_correlate() {
    let d = default_study();
    let mut rng = stream(SEED, domain::TEST, 1);
    let values = d.mos.keys().map(|id| (id.clone(), vec![rng.random::<f64>()])).collect();
    let input = PredictorInput { name: "null".into(), kind: PredictorKind::OpinionUnawareScores, dim: 1, values };
    let r = eval_unaware(&input, &d.mos, false, &EvalConfig::default()).unwrap();
    assert!(r.srocc.abs() <= 0.1, "{}", r.srocc);
}

#[test]
fn cross_validation_on_simulated_mos() {
    let d = default_study();
    let oracle = PredictorInput {
        name: "oracle".into(),
        kind: PredictorKind::TrainableFeatures,
        dim: 1,
        values: d.mos.iter().map(|(id, &m)| (id.clone(), vec![m])).collect(),
    };
    let cfg = EvalConfig::default();
    let o = eval_cv5(&oracle, &d.mos, &cfg, SEED, Execution::Parallel).unwrap();
    assert!(o.srocc >= 0.99, "{}", o.srocc);

    let draws = 10;
    let null: f64 = (0..draws)
        .map(|k| {
            let mut rng = stream(SEED, domain::TEST, 10 + k);
            let noise = PredictorInput {
                name: "noise".into(),
                kind: PredictorKind::TrainableFeatures,
                dim: 3,
                values: d.mos.keys().map(|id| (id.clone(), (0..3).map(|_| rng.random::<f64>()).collect())).collect(),
            };
            eval_cv5(&noise, &d.mos, &cfg, SEED + k, Execution::Parallel).unwrap().srocc
        })
        .sum::<f64>()
        / draws as f64;
    assert!(null.abs() <= 0.1, "{null}");
}

#[test]
fn partial_score_file_reports_missing_ids() {
    let ids: Vec<String> = default_study().out.catalog.assets().iter().map(|a| a.id.clone()).take(585).collect();
    assert_eq!(ids.len(), 585);
    let mut csv = String::from("video_id,score\n");
    for (i, id) in ids.iter().enumerate().skip(3) {
        csv.push_str(&format!("{id},{i}\n"));
    }
    let loaded = load_predictor("partial", csv.as_bytes(), Some(&ids)).unwrap();
    assert_eq!(loaded.input.coverage().len(), 582);
    assert_eq!(loaded.missing, ids[..3]);
}

#[test]
fn execution_mode_does_not_change_results() {
    let mut spec = StudySpec::default();
    spec.population.n_subjects = 400;
    let run = |mode| {
        let out = run_study(&spec, SEED, mode).unwrap();
        let ratings: Vec<RatingRecord> = out.ratings();
        let report = screen(&ratings, &out.session_rows(), &ScreeningConfig::default()).unwrap();
        let rho = split_half(&report.surviving_ratings, 10, SEED, mode).unwrap();
        (ratings, report.ledger, rho)
    };
    assert_eq!(run(Execution::Sequential), run(Execution::Parallel));
}
