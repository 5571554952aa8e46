//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use vqcsim::aggregate::{compute_mos, golden_validation, split_half};
use vqcsim::model::{generate_catalog, Behavior, CatalogSpec, RatingRecord};
use vqcsim::netsim::{simulate_playback, CpuModel};
use vqcsim::predictor::{eval_median100, EvalConfig, PredictorInput, PredictorKind};
use vqcsim::rng::{domain, stream};
use vqcsim::screening::{bt500_screen, screen, ScoreMatrix, ScreeningConfig, ScreeningReport};
use vqcsim::session::Termination;
use vqcsim::stats::{fit_logistic4, rmse, srocc, wilcoxon_signed_rank_with, Logistic4Params, WilcoxonMethod};
use vqcsim::study::{run_study, run_study_with_catalog, StudyOutput, StudySpec};
use vqcsim::subject::{spawn_population, CpuSpec, PopulationSpec};
use vqcsim::Execution;

const SEED: u64 = 7;

// Criterion 1.
const MIN_PLAYBACKS: usize = 100_000;
const ZERO_STALL_TARGET: f64 = 0.77;
const UNDER_1S_TARGET: f64 = 0.92;
const STALL_TOLERANCE: f64 = 0.03;
const STALL_BUDGET: Duration = Duration::from_secs(30);

// Criterion 2.
const MIN_SPLIT_HALF: f64 = 0.97;
const STD_TARGET: f64 = 18.0;
const STD_TOLERANCE: f64 = 2.0;
const MIN_RATERS_PER_VIDEO: usize = 200;
const SPLIT_HALF_REPS: usize = 100;
const SPLIT_HALF_BUDGET: Duration = Duration::from_secs(60);

// Criterion 3.
const BT500_MATRICES: usize = 50;

// Criterion 4.
const PLANTED_SHARE: f64 = 0.05;
const MIN_RECALL: f64 = 0.9;
const MAX_FALSE_REJECTION: f64 = 0.02;
const OUTLIER_RATE_TARGET: f64 = 0.005;
const OUTLIER_RATE_TOLERANCE: f64 = 0.005;

// Criterion 5.
const MIN_POSITIVE_DMOS: f64 = 0.95;

// Criterion 6.
const PROTOCOL_SESSIONS: usize = 10_000;

// Criterion 7.
const GOLDEN_SHIFT: f64 = 8.5;
const MAD_TOLERANCE: f64 = 0.01;

// Criterion 8.
const HARNESS_VIDEOS: usize = 585;
const MIN_ORACLE_SROCC: f64 = 0.99;
const MAX_NOISE_SROCC: f64 = 0.1;
const MAX_SHUFFLED_PLCC: f64 = 0.1;
const HARNESS_BUDGET: Duration = Duration::from_secs(120);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn share(hits: usize, total: usize) -> f64 {
    if total == 0 {
        f64::NAN
    } else {
        hits as f64 / total as f64
    }
}

struct DefaultRun {
    ratings: Vec<RatingRecord>,
    report: ScreeningReport,
    elapsed: Duration,
}

fn default_run() -> DefaultRun {
    let t = Instant::now();
    let out = run_study(&StudySpec::default(), SEED, Execution::Parallel).expect("default study");
    let ratings = out.ratings();
    let report = screen(&ratings, &out.session_rows(), &ScreeningConfig::default()).expect("screening");
    DefaultRun { ratings, report, elapsed: t.elapsed() }
}

fn stall_calibration() -> Outcome {
    let t = Instant::now();
    let spec = StudySpec::default();
    let catalog = generate_catalog(&spec.catalog, &mut stream(SEED, domain::CATALOG, 0)).expect("catalog");
    let subjects = spawn_population(&spec.population, &mut stream(SEED, domain::POPULATION, 0)).expect("population");
    let per_subject = MIN_PLAYBACKS.div_ceil(subjects.len());
    let mut rng = stream(SEED, domain::TEST, 2000);
    let stalls: Vec<u64> = subjects
        .iter()
        .flat_map(|s| (0..per_subject).map(move |k| (s, k)))
        .map(|(s, k)| {
            let asset = catalog.get(k % catalog.len());
            simulate_playback(asset, &s.cpu, s.background_load, spec.study.tick_ms, &mut rng).stall_total_ms
        })
        .collect();
    let zero = share(stalls.iter().filter(|&&s| s == 0).count(), stalls.len());
    let under = share(stalls.iter().filter(|&&s| s < 1000).count(), stalls.len());
    let elapsed = t.elapsed();
    let pass = stalls.len() >= MIN_PLAYBACKS
        && within(zero, ZERO_STALL_TARGET, STALL_TOLERANCE)
        && within(under, UNDER_1S_TARGET, STALL_TOLERANCE)
        && elapsed < STALL_BUDGET;
    outcome(
        pass,
        format!(
            "{} playbacks over {} subjects, no stall {zero:.3}, under 1 s {under:.3}, {:.1} s",
            stalls.len(),
            subjects.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn split_half_reliability(run: &DefaultRun) -> Outcome {
    let t = Instant::now();
    let mut raters: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for r in run.ratings.iter().filter(|r| !r.is_golden) {
        raters.entry(r.video_id.as_str()).or_default().insert(r.subject_id.as_str());
    }
    let mut counts: Vec<usize> = raters.values().map(BTreeSet::len).collect();
    counts.sort_unstable();
    let median_raters = counts[counts.len() / 2];

    let surviving = &run.report.surviving_ratings;
    let mos = compute_mos(surviving, &[]);
    let stds: Vec<f64> = mos.videos.iter().filter(|v| v.n_ratings >= 2).map(|v| v.std).collect();
    let mean_std = stds.iter().sum::<f64>() / stds.len() as f64;
    let rho = split_half(surviving, SPLIT_HALF_REPS, SEED, Execution::Parallel).expect("split half");
    let elapsed = run.elapsed + t.elapsed();
    let pass = rho >= MIN_SPLIT_HALF
        && within(mean_std, STD_TARGET, STD_TOLERANCE)
        && median_raters >= MIN_RATERS_PER_VIDEO
        && elapsed < SPLIT_HALF_BUDGET;
    outcome(
        pass,
        format!(
            "mean SROCC {rho:.4} over {SPLIT_HALF_REPS} reps, per-video std {mean_std:.2}, median raters/video {median_raters}, {:.1} s",
            elapsed.as_secs_f64()
        ),
    )
}

/// Annex 2 rejection rule over a dense subjects × videos matrix.
fn annex2_rejections(m: &[Vec<f64>]) -> Vec<bool> {
    let (subjects, videos) = (m.len(), m[0].len());
    let mut p = vec![0usize; subjects];
    let mut q = vec![0usize; subjects];
    for j in 0..videos {
        let col: Vec<f64> = m.iter().map(|row| row[j]).collect();
        let n = col.len() as f64;
        let u = col.iter().sum::<f64>() / n;
        let s = (col.iter().map(|x| (x - u).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        if s == 0.0 {
            continue;
        }
        let m2 = col.iter().map(|x| (x - u).powi(2)).sum::<f64>() / n;
        let m4 = col.iter().map(|x| (x - u).powi(4)).sum::<f64>() / n;
        let beta2 = m4 / (m2 * m2);
        let width = if (2.0..=4.0).contains(&beta2) { 2.0 * s } else { 20f64.sqrt() * s };
        for (i, &x) in col.iter().enumerate() {
            if x >= u + width {
                p[i] += 1;
            }
            if x <= u - width {
                q[i] += 1;
            }
        }
    }
    (0..subjects)
        .map(|i| {
            let pq = (p[i] + q[i]) as f64;
            pq > 0.0 && pq / videos as f64 > 0.05 && (p[i] as f64 - q[i] as f64).abs() / pq < 0.3
        })
        .collect()
}

fn random_matrix(index: u64) -> Vec<Vec<f64>> {
    let mut rng = stream(SEED, domain::TEST, index);
    let latent: Vec<f64> = (0..15).map(|_| rng.random_range(10.0..90.0)).collect();
    let noise_sd = rng.random_range(3.0..15.0);
    let adversaries = rng.random_range(0..4usize);
    (0..20)
        .map(|i| {
            let bias = Normal::new(0.0, 5.0).unwrap().sample(&mut rng);
            let noise = Normal::new(0.0, noise_sd).unwrap();
            latent
                .iter()
                .map(|&l| {
                    let x: f64 = if i < adversaries { rng.random_range(0.0..=100.0) } else { l + bias + noise.sample(&mut rng) };
                    x.round().clamp(0.0, 100.0)
                })
                .collect()
        })
        .collect()
}

fn bt500_equivalence() -> Outcome {
    let (mut mismatches, mut rejected) = (0, 0);
    for k in 0..BT500_MATRICES {
        let m = random_matrix(k as u64);
        let expected: BTreeSet<String> =
            annex2_rejections(&m).iter().enumerate().filter(|(_, &r)| r).map(|(i, _)| format!("S{i:02}")).collect();
        let matrix: ScoreMatrix = m
            .iter()
            .enumerate()
            .map(|(i, row)| (format!("S{i:02}"), row.iter().enumerate().map(|(j, &x)| (format!("V{j:02}"), x)).collect()))
            .collect();
        let got = bt500_screen(&matrix);
        mismatches += got.symmetric_difference(&expected).count();
        rejected += expected.len();
    }
    outcome(mismatches == 0, format!("{BT500_MATRICES} matrices, {rejected} oracle rejections, {mismatches} mismatches"))
}

/// Subjects removed by a rating-based stage, and subjects that reached those stages.
fn rating_stage_sets(report: &ScreeningReport) -> (BTreeSet<&str>, BTreeSet<&str>) {
    let removed: BTreeSet<&str> =
        report.removed_bt500.iter().chain(&report.removed_consensus).chain(&report.removed_inconsistent).map(String::as_str).collect();
    let reached: BTreeSet<&str> = removed.iter().copied().chain(report.surviving_subjects()).collect();
    (removed, reached)
}

fn rejection_rates(out: &StudyOutput, report: &ScreeningReport) -> ((usize, usize), (usize, usize)) {
    let (removed, reached) = rating_stage_sets(report);
    let (mut random, mut compliant) = ((0, 0), (0, 0));
    for s in out.subjects.iter().filter(|s| reached.contains(s.id.as_str())) {
        let slot = match s.behavior {
            Behavior::RandomRater => &mut random,
            Behavior::Compliant => &mut compliant,
            Behavior::Skipper => continue,
        };
        slot.0 += usize::from(removed.contains(s.id.as_str()));
        slot.1 += 1;
    }
    (random, compliant)
}

fn screening_power() -> Outcome {
    let mut spec = StudySpec::default();
    spec.population.share_random_raters = PLANTED_SHARE;
    let out = run_study(&spec, SEED, Execution::Parallel).expect("planted study");
    let report = screen(&out.ratings(), &out.session_rows(), &ScreeningConfig::default()).expect("screening");
    let ((caught, planted), (wrongly, compliant)) = rejection_rates(&out, &report);
    let recall = share(caught, planted);
    let false_rate = share(wrongly, compliant);

    let mut clean = StudySpec::default();
    clean.population.share_random_raters = 0.0;
    let out = run_study(&clean, SEED, Execution::Parallel).expect("clean study");
    let report = screen(&out.ratings(), &out.session_rows(), &ScreeningConfig::default()).expect("screening");
    let (_, (outliers, screened)) = rejection_rates(&out, &report);
    let outlier_rate = share(outliers, screened);

    let pass =
        recall >= MIN_RECALL && false_rate <= MAX_FALSE_REJECTION && within(outlier_rate, OUTLIER_RATE_TARGET, OUTLIER_RATE_TOLERANCE);
    outcome(
        pass,
        format!(
            "recall {caught}/{planted} = {recall:.3}, compliant false rejections {wrongly}/{compliant} = {:.2}%, no-adversary outliers {outliers}/{screened} = {:.2}%",
            100.0 * false_rate,
            100.0 * outlier_rate
        ),
    )
}

fn dmos_sign(run: &DefaultRun) -> Outcome {
    let mos = compute_mos(&run.report.surviving_ratings, &[]);
    let dmos: Vec<f64> = mos.videos.iter().filter_map(|v| v.dmos).collect();
    let positive = share(dmos.iter().filter(|&&d| d > 0.0).count(), dmos.len());
    outcome(positive >= MIN_POSITIVE_DMOS, format!("DMOS > 0 for {positive:.3} of {} videos with both kinds of rating", dmos.len()))
}

fn protocol_invariants() -> Outcome {
    let catalog = generate_catalog(&CatalogSpec::default(), &mut stream(SEED, domain::CATALOG, 0)).expect("catalog");
    let largest = catalog.assets().iter().map(|a| a.size_bits).max().expect("non-empty catalog") as f64;
    let mut population = PopulationSpec::ideal(PROTOCOL_SESSIONS + PROTOCOL_SESSIONS / 5);
    population.network.median_rate_bps = largest / 30.0;
    population.network.rate_log_sd = 0.0;
    let spec = StudySpec { population, ..StudySpec::default() };
    let out = run_study_with_catalog(&spec, catalog, SEED, Execution::Parallel).expect("protocol study");

    let completed: Vec<_> = out.sessions.iter().filter(|s| s.termination == Termination::Completed).collect();
    let mut bad_composition = 0;
    let mut bad_repeats = 0;
    let mut min_separation = u32::MAX;
    for s in &completed {
        let r = &s.ratings;
        let golden = r.iter().filter(|x| x.is_golden).count();
        let repeats = r.iter().filter(|x| x.is_repeat).count();
        let common = r.iter().filter(|x| x.is_common).count();
        let random = r.len() - golden - repeats - common;
        if (r.len(), golden, random, repeats, common) != (43, 4, 31, 4, 4) {
            bad_composition += 1;
        }
        for rep in r.iter().filter(|x| x.is_repeat) {
            match r.iter().filter(|x| !x.is_repeat && x.video_id == rep.video_id).map(|x| x.position).min() {
                Some(first) if first < rep.position => {
                    min_separation = min_separation.min(rep.position - first);
                    if rep.position - first < 8 {
                        bad_repeats += 1;
                    }
                }
                _ => bad_repeats += 1,
            }
        }
    }
    let unready: u32 = out.sessions.iter().map(|s| s.network_unready).sum();
    let pass = completed.len() >= PROTOCOL_SESSIONS && bad_composition == 0 && bad_repeats == 0 && unready == 0;
    outcome(
        pass,
        format!(
            "{} completed sessions, {bad_composition} with wrong composition, {bad_repeats} bad repeats (min separation {min_separation}), {unready} unready items",
            completed.len()
        ),
    )
}

fn golden_fidelity() -> Outcome {
    let mut population = PopulationSpec::ideal(300);
    population.effects.context_shift = GOLDEN_SHIFT;
    population.cpu = CpuSpec { mix: vec![(vqcsim::netsim::CpuClass::Fast, 1.0)], fast: CpuModel::never_stalls(), ..CpuSpec::default() };
    let spec = StudySpec { population, ..StudySpec::default() };
    let out = run_study(&spec, SEED, Execution::Parallel).expect("noiseless study");
    let g = golden_validation(&out.ratings(), &out.catalog.golden_ground_truth()).expect("golden validation");
    let pass = within(g.mad, GOLDEN_SHIFT, MAD_TOLERANCE) && g.srocc == 1.0;
    outcome(pass, format!("MAD {:.4}, SROCC {:.4} over {} subjects", g.mad, g.srocc, g.subjects))
}

fn harness_sanity() -> Outcome {
    let t = Instant::now();
    let mut rng = stream(SEED, domain::TEST, 1000);
    let ids: Vec<String> = (0..HARNESS_VIDEOS).map(|i| format!("V{i:04}")).collect();
    let mos: BTreeMap<String, f64> = ids.iter().map(|id| (id.clone(), rng.random_range(5.0..95.0))).collect();
    let features = |name: &str, f: &mut dyn FnMut(f64) -> Vec<f64>| {
        let values: BTreeMap<String, Vec<f64>> = mos.iter().map(|(id, &m)| (id.clone(), f(m))).collect();
        let dim = values.values().next().map_or(0, Vec::len);
        PredictorInput { name: name.to_string(), kind: PredictorKind::TrainableFeatures, dim, values }
    };
    let oracle = features("oracle", &mut |m| vec![m]);
    let mut noise_rng = stream(SEED, domain::TEST, 1001);
    let noise = features("noise", &mut |_| (0..4).map(|_| noise_rng.random::<f64>()).collect());

    let cfg = EvalConfig::default();
    let shuffled_cfg = EvalConfig { shuffle_test_targets: true, ..EvalConfig::default() };
    let o = eval_median100(&oracle, &mos, &cfg, SEED, Execution::Parallel).expect("oracle run");
    let n = eval_median100(&noise, &mos, &cfg, SEED, Execution::Parallel).expect("noise run");
    let s = eval_median100(&oracle, &mos, &shuffled_cfg, SEED, Execution::Parallel).expect("shuffled run");
    let elapsed = t.elapsed();
    let pass =
        o.srocc >= MIN_ORACLE_SROCC && n.srocc.abs() <= MAX_NOISE_SROCC && s.plcc.abs() < MAX_SHUFFLED_PLCC && elapsed < HARNESS_BUDGET;
    outcome(
        pass,
        format!(
            "oracle SROCC {:.4}, noise SROCC {:+.4}, shuffled PLCC {:+.4}, {HARNESS_VIDEOS} videos, {:.1} s",
            o.srocc,
            n.srocc,
            s.plcc,
            elapsed.as_secs_f64()
        ),
    )
}

fn numeric_kernels() -> Outcome {
    let rho = srocc(&[1.0, 2.0, 3.0, 4.0, 5.0], &[1.0, 3.0, 2.0, 5.0, 4.0]).expect("srocc");
    let err = rmse(&[0.0, 0.0], &[3.0, 4.0]).expect("rmse");
    let w = wilcoxon_signed_rank_with(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.0; 5], Some(WilcoxonMethod::Exact)).expect("wilcoxon");
    let planted = Logistic4Params { beta1: 90.0, beta2: 10.0, beta3: 50.0, beta4: 8.0 };
    let q: Vec<f64> = (0..=60).map(|i| f64::from(i) * 100.0 / 60.0).collect();
    let fit = fit_logistic4(&q, &planted.apply(&q)).expect("logistic fit").params;
    let param_err = [fit.beta1 - planted.beta1, fit.beta2 - planted.beta2, fit.beta3 - planted.beta3, fit.beta4.abs() - planted.beta4]
        .iter()
        .fold(0.0f64, |a, e| a.max(e.abs()));
    let pass = rho == 0.8 && (err - 12.5f64.sqrt()).abs() <= 1e-12 && w.p_value == 0.0625 && param_err <= 1e-3;
    outcome(
        pass,
        format!("srocc {rho}, rmse error {:.1e}, exact p {}, logistic max error {param_err:.1e}", (err - 12.5f64.sqrt()).abs(), w.p_value),
    )
}

fn vqcsim(args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_vqcsim")).args(args).env_remove("SOURCE_DATE_EPOCH").output().expect("spawn vqcsim");
    assert!(status.status.success(), "vqcsim {args:?} failed: {}", String::from_utf8_lossy(&status.stderr));
}

fn write_predictors(catalog: &Path, dir: &Path) {
    let text = std::fs::read_to_string(catalog).expect("catalog");
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().expect("header").split(',').collect();
    let id_col = header.iter().position(|h| *h == "video_id").expect("video_id column");
    let q_col = header.iter().position(|h| *h == "latent_quality").expect("latent_quality column");
    let mut scores = String::from("video_id,score\n");
    let mut feats = String::from("video_id,f1,f2\n");
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        let q: f64 = cells[q_col].parse().expect("quality");
        let wobble = ((i * 37) % 11) as f64;
        scores.push_str(&format!("{},{}\n", cells[id_col], q + wobble));
        feats.push_str(&format!("{},{},{}\n", cells[id_col], q.sqrt(), wobble));
    }
    std::fs::write(dir.join("scores.csv"), scores).expect("write scores");
    std::fs::write(dir.join("features.csv"), feats).expect("write features");
}

fn pipeline(root: &Path) -> Vec<Vec<u8>> {
    let p = |name: &str| root.join(name).to_string_lossy().into_owned();
    vqcsim(&["simulate", "--seed", "7", "--out", &p("sim")]);
    vqcsim(&["screen", "--ratings", &p("sim/ratings.csv"), "--sessions", &p("sim/sessions.csv"), "--out", &p("screen")]);
    vqcsim(&[
        "aggregate",
        "--seed",
        "7",
        "--ratings",
        &p("screen/surviving.csv"),
        "--sessions",
        &p("sim/sessions.csv"),
        "--catalog",
        &p("sim/catalog.csv"),
        "--out",
        &p("agg"),
    ]);
    write_predictors(&root.join("sim/catalog.csv"), root);
    vqcsim(&[
        "evaluate",
        "--seed",
        "7",
        "--mos",
        &p("agg/mos.csv"),
        "--predictor",
        &p("scores.csv"),
        "--predictor",
        &p("features.csv"),
        "--out",
        &p("eval"),
    ]);
    ["sim/manifest-simulate.json", "screen/manifest-screen.json", "agg/manifest-aggregate.json", "eval/manifest-evaluate.json"]
        .iter()
        .map(|m| std::fs::read(root.join(m)).expect("manifest"))
        .collect()
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().expect("tempdir");
    let b = tempfile::tempdir().expect("tempdir");
    let (pa, pb) = (a.path().join("sim"), b.path().join("sim"));
    vqcsim(&["simulate", "--seed", "7", "--out", &pa.to_string_lossy()]);
    vqcsim(&["simulate", "--seed", "7", "--jobs", "1", "--out", &pb.to_string_lossy()]);
    let same = |name: &str| std::fs::read(pa.join(name)).ok() == std::fs::read(pb.join(name)).ok();
    let csvs_equal = same("ratings.csv") && same("sessions.csv");

    let (c, d) = (tempfile::tempdir().expect("tempdir"), tempfile::tempdir().expect("tempdir"));
    let (mc, md) = (pipeline(c.path()), pipeline(d.path()));
    let manifests_equal = mc == md;
    outcome(
        csvs_equal && manifests_equal,
        format!("CSVs identical across runs and thread counts: {csvs_equal}; {} pipeline manifests identical: {manifests_equal}", mc.len()),
    )
}

fn panic_message(e: &(dyn std::any::Any + Send)) -> String {
    e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default()
}

fn check(name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let (pass, detail) = match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(o) => (o.pass, o.detail),
        Err(e) => (false, format!("panicked: {}", panic_message(e.as_ref()))),
    };
    println!("{} criterion {name}: {detail} [{:.1} s]", if pass { "PASS" } else { "FAIL" }, t.elapsed().as_secs_f64());
    pass
}

fn main() {
    let default = panic::catch_unwind(default_run).ok();
    let with_default = |f: fn(&DefaultRun) -> Outcome| match &default {
        Some(run) => f(run),
        None => outcome(false, "default study did not run".into()),
    };
    let results = [
        check("1 stall calibration", stall_calibration),
        check("2 split-half reliability", || with_default(split_half_reliability)),
        check("3 bt500 oracle equivalence", bt500_equivalence),
        check("4 screening power", screening_power),
        check("5 dmos sign", || with_default(dmos_sign)),
        check("6 protocol invariants", protocol_invariants),
        check("7 golden validation fidelity", golden_fidelity),
        check("8 harness sanity", harness_sanity),
        check("9 numeric kernels", numeric_kernels),
        check("10 determinism", determinism),
    ];
    let failed = results.iter().filter(|p| !**p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
