//! MOS and DMOS, split-half reliability, golden-set validation, sample-size
//! curves and stratified comparisons.
//!
//! Every function here works on the first presentation of each
//! (subject, video); repeats only feed the consistency check.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::DataError;
use crate::exec::{map_range, map_slice, Execution};
use crate::io::{write_rows, SessionRow};
use crate::model::{RatingRecord, FULL_HD};
use crate::rng::{domain, stream};
use crate::screening::first_presentations;
use crate::stats::{mean, sample_std, srocc, wilcoxon_signed_rank, StatsError, WilcoxonResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AggregateError {
    #[error("only {0} golden videos were rated; need at least 2")]
    TooFewGolden(usize),
    #[error("no video has two or more ratings")]
    NoVideos,
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoMos {
    pub video_id: String,
    pub mos: f64,
    pub std: f64,
    #[serde(rename = "n")]
    pub n_ratings: usize,
    #[serde(rename = "mos_stalled")]
    pub mos_with_stalls: Option<f64>,
    pub n_stalled: usize,
    pub dmos: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MosTable {
    pub videos: Vec<VideoMos>,
    /// Known videos without a single non-stalled rating.
    pub unrated: Vec<String>,
}

impl MosTable {
    pub fn get(&self, id: &str) -> Option<&VideoMos> {
        self.videos.binary_search_by(|v| v.video_id.as_str().cmp(id)).ok().map(|i| &self.videos[i])
    }

    pub fn as_map(&self) -> BTreeMap<String, f64> {
        self.videos.iter().map(|v| (v.video_id.clone(), v.mos)).collect()
    }
}

/// Non-stalled and stalled first-presentation scores per video.
fn split_by_stall(records: &[RatingRecord]) -> BTreeMap<&str, (Vec<f64>, Vec<f64>)> {
    let mut out: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in first_presentations(records) {
        let e = out.entry(r.video_id.as_str()).or_default();
        if r.stalled() { &mut e.1 } else { &mut e.0 }.push(f64::from(r.raw_score));
    }
    out
}

/// Non-stalled first-presentation scores per video, ordered by subject id.
pub fn video_scores(records: &[RatingRecord]) -> BTreeMap<String, Vec<f64>> {
    let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in first_presentations(records).into_iter().filter(|r| !r.stalled()) {
        out.entry(r.video_id.clone()).or_default().push(f64::from(r.raw_score));
    }
    out
}

/// `known_videos` only feeds the `unrated` list.
pub fn compute_mos(records: &[RatingRecord], known_videos: &[String]) -> MosTable {
    let groups = split_by_stall(records);
    let videos: Vec<VideoMos> = groups
        .iter()
        .filter(|(_, (clean, _))| !clean.is_empty())
        .map(|(id, (clean, stalled))| {
            let mos = mean(clean);
            let mos_with_stalls = (!stalled.is_empty()).then(|| mean(stalled));
            VideoMos {
                video_id: id.to_string(),
                mos,
                std: sample_std(clean),
                n_ratings: clean.len(),
                mos_with_stalls,
                n_stalled: stalled.len(),
                dmos: mos_with_stalls.map(|s| mos - s),
            }
        })
        .collect();
    let rated: BTreeSet<&str> = videos.iter().map(|v| v.video_id.as_str()).collect();
    let mut unrated: Vec<String> = known_videos.iter().filter(|v| !rated.contains(v.as_str())).cloned().collect();
    unrated.extend(groups.keys().filter(|v| !rated.contains(*v) && !known_videos.iter().any(|k| k == *v)).map(|v| v.to_string()));
    unrated.sort();
    MosTable { videos, unrated }
}

pub fn write_mos<W: Write>(writer: W, table: &MosTable) -> Result<(), DataError> {
    write_rows(writer, &["video_id", "mos", "std", "n", "mos_stalled", "n_stalled", "dmos"], &table.videos)
}

/// Mean SROCC between MOS vectors of two random disjoint halves of each
/// video's raters. Videos with fewer than two ratings are skipped and an odd
/// rater out is dropped per rep.
pub fn split_half(records: &[RatingRecord], reps: usize, seed: u64, mode: Execution) -> Result<f64, AggregateError> {
    let scores: Vec<Vec<f64>> = video_scores(records).into_values().filter(|s| s.len() >= 2).collect();
    if scores.len() < 2 {
        return Err(AggregateError::NoVideos);
    }
    let per_rep = map_range(reps, mode, |rep| {
        let mut rng = stream(seed, domain::SPLIT_HALF, rep as u64);
        let (mut a, mut b) = (Vec::with_capacity(scores.len()), Vec::with_capacity(scores.len()));
        for s in &scores {
            let mut v = s.clone();
            v.shuffle(&mut rng);
            let half = v.len() / 2;
            a.push(mean(&v[..half]));
            b.push(mean(&v[half..2 * half]));
        }
        srocc(&a, &b)
    });
    let values = per_rep.into_iter().collect::<Result<Vec<f64>, _>>()?;
    if values.is_empty() {
        return Err(AggregateError::Stats(StatsError::TooFewPoints { needed: 1, got: 0 }));
    }
    Ok(mean(&values))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenValidation {
    /// Mean over subjects of SROCC between their golden scores and ground truth.
    pub srocc: f64,
    pub subjects: usize,
    /// Mean absolute difference between study MOS and ground truth.
    pub mad: f64,
    pub golden_mos: BTreeMap<String, f64>,
    /// Paired test over the golden MOS values.
    pub wilcoxon_mos: WilcoxonResult,
    /// Paired test over subjects: mean golden score against mean ground truth.
    pub wilcoxon_subjects: Option<WilcoxonResult>,
}

pub fn golden_validation(records: &[RatingRecord], ground_truth: &BTreeMap<String, f64>) -> Result<GoldenValidation, AggregateError> {
    let golden: Vec<&RatingRecord> =
        first_presentations(records).into_iter().filter(|r| !r.stalled() && ground_truth.contains_key(&r.video_id)).collect();
    let mut by_video: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut by_subject: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for r in &golden {
        let score = f64::from(r.raw_score);
        by_video.entry(r.video_id.as_str()).or_default().push(score);
        by_subject.entry(r.subject_id.as_str()).or_default().push((score, ground_truth[&r.video_id]));
    }
    if by_video.len() < 2 {
        return Err(AggregateError::TooFewGolden(by_video.len()));
    }
    let golden_mos: BTreeMap<String, f64> = by_video.iter().map(|(v, s)| (v.to_string(), mean(s))).collect();
    let (mos, truth): (Vec<f64>, Vec<f64>) = golden_mos.iter().map(|(v, m)| (*m, ground_truth[v])).unzip();
    let mad = mos.iter().zip(&truth).map(|(m, t)| (m - t).abs()).sum::<f64>() / mos.len() as f64;

    let per_subject: Vec<f64> = by_subject
        .values()
        .filter(|p| p.len() >= 2)
        .filter_map(|p| {
            let (s, t): (Vec<f64>, Vec<f64>) = p.iter().copied().unzip();
            srocc(&s, &t).ok()
        })
        .collect();
    if per_subject.is_empty() {
        return Err(AggregateError::Stats(StatsError::Constant));
    }
    let (subject_means, truth_means): (Vec<f64>, Vec<f64>) = by_subject
        .values()
        .map(|p| {
            let (s, t): (Vec<f64>, Vec<f64>) = p.iter().copied().unzip();
            (mean(&s), mean(&t))
        })
        .unzip();
    Ok(GoldenValidation {
        srocc: mean(&per_subject),
        subjects: per_subject.len(),
        mad,
        wilcoxon_mos: wilcoxon_signed_rank(&mos, &truth)?,
        wilcoxon_subjects: wilcoxon_signed_rank(&subject_means, &truth_means).ok(),
        golden_mos,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub golden_srocc: f64,
    pub golden_mad: f64,
    pub wilcoxon_p: f64,
    pub wilcoxon_p_subjects: Option<f64>,
    pub split_half_mean_srocc: f64,
    pub split_half_reps: usize,
}

impl ValidationSummary {
    pub fn new(golden: &GoldenValidation, split_half_mean_srocc: f64, split_half_reps: usize) -> Self {
        ValidationSummary {
            golden_srocc: golden.srocc,
            golden_mad: golden.mad,
            wilcoxon_p: golden.wilcoxon_mos.p_value,
            wilcoxon_p_subjects: golden.wilcoxon_subjects.map(|w| w.p_value),
            split_half_mean_srocc,
            split_half_reps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: usize,
    pub mos: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleCurve {
    pub video_id: String,
    pub available: usize,
    pub points: Vec<CurvePoint>,
}

/// Running MOS over nested random subsets of sizes `step, 2·step, …` up to
/// `min(max_n, available)`; the full available set closes each curve.
pub fn sample_size_curve(records: &[RatingRecord], videos: &[String], max_n: usize, step: usize, seed: u64) -> Vec<SampleCurve> {
    let scores = video_scores(records);
    videos
        .iter()
        .enumerate()
        .filter_map(|(i, id)| scores.get(id).map(|s| (i, id, s)))
        .map(|(i, id, s)| {
            let mut v = s.clone();
            v.shuffle(&mut stream(seed, domain::SAMPLE_SIZE, i as u64));
            let cap = max_n.min(v.len());
            let mut sizes: Vec<usize> = (1..).map(|k| k * step.max(1)).take_while(|&n| n <= cap).collect();
            if sizes.last() != Some(&cap) && cap > 0 {
                sizes.push(cap);
            }
            let points = sizes.into_iter().map(|n| CurvePoint { n, mos: mean(&v[..n]), std: sample_std(&v[..n]) }).collect();
            SampleCurve { video_id: id.clone(), available: s.len(), points }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Facet {
    ResolutionPool,
    DisplayResolution,
    DeviceClass,
    ViewingDistance,
    Gender,
    AgeGroup,
}

crate::model::text_enum!(Facet {
    ResolutionPool => "resolution_pool",
    DisplayResolution => "display_resolution",
    DeviceClass => "device_class",
    ViewingDistance => "viewing_distance",
    Gender => "gender",
    AgeGroup => "age_group",
});

impl Facet {
    pub const ALL: [Facet; 6] =
        [Facet::ResolutionPool, Facet::DisplayResolution, Facet::DeviceClass, Facet::ViewingDistance, Facet::Gender, Facet::AgeGroup];

    pub fn label(self, s: &SessionRow) -> String {
        match self {
            Facet::ResolutionPool => {
                let high = s.display_w >= FULL_HD.width && s.display_h >= FULL_HD.height;
                if high { "high_res" } else { "low_res" }.to_string()
            }
            Facet::DisplayResolution => format!("{}x{}", s.display_w, s.display_h),
            Facet::DeviceClass => s.device_class.to_string(),
            Facet::ViewingDistance => s.viewing_distance.to_string(),
            Facet::Gender => s.gender.to_string(),
            Facet::AgeGroup => s.age_group.to_string(),
        }
    }
}

/// Stratum label per subject; a subject's last session wins.
pub fn facet_labels(sessions: &[SessionRow], facet: Facet) -> BTreeMap<String, String> {
    sessions.iter().map(|s| (s.subject_id.clone(), facet.label(s))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumPair {
    pub a: String,
    pub b: String,
    pub shared_videos: usize,
    pub srocc: f64,
    /// Mean of `MOS_a − MOS_b` over shared videos.
    pub mean_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Stratified {
    /// Stratum label with its subject and video counts.
    pub strata: Vec<(String, usize, usize)>,
    pub pairs: Vec<StratumPair>,
    /// Strata with fewer than two qualifying videos.
    pub excluded_strata: Vec<String>,
    /// Pairs sharing fewer than two videos.
    pub excluded_pairs: Vec<(String, String)>,
}

impl Stratified {
    pub fn pair(&self, a: &str, b: &str) -> Option<&StratumPair> {
        self.pairs.iter().find(|p| p.a == a && p.b == b)
    }
}

/// Per-stratum MOS over videos with at least `min_ratings` ratings in that
/// stratum, compared pairwise over the videos two strata share.
pub fn stratified_analysis(records: &[RatingRecord], labels: &BTreeMap<String, String>, min_ratings: usize, mode: Execution) -> Stratified {
    let mut grouped: BTreeMap<&str, Vec<RatingRecord>> = BTreeMap::new();
    for r in records {
        if let Some(l) = labels.get(&r.subject_id) {
            grouped.entry(l.as_str()).or_default().push(r.clone());
        }
    }
    let groups: Vec<(&str, Vec<RatingRecord>)> = grouped.into_iter().collect();
    let per_stratum = map_slice(&groups, mode, |(label, recs)| {
        let subjects = recs.iter().map(|r| r.subject_id.as_str()).collect::<BTreeSet<_>>().len();
        let mos: BTreeMap<String, f64> =
            video_scores(recs).into_iter().filter(|(_, s)| s.len() >= min_ratings.max(1)).map(|(v, s)| (v, mean(&s))).collect();
        (label.to_string(), subjects, mos)
    });

    let mut out = Stratified::default();
    let mut kept = Vec::new();
    for (label, subjects, mos) in per_stratum {
        if mos.len() < 2 {
            out.excluded_strata.push(label);
        } else {
            out.strata.push((label.clone(), subjects, mos.len()));
            kept.push((label, mos));
        }
    }
    for (i, (la, ma)) in kept.iter().enumerate() {
        for (lb, mb) in &kept[i + 1..] {
            let (xa, xb): (Vec<f64>, Vec<f64>) = ma.iter().filter_map(|(v, a)| mb.get(v).map(|b| (*a, *b))).unzip();
            match srocc(&xa, &xb) {
                Ok(rho) if xa.len() >= 2 => out.pairs.push(StratumPair {
                    a: la.clone(),
                    b: lb.clone(),
                    shared_videos: xa.len(),
                    srocc: rho,
                    mean_diff: xa.iter().zip(&xb).map(|(a, b)| a - b).sum::<f64>() / xa.len() as f64,
                }),
                _ => out.excluded_pairs.push((la.clone(), lb.clone())),
            }
        }
    }
    out
}
