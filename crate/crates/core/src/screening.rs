//! Staged subject rejection.
//!
//! Stages run in a fixed order and each sees only the subjects that survived
//! the previous ones: incomplete sessions, uncorrected vision, skippers,
//! stall-heavy sessions, BT.500 outlier screening, agreement with the
//! consensus and, optionally, repeat-pair consistency. Only scores, flags and
//! survey answers are inspected.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::DataError;
use crate::io::SessionRow;
use crate::model::{text_enum, RatingRecord, Vision};
use crate::session::Termination;
use crate::stats::{kurtosis_beta2, mean, sample_std, srocc};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Incomplete,
    UncorrectedVision,
    Skipper,
    StallHeavy,
    Bt500,
    Consensus,
    Inconsistent,
}

text_enum!(Stage {
    Incomplete => "incomplete",
    UncorrectedVision => "uncorrected_vision",
    Skipper => "skipper",
    StallHeavy => "stall_heavy",
    Bt500 => "bt500",
    Consensus => "consensus",
    Inconsistent => "inconsistent",
});

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LedgerEntry {
    pub subject_id: String,
    pub stage: Stage,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScreeningConfig {
    /// Share of stalled presentations at which a subject is dropped.
    pub stall_heavy_fraction: f64,
    pub bt500_outlier_fraction: f64,
    pub bt500_balance: f64,
    /// Subjects whose scores rank-correlate with the leave-one-out MOS below
    /// this value are dropped.
    pub min_consensus_srocc: f64,
    /// Fewest shared videos needed to judge consensus.
    pub min_consensus_videos: usize,
    /// Consistency threshold in score units; measured from the data when unset.
    pub consistency_threshold: Option<f64>,
    pub exclude_timeouts: bool,
    /// Drop subjects whose mean absolute difference over stall-free repeat
    /// pairs reaches the consistency threshold.
    pub reject_inconsistent: bool,
    pub video_duration_ms: u64,
}

impl Default for ScreeningConfig {
    fn default() -> Self {
        ScreeningConfig {
            stall_heavy_fraction: 0.75,
            bt500_outlier_fraction: 0.05,
            bt500_balance: 0.3,
            min_consensus_srocc: 0.3,
            min_consensus_videos: 5,
            consistency_threshold: None,
            exclude_timeouts: true,
            reject_inconsistent: false,
            video_duration_ms: 10_000,
        }
    }
}

/// Repeat-pair agreement of one subject.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Consistency {
    pub pairs: usize,
    pub consistent: usize,
    pub abs_diff_sum: f64,
}

impl Consistency {
    pub fn fraction(&self) -> Option<f64> {
        (self.pairs > 0).then(|| self.consistent as f64 / self.pairs as f64)
    }

    pub fn mean_abs_diff(&self) -> Option<f64> {
        (self.pairs > 0).then(|| self.abs_diff_sum / self.pairs as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScreeningReport {
    pub removed_incomplete: Vec<String>,
    pub removed_uncorrected: Vec<String>,
    pub removed_skippers: Vec<String>,
    pub removed_stall_heavy: Vec<String>,
    pub removed_bt500: Vec<String>,
    pub removed_consensus: Vec<String>,
    pub removed_inconsistent: Vec<String>,
    /// Subjects without a single non-stalled rating; kept but not BT.500-screened.
    pub unscreenable: Vec<String>,
    pub consistency: BTreeMap<String, Consistency>,
    pub consistency_threshold: f64,
    pub ledger: Vec<LedgerEntry>,
    /// Every rating of a surviving subject. Stalled ratings are kept so that
    /// MOS and DMOS can be split downstream.
    pub surviving_ratings: Vec<RatingRecord>,
}

impl ScreeningReport {
    pub fn removed(&self) -> BTreeSet<&str> {
        self.ledger.iter().map(|e| e.subject_id.as_str()).collect()
    }

    pub fn surviving_subjects(&self) -> BTreeSet<&str> {
        self.surviving_ratings.iter().map(|r| r.subject_id.as_str()).collect()
    }
}

pub type ScoreMatrix = BTreeMap<String, BTreeMap<String, f64>>;

/// First presentation of each (subject, video), in position order.
pub(crate) fn first_presentations<'a>(records: impl IntoIterator<Item = &'a RatingRecord>) -> Vec<&'a RatingRecord> {
    let mut sorted: Vec<&RatingRecord> = records.into_iter().collect();
    sorted.sort_by(|a, b| (&a.subject_id, &a.session_id, a.position).cmp(&(&b.subject_id, &b.session_id, b.position)));
    let mut seen = BTreeSet::new();
    sorted.into_iter().filter(|r| seen.insert((r.subject_id.as_str(), r.video_id.as_str()))).collect()
}

/// Scores from first presentations that played without stalls.
pub fn score_matrix<'a>(records: impl IntoIterator<Item = &'a RatingRecord>) -> ScoreMatrix {
    let mut m = ScoreMatrix::new();
    for r in first_presentations(records).into_iter().filter(|r| !r.stalled()) {
        m.entry(r.subject_id.clone()).or_default().insert(r.video_id.clone(), f64::from(r.raw_score));
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OutlierCounts {
    pub p: usize,
    pub q: usize,
    pub n: usize,
}

/// Per-subject P/Q/N counts of the BT.500 outlier procedure.
pub fn bt500_counts(matrix: &ScoreMatrix) -> BTreeMap<String, OutlierCounts> {
    let mut by_video: BTreeMap<&str, Vec<(&str, f64)>> = BTreeMap::new();
    for (s, row) in matrix {
        for (v, &x) in row {
            by_video.entry(v.as_str()).or_default().push((s.as_str(), x));
        }
    }
    let mut counts: BTreeMap<String, OutlierCounts> =
        matrix.iter().map(|(s, row)| (s.clone(), OutlierCounts { n: row.len(), ..Default::default() })).collect();
    for scores in by_video.values().filter(|v| v.len() >= 2) {
        let xs: Vec<f64> = scores.iter().map(|(_, x)| *x).collect();
        let sd = sample_std(&xs);
        if sd == 0.0 {
            continue;
        }
        let mu = mean(&xs);
        let beta2 = kurtosis_beta2(&xs).unwrap_or(f64::NAN);
        let k = if (2.0..=4.0).contains(&beta2) { 2.0 } else { 20f64.sqrt() };
        for &(s, x) in scores {
            let c = counts.get_mut(s).expect("subject present in matrix");
            if x >= mu + k * sd {
                c.p += 1;
            }
            if x <= mu - k * sd {
                c.q += 1;
            }
        }
    }
    counts
}

fn bt500_rejects(c: &OutlierCounts, cfg: &ScreeningConfig) -> bool {
    let pq = (c.p + c.q) as f64;
    c.n > 0 && pq > 0.0 && pq / c.n as f64 > cfg.bt500_outlier_fraction && (c.p as f64 - c.q as f64).abs() / pq < cfg.bt500_balance
}

/// Subjects rejected by the BT.500 outlier rule with the default fractions.
pub fn bt500_screen(matrix: &ScoreMatrix) -> BTreeSet<String> {
    let cfg = ScreeningConfig::default();
    bt500_counts(matrix).into_iter().filter(|(_, c)| bt500_rejects(c, &cfg)).map(|(s, _)| s).collect()
}

/// Rank correlation of each subject's scores with the mean of everyone else
/// on the same videos. Videos rated by nobody else are skipped; `None` marks
/// subjects with fewer than `min_videos` usable videos.
pub fn consensus_srocc(matrix: &ScoreMatrix, min_videos: usize) -> BTreeMap<String, Option<f64>> {
    let mut totals: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for row in matrix.values() {
        for (v, &x) in row {
            let t = totals.entry(v.as_str()).or_default();
            t.0 += x;
            t.1 += 1;
        }
    }
    matrix
        .iter()
        .map(|(s, row)| {
            let (own, others): (Vec<f64>, Vec<f64>) = row
                .iter()
                .filter_map(|(v, &x)| {
                    let (sum, n) = totals[v.as_str()];
                    (n >= 2).then(|| (x, (sum - x) / (n - 1) as f64))
                })
                .unzip();
            let rho = (own.len() >= min_videos.max(2)).then(|| srocc(&own, &others).unwrap_or(0.0));
            (s.clone(), rho)
        })
        .collect()
}

/// Mean over videos of the per-video sample std; videos need two ratings.
pub fn mean_video_std(matrix: &ScoreMatrix) -> Option<f64> {
    let mut by_video: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for row in matrix.values() {
        for (v, &x) in row {
            by_video.entry(v.as_str()).or_default().push(x);
        }
    }
    let stds: Vec<f64> = by_video.values().filter(|v| v.len() >= 2).map(|v| sample_std(v)).collect();
    (!stds.is_empty()).then(|| mean(&stds))
}

/// Agreement between the two presentations of each repeated video.
/// Pairs with a stalled side are skipped.
pub fn intra_consistency<'a>(records: impl IntoIterator<Item = &'a RatingRecord>, threshold: f64) -> BTreeMap<String, Consistency> {
    let mut shown: BTreeMap<(&str, &str, &str), Vec<&RatingRecord>> = BTreeMap::new();
    let mut out: BTreeMap<String, Consistency> = BTreeMap::new();
    for r in records {
        out.entry(r.subject_id.clone()).or_default();
        shown.entry((r.subject_id.as_str(), r.session_id.as_str(), r.video_id.as_str())).or_default().push(r);
    }
    for ((subject, _, _), mut reps) in shown {
        if reps.len() < 2 {
            continue;
        }
        reps.sort_by_key(|r| r.position);
        let (a, b) = (reps[0], reps[1]);
        if a.stalled() || b.stalled() {
            continue;
        }
        let c = out.get_mut(subject).expect("subject registered");
        let d = (f64::from(a.raw_score) - f64::from(b.raw_score)).abs();
        c.pairs += 1;
        c.abs_diff_sum += d;
        if d < threshold {
            c.consistent += 1;
        }
    }
    out
}

pub fn screen(records: &[RatingRecord], sessions: &[SessionRow], cfg: &ScreeningConfig) -> Result<ScreeningReport, DataError> {
    let by_session: HashMap<&str, &SessionRow> = sessions.iter().map(|s| (s.session_id.as_str(), s)).collect();
    if let Some(r) = records.iter().find(|r| !by_session.get(r.session_id.as_str()).is_some_and(|s| s.subject_id == r.subject_id)) {
        return Err(DataError::Integrity(format!(
            "rating for `{}` has no session `{}` of subject `{}`",
            r.video_id, r.session_id, r.subject_id
        )));
    }

    let mut ratings: BTreeMap<&str, Vec<&RatingRecord>> = BTreeMap::new();
    for r in records {
        ratings.entry(r.subject_id.as_str()).or_default().push(r);
    }
    let mut subject_sessions: BTreeMap<&str, Vec<&SessionRow>> = BTreeMap::new();
    for s in sessions {
        subject_sessions.entry(s.subject_id.as_str()).or_default().push(s);
    }
    let mut alive: BTreeSet<&str> = subject_sessions
        .iter()
        .filter(|(id, ss)| {
            ratings.contains_key(*id) || ss.iter().any(|s| matches!(s.termination, Termination::SkipperFlagged | Termination::Timeout))
        })
        .map(|(id, _)| *id)
        .collect();

    let mut ledger = Vec::new();
    let mut stage = |alive: &mut BTreeSet<&str>, stage: Stage, verdict: &dyn Fn(&str) -> Option<String>| -> Vec<String> {
        let removed: Vec<(String, String)> = alive.iter().filter_map(|&s| verdict(s).map(|d| (s.to_string(), d))).collect();
        for (s, detail) in &removed {
            alive.remove(s.as_str());
            ledger.push(LedgerEntry { subject_id: s.clone(), stage, detail: detail.clone() });
        }
        removed.into_iter().map(|(s, _)| s).collect()
    };
    let no_ratings: Vec<&RatingRecord> = Vec::new();
    let rated = |s: &str| ratings.get(s).unwrap_or(&no_ratings);

    let removed_incomplete = stage(&mut alive, Stage::Incomplete, &|s| {
        (cfg.exclude_timeouts && subject_sessions[s].iter().any(|r| r.termination == Termination::Timeout))
            .then(|| "session timed out".to_string())
    });
    let removed_uncorrected = stage(&mut alive, Stage::UncorrectedVision, &|s| {
        subject_sessions[s].iter().any(|r| r.vision == Vision::CorrectedNotWorn).then(|| "corrective lenses not worn".to_string())
    });
    let removed_skippers = stage(&mut alive, Stage::Skipper, &|s| {
        if subject_sessions[s].iter().any(|r| r.termination == Termination::SkipperFlagged) {
            return Some("flagged during session".to_string());
        }
        let partial = rated(s).iter().filter(|r| r.play_duration_ms < r.stall_total_ms + cfg.video_duration_ms).count();
        (partial > 0).then(|| format!("{partial} videos not played to the end"))
    });
    let removed_stall_heavy = stage(&mut alive, Stage::StallHeavy, &|s| {
        let all = rated(s);
        let stalled = all.iter().filter(|r| r.stalled()).count();
        (!all.is_empty() && stalled as f64 >= cfg.stall_heavy_fraction * all.len() as f64)
            .then(|| format!("{stalled}/{} videos stalled", all.len()))
    });

    let matrix = score_matrix(alive.iter().flat_map(|s| rated(s).iter().copied()));
    let counts = bt500_counts(&matrix);
    let unscreenable: Vec<String> = alive.iter().filter(|s| !matrix.contains_key(**s)).map(|s| s.to_string()).collect();
    let removed_bt500 = stage(&mut alive, Stage::Bt500, &|s| {
        counts.get(s).filter(|c| bt500_rejects(c, cfg)).map(|c| format!("P={} Q={} N={}", c.p, c.q, c.n))
    });

    let agreement = consensus_srocc(&score_matrix(alive.iter().flat_map(|s| rated(s).iter().copied())), cfg.min_consensus_videos);
    let removed_consensus = stage(&mut alive, Stage::Consensus, &|s| {
        agreement.get(s).copied().flatten().filter(|rho| *rho < cfg.min_consensus_srocc).map(|rho| format!("consensus srocc {rho:.3}"))
    });

    let threshold = match cfg.consistency_threshold {
        Some(t) => t,
        None => mean_video_std(&score_matrix(alive.iter().flat_map(|s| rated(s).iter().copied()))).unwrap_or(0.0),
    };
    let consistency = intra_consistency(alive.iter().flat_map(|s| rated(s).iter().copied()), threshold);
    let removed_inconsistent = stage(&mut alive, Stage::Inconsistent, &|s| {
        let c = consistency.get(s).copied().unwrap_or_default();
        match c.mean_abs_diff() {
            Some(m) if cfg.reject_inconsistent && m >= threshold => Some(format!("mean repeat difference {m:.1} over {} pairs", c.pairs)),
            _ => None,
        }
    });

    let surviving_ratings = records.iter().filter(|r| alive.contains(r.subject_id.as_str())).cloned().collect();
    Ok(ScreeningReport {
        removed_incomplete,
        removed_uncorrected,
        removed_skippers,
        removed_stall_heavy,
        removed_bt500,
        removed_consensus,
        removed_inconsistent,
        unscreenable,
        consistency,
        consistency_threshold: threshold,
        ledger,
        surviving_ratings,
    })
}

pub fn write_ledger<W: Write>(writer: W, ledger: &[LedgerEntry]) -> Result<(), DataError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["subject_id", "stage_removed", "detail"])?;
    for e in ledger {
        wtr.write_record([e.subject_id.as_str(), e.stage.as_str(), e.detail.as_str()])?;
    }
    wtr.flush()?;
    Ok(())
}
