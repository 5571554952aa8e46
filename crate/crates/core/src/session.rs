//! The per-subject session state machine and the population runner.

use std::collections::{BTreeSet, HashSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::exec::{map_range, Execution};
use crate::model::{
    text_enum, AgeGroup, Behavior, Catalog, DeviceClass, DisplayProfile, Gender, Pool, RatingRecord, StudyConfig, SubjectProfile,
    ViewingDistance, Vision,
};
use crate::netsim::{simulate_playback, simulate_preload, LoadFailure, PreloadParams};
use crate::rng::{domain, stream, SimRng};
use crate::subject::{score, RatingEffects};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    Reliability,
    UniqueWorker,
    DisplayDevice,
    Resolution,
    Browser,
    Connectivity,
    Hardware,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EligibilityResult {
    pub eligible: bool,
    pub failed_constraints: BTreeSet<Constraint>,
}

pub const MIN_DISPLAY: (u32, u32) = (1280, 720);

/// Static entry gates. Connectivity and hardware are judged later, during
/// preloading and training.
pub fn check_eligibility(subject: &SubjectProfile, history: &HashSet<String>) -> EligibilityResult {
    let mut failed = BTreeSet::new();
    if subject.reliability <= 0.90 {
        failed.insert(Constraint::Reliability);
    }
    if history.contains(&subject.id) {
        failed.insert(Constraint::UniqueWorker);
    }
    let d = &subject.display;
    if matches!(d.device_class, DeviceClass::Mobile | DeviceClass::Tablet) {
        failed.insert(Constraint::DisplayDevice);
    }
    if d.width < MIN_DISPLAY.0 || d.height < MIN_DISPLAY.1 {
        failed.insert(Constraint::Resolution);
    }
    if !d.browser_supported {
        failed.insert(Constraint::Browser);
    }
    EligibilityResult { eligible: failed.is_empty(), failed_constraints: failed }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotTag {
    Golden,
    Random,
    /// Second showing of the random item at the given test position.
    RepeatOf(usize),
    Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestSlot {
    /// Catalog index.
    pub asset: usize,
    pub tag: SlotTag,
}

/// Training items and test slots, both in presentation order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Playlist {
    pub training: Vec<usize>,
    pub test: Vec<TestSlot>,
}

impl Playlist {
    pub fn count(&self, pred: impl Fn(SlotTag) -> bool) -> usize {
        self.test.iter().filter(|s| pred(s.tag)).count()
    }

    /// Catalog indices of all items in presentation order, training first.
    pub fn sequence(&self) -> impl Iterator<Item = usize> + '_ {
        self.training.iter().copied().chain(self.test.iter().map(|s| s.asset))
    }
}

/// Study-wide choices shared by every subject.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyDesign {
    pub golden: Vec<usize>,
    pub common: Vec<usize>,
}

impl StudyDesign {
    /// Picks the golden set and the common videos (from the sub-FHD pool).
    pub fn new(catalog: &Catalog, cfg: &StudyConfig, rng: &mut SimRng) -> Result<Self, ConfigError> {
        let golden = catalog.pool_indices(Pool::Golden);
        if golden.len() < cfg.n_golden {
            return Err(ConfigError::InsufficientPool { pool: "golden", needed: cfg.n_golden, available: golden.len() });
        }
        let standard = catalog.pool_indices(Pool::Standard);
        if standard.len() < cfg.n_common {
            return Err(ConfigError::InsufficientPool { pool: "standard", needed: cfg.n_common, available: standard.len() });
        }
        let mut golden: Vec<usize> = golden.choose_multiple(rng, cfg.n_golden).copied().collect();
        golden.sort_unstable();
        let mut common: Vec<usize> = standard.choose_multiple(rng, cfg.n_common).copied().collect();
        common.sort_unstable();
        Ok(StudyDesign { golden, common })
    }
}

fn draw(pool: &mut Vec<usize>, n: usize, name: &'static str, rng: &mut SimRng) -> Result<Vec<usize>, ConfigError> {
    if pool.len() < n {
        return Err(ConfigError::InsufficientPool { pool: name, needed: n, available: pool.len() });
    }
    let (chosen, _) = pool.partial_shuffle(rng, n);
    let chosen = chosen.to_vec();
    pool.retain(|i| !chosen.contains(i));
    Ok(chosen)
}

/// Places repeat pairs on a cycle so both members land at uniformly distributed
/// positions, separated by at least `sep` in either direction.
fn place_pairs(n_slots: usize, n_pairs: usize, sep: usize, rng: &mut SimRng) -> Result<Vec<(usize, usize)>, ConfigError> {
    if n_pairs == 0 {
        return Ok(Vec::new());
    }
    if 2 * n_pairs > n_slots || 2 * sep > n_slots || sep == 0 {
        return Err(ConfigError::Invalid(format!("{n_pairs} repeat pairs with separation {sep} do not fit in {n_slots} slots")));
    }
    for _ in 0..10_000 {
        let mut taken = vec![false; n_slots];
        let mut pairs = Vec::with_capacity(n_pairs);
        let mut ok = true;
        for _ in 0..n_pairs {
            let mut placed = false;
            for _ in 0..200 {
                let i = rng.random_range(0..n_slots);
                let d = rng.random_range(sep..=n_slots - sep);
                let j = (i + d) % n_slots;
                if !taken[i] && !taken[j] {
                    taken[i] = true;
                    taken[j] = true;
                    pairs.push((i.min(j), i.max(j)));
                    placed = true;
                    break;
                }
            }
            if !placed {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(pairs);
        }
    }
    Err(ConfigError::Invalid("could not place repeat pairs".into()))
}

/// Builds one subject's playlist.
pub fn compose_playlist(
    display: &DisplayProfile,
    catalog: &Catalog,
    design: &StudyDesign,
    cfg: &StudyConfig,
    rng: &mut SimRng,
) -> Result<Playlist, ConfigError> {
    let high_res = display.is_high_res();
    let mut fhd = catalog.pool_indices(Pool::Fhd);
    let mut standard: Vec<usize> = catalog.pool_indices(Pool::Standard).into_iter().filter(|i| !design.common.contains(i)).collect();

    let n_fhd_test = if high_res { cfg.n_fhd_if_highres } else { 0 };
    let n_fhd_train = if high_res { cfg.n_fhd_training_if_highres } else { 0 };
    let mut random = draw(&mut fhd, n_fhd_test, "fhd", rng)?;
    random.extend(draw(&mut standard, cfg.n_random - n_fhd_test, "standard", rng)?);
    let mut training = draw(&mut fhd, n_fhd_train, "fhd", rng)?;
    training.extend(draw(&mut standard, cfg.n_training - n_fhd_train, "standard", rng)?);
    training.shuffle(rng);
    random.shuffle(rng);

    let pairs = place_pairs(cfg.n_test, cfg.n_repeats, cfg.repeat_min_separation, rng)?;
    let mut slots: Vec<Option<TestSlot>> = vec![None; cfg.n_test];
    for (k, &(first, second)) in pairs.iter().enumerate() {
        slots[first] = Some(TestSlot { asset: random[k], tag: SlotTag::Random });
        slots[second] = Some(TestSlot { asset: random[k], tag: SlotTag::RepeatOf(first) });
    }
    let mut rest: Vec<TestSlot> = random[pairs.len()..]
        .iter()
        .map(|&asset| TestSlot { asset, tag: SlotTag::Random })
        .chain(design.golden.iter().map(|&asset| TestSlot { asset, tag: SlotTag::Golden }))
        .chain(design.common.iter().map(|&asset| TestSlot { asset, tag: SlotTag::Common }))
        .collect();
    rest.shuffle(rng);
    let mut rest = rest.into_iter();
    for slot in slots.iter_mut().filter(|s| s.is_none()) {
        *slot = rest.next();
    }
    let test = slots.into_iter().map(|s| s.expect("every slot filled")).collect();
    Ok(Playlist { training, test })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingFailure {
    SingleLong,
    ManySlow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingOutcome {
    Pass,
    Fail(TrainingFailure),
}

/// Applies the training stall gate to observed play durations.
pub fn judge_training(play_durations_ms: &[u64], cfg: &StudyConfig) -> TrainingOutcome {
    let single = (cfg.training_fail_single_s * 1000.0) as u64;
    let multi = (cfg.training_fail_multi_s * 1000.0) as u64;
    if play_durations_ms.iter().any(|&d| d > single) {
        TrainingOutcome::Fail(TrainingFailure::SingleLong)
    } else if play_durations_ms.iter().filter(|&&d| d > multi).count() >= cfg.training_fail_multi_count {
        TrainingOutcome::Fail(TrainingFailure::ManySlow)
    } else {
        TrainingOutcome::Pass
    }
}

/// Plays the training items (assumed loaded) and applies the gate.
pub fn run_training(
    subject: &SubjectProfile,
    training: &[usize],
    catalog: &Catalog,
    cfg: &StudyConfig,
    rng: &mut SimRng,
) -> (TrainingOutcome, Vec<u64>) {
    let durations: Vec<u64> = training
        .iter()
        .map(|&i| simulate_playback(catalog.get(i), &subject.cpu, subject.background_load, cfg.tick_ms, rng).play_duration_ms)
        .collect();
    (judge_training(&durations, cfg), durations)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    Ineligible,
    TrainingFailed,
    ConnectFailed,
    Timeout,
    SkipperFlagged,
}

text_enum!(Termination {
    Completed => "completed",
    Ineligible => "ineligible",
    TrainingFailed => "training_failed",
    ConnectFailed => "connect_failed",
    Timeout => "timeout",
    SkipperFlagged => "skipper_flagged",
});

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Warning {
    Checkpoint1,
    Checkpoint2,
}

text_enum!(Warning { Checkpoint1 => "checkpoint1", Checkpoint2 => "checkpoint2" });

/// Exit-survey answers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Survey {
    pub vision: Vision,
    pub age_group: AgeGroup,
    pub gender: Gender,
    pub viewing_distance: ViewingDistance,
    pub display_w: u32,
    pub display_h: u32,
    pub device_class: DeviceClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: String,
    pub subject_id: String,
    pub eligibility: EligibilityResult,
    pub playlist: Option<Playlist>,
    pub ratings: Vec<RatingRecord>,
    pub termination: Termination,
    pub elapsed_min: f64,
    pub warnings: BTreeSet<Warning>,
    pub survey: Survey,
    /// Items that were not fully loaded when playback wanted them.
    pub network_unready: u32,
    /// Test items the subject did not watch to the end.
    pub skipped_videos: u32,
    pub training_durations_ms: Vec<u64>,
}

impl SessionRecord {
    pub fn is_compensated(&self) -> bool {
        matches!(self.termination, Termination::Completed | Termination::Timeout)
    }
}

fn survey_for(subject: &SubjectProfile, misreport_rate: f64, rng: &mut SimRng) -> Survey {
    let mut pick = |truth, options: &[_]| {
        if misreport_rate > 0.0 && rng.random::<f64>() < misreport_rate {
            *options.choose(rng).unwrap_or(&truth)
        } else {
            truth
        }
    };
    let vision = pick(subject.vision, &[Vision::Normal, Vision::CorrectedWorn, Vision::CorrectedNotWorn]);
    let mut survey = Survey {
        vision,
        age_group: subject.age_group,
        gender: subject.gender,
        viewing_distance: subject.viewing_distance,
        display_w: subject.display.width,
        display_h: subject.display.height,
        device_class: subject.display.device_class,
    };
    if misreport_rate > 0.0 {
        if rng.random::<f64>() < misreport_rate {
            survey.age_group = *AgeGroup::ALL.choose(rng).expect("non-empty");
        }
        if rng.random::<f64>() < misreport_rate {
            survey.gender = *[Gender::Male, Gender::Female].choose(rng).expect("non-empty");
        }
        if rng.random::<f64>() < misreport_rate {
            survey.viewing_distance =
                *[ViewingDistance::Near, ViewingDistance::Medium, ViewingDistance::Far].choose(rng).expect("non-empty");
        }
    }
    survey
}

/// Everything a session needs besides the subject and its stream.
#[derive(Debug, Clone, Copy)]
pub struct SessionContext<'a> {
    pub cfg: &'a StudyConfig,
    pub catalog: &'a Catalog,
    pub design: &'a StudyDesign,
    pub effects: &'a RatingEffects,
    pub history: &'a HashSet<String>,
}

struct Clock {
    now_s: f64,
}

/// Runs one subject through overview, eligibility, instructions, training,
/// test and exit survey.
pub fn run_session(subject: &SubjectProfile, ctx: &SessionContext<'_>, session_id: String, rng: &mut SimRng) -> SessionRecord {
    let cfg = ctx.cfg;
    let catalog = ctx.catalog;
    let display = subject.display.normalized();
    let eligibility = check_eligibility(subject, ctx.history);
    let mut clock = Clock { now_s: cfg.overview_s };
    let survey = survey_for(subject, cfg.survey_misreport_rate, rng);
    let mut record = SessionRecord {
        session_id,
        subject_id: subject.id.clone(),
        eligibility,
        playlist: None,
        ratings: Vec::new(),
        termination: Termination::Ineligible,
        elapsed_min: 0.0,
        warnings: BTreeSet::new(),
        survey,
        network_unready: 0,
        skipped_videos: 0,
        training_durations_ms: Vec::new(),
    };
    let finish = |mut record: SessionRecord, clock: &Clock, termination| {
        record.termination = termination;
        record.elapsed_min = clock.now_s / 60.0;
        record
    };
    if !record.eligibility.eligible {
        return finish(record, &clock, Termination::Ineligible);
    }
    let playlist = match compose_playlist(&display, catalog, ctx.design, cfg, rng) {
        Ok(p) => p,
        Err(_) => return finish(record, &clock, Termination::Ineligible),
    };
    let sequence: Vec<usize> = playlist.sequence().collect();
    record.playlist = Some(playlist.clone());
    clock.now_s += cfg.instructions_s;

    let params = PreloadParams::from_config(cfg);
    let lookahead = cfg.prefetch_lookahead.max(1);
    let mut loads: Vec<Option<Result<f64, LoadFailure>>> = vec![None; sequence.len()];
    let request = |k: usize, at: f64, loads: &mut Vec<Option<Result<f64, LoadFailure>>>, rng: &mut SimRng| {
        if k < sequence.len() && loads[k].is_none() {
            let out = simulate_preload(catalog.get(sequence[k]), &subject.bandwidth, at, at + cfg.prefetch_lead_s, &params, rng);
            loads[k] = Some(match (out.ready_at_s, out.terminated_reason) {
                (Some(t), _) => Ok(t),
                (None, Some(reason)) => Err(reason),
                (None, None) => Err(LoadFailure::ConnectFailed),
            });
        }
    };
    for k in 0..lookahead {
        request(k, 0.0, &mut loads, rng);
    }

    let cap_s = cfg.session_cap_s();
    let mut background_load = subject.background_load;
    let mut pace = 1.0;
    let n_train = playlist.training.len();
    let (cp1, cp2) = cfg.checkpoint_test_counts();
    let skipper = subject.behavior == Behavior::Skipper;

    for (k, &asset_idx) in sequence.iter().enumerate() {
        let asset = catalog.get(asset_idx);
        match loads[k].expect("requested before needed") {
            Ok(ready) => {
                if ready > clock.now_s + 1e-9 {
                    record.network_unready += 1;
                    clock.now_s = ready;
                }
            }
            Err(LoadFailure::SessionTimeout) => return finish(record, &clock, Termination::Timeout),
            Err(_) => return finish(record, &clock, Termination::ConnectFailed),
        }
        if clock.now_s > cap_s {
            return finish(record, &clock, Termination::Timeout);
        }
        request(k + lookahead, clock.now_s, &mut loads, rng);

        let playback = simulate_playback(asset, &subject.cpu, background_load, cfg.tick_ms, rng);
        let skip_fraction: f64 = rng.random_range(0.1..0.6);
        let play_ms = if skipper { (asset.duration_ms() as f64 * skip_fraction) as u64 } else { playback.play_duration_ms };
        let z: f64 = StandardNormal.sample(rng);
        let rating_s = subject.rating_time_s * pace * (0.3 * z).exp();
        let cursor_start: u8 = rng.random_range(0..=100);
        let is_golden = asset.pool == Pool::Golden;
        let raw_score = score(subject, ctx.effects, asset.latent_quality, playback.stall_total_ms, is_golden, rng);

        if k < n_train {
            clock.now_s += play_ms as f64 / 1000.0 + rating_s;
            record.training_durations_ms.push(play_ms);
            if k + 1 == n_train {
                if let TrainingOutcome::Fail(_) = judge_training(&record.training_durations_ms, cfg) {
                    return finish(record, &clock, Termination::TrainingFailed);
                }
            }
            continue;
        }

        let end = clock.now_s + play_ms as f64 / 1000.0 + rating_s;
        if end > cap_s {
            clock.now_s = cap_s;
            return finish(record, &clock, Termination::Timeout);
        }
        clock.now_s = end;
        let position = k - n_train;
        if skipper {
            record.skipped_videos += u32::from(play_ms < asset.duration_ms());
        } else {
            let slot = playlist.test[position];
            record.ratings.push(RatingRecord {
                session_id: record.session_id.clone(),
                subject_id: subject.id.clone(),
                video_id: asset.id.clone(),
                position: position as u32,
                raw_score,
                stall_total_ms: playback.stall_total_ms,
                play_duration_ms: playback.play_duration_ms,
                is_golden: slot.tag == SlotTag::Golden,
                is_repeat: matches!(slot.tag, SlotTag::RepeatOf(_)),
                is_common: slot.tag == SlotTag::Common,
                cursor_start,
            });
        }

        let done = position + 1;
        let checkpoint = if done == cp1 {
            Some((Warning::Checkpoint1, cfg.checkpoint1_min))
        } else if done == cp2 {
            Some((Warning::Checkpoint2, cfg.checkpoint2_min))
        } else {
            None
        };
        if let Some((warning, limit_min)) = checkpoint {
            if clock.now_s > limit_min * 60.0 {
                record.warnings.insert(warning);
                background_load *= 0.5;
                pace *= 0.75;
            }
        }
    }

    if skipper {
        return finish(record, &clock, Termination::SkipperFlagged);
    }
    finish(record, &clock, Termination::Completed)
}

pub fn session_id(index: usize) -> String {
    format!("S{:05}", index + 1)
}

/// Runs every subject once. Each session draws from its own stream, so the
/// result does not depend on the execution mode.
pub fn simulate_population(
    subjects: &[SubjectProfile],
    cfg: &StudyConfig,
    catalog: &Catalog,
    design: &StudyDesign,
    effects: &RatingEffects,
    seed: u64,
    mode: Execution,
) -> Vec<SessionRecord> {
    let history: HashSet<String> = subjects.iter().filter(|s| s.participated_before).map(|s| s.id.clone()).collect();
    let ctx = SessionContext { cfg, catalog, design, effects, history: &history };
    map_range(subjects.len(), mode, |i| {
        let mut rng = stream(seed, domain::SESSION, i as u64);
        run_session(&subjects[i], &ctx, session_id(i), &mut rng)
    })
}
