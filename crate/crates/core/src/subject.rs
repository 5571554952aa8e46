//! Synthetic raters: opinion-score generation and population sampling.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::model::{
    apportion, AgeGroup, Behavior, DeviceClass, DisplayProfile, Gender, Resolution, SubjectProfile, ViewingDistance, Vision,
};
use crate::netsim::{BandwidthModel, CpuClass, CpuModel, DropEvent};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaterParams {
    pub gain: f64,
    pub bias: f64,
    pub noise_sigma: f64,
    /// Score units lost per log-second of stalling.
    pub stall_penalty_coeff: f64,
    /// Offset applied to golden videos.
    pub context_shift: f64,
}

impl RaterParams {
    pub fn identity() -> Self {
        RaterParams { gain: 1.0, bias: 0.0, noise_sigma: 0.0, stall_penalty_coeff: 0.0, context_shift: 0.0 }
    }

    pub fn for_subject(subject: &SubjectProfile, effects: &RatingEffects) -> Self {
        RaterParams {
            gain: subject.gain,
            bias: subject.bias,
            noise_sigma: subject.noise_sigma,
            stall_penalty_coeff: effects.stall_penalty_coeff,
            context_shift: effects.context_shift,
        }
    }
}

/// Population-wide score effects shared by every rater.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RatingEffects {
    pub stall_penalty_coeff: f64,
    pub context_shift: f64,
}

impl Default for RatingEffects {
    fn default() -> Self {
        RatingEffects { stall_penalty_coeff: 20.0, context_shift: 8.5 }
    }
}

/// Score of a compliant rater. Always consumes exactly one normal draw.
pub fn rate(params: &RaterParams, latent_quality: f64, stall_total_ms: u64, is_golden: bool, rng: &mut SimRng) -> u8 {
    let z: f64 = StandardNormal.sample(rng);
    let shift = if is_golden { params.context_shift } else { 0.0 };
    let penalty = params.stall_penalty_coeff * (1.0 + stall_total_ms as f64 / 1000.0).ln();
    let s = params.gain * latent_quality + params.bias + shift - penalty + params.noise_sigma * z;
    s.round().clamp(0.0, 100.0) as u8
}

/// Score of `subject` under its behavior class.
pub fn score(
    subject: &SubjectProfile,
    effects: &RatingEffects,
    latent_quality: f64,
    stall_total_ms: u64,
    is_golden: bool,
    rng: &mut SimRng,
) -> u8 {
    match subject.behavior {
        Behavior::RandomRater => rng.random_range(0..=100),
        Behavior::Compliant | Behavior::Skipper => {
            rate(&RaterParams::for_subject(subject, effects), latent_quality, stall_total_ms, is_golden, rng)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplayShare {
    pub width: u32,
    pub height: u32,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RaterDistribution {
    pub gain_mean: f64,
    pub gain_sd: f64,
    pub bias_sd: f64,
    pub noise_median: f64,
    pub noise_log_sd: f64,
    /// Noise multiplier for subjects not wearing their corrective lenses.
    pub uncorrected_noise_factor: f64,
}

impl Default for RaterDistribution {
    fn default() -> Self {
        RaterDistribution {
            gain_mean: 1.0,
            gain_sd: 0.1,
            bias_sd: 17.5,
            noise_median: 5.0,
            noise_log_sd: 0.35,
            uncorrected_noise_factor: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkSpec {
    pub median_rate_bps: f64,
    pub rate_log_sd: f64,
    pub jitter_sigma: f64,
    pub connect_fail_prob: f64,
    /// Chance that a session contains one outage window.
    pub drop_prob: f64,
    pub drop_duration_s: (f64, f64),
    pub horizon_s: f64,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        NetworkSpec {
            median_rate_bps: 20e6,
            rate_log_sd: 0.9,
            jitter_sigma: 0.1,
            connect_fail_prob: 0.002,
            drop_prob: 0.1,
            drop_duration_s: (2.0, 20.0),
            horizon_s: 1800.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CpuSpec {
    pub mix: Vec<(CpuClass, f64)>,
    pub fast: CpuModel,
    pub medium: CpuModel,
    pub slow: CpuModel,
    pub background_load: (f64, f64),
}

impl Default for CpuSpec {
    fn default() -> Self {
        CpuSpec {
            mix: vec![(CpuClass::Fast, 0.6), (CpuClass::Medium, 0.3), (CpuClass::Slow, 0.1)],
            fast: CpuModel::default_for(CpuClass::Fast),
            medium: CpuModel::default_for(CpuClass::Medium),
            slow: CpuModel::default_for(CpuClass::Slow),
            background_load: (0.0, 0.5),
        }
    }
}

impl CpuSpec {
    pub fn model(&self, class: CpuClass) -> &CpuModel {
        match class {
            CpuClass::Fast => &self.fast,
            CpuClass::Medium => &self.medium,
            CpuClass::Slow => &self.slow,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PopulationSpec {
    pub n_subjects: usize,
    pub share_random_raters: f64,
    pub share_skippers: f64,
    pub share_uncorrected_vision: f64,
    pub share_corrected_worn: f64,
    pub share_low_reliability: f64,
    pub share_unsupported_browser: f64,
    pub share_participated_before: f64,
    pub age_mix: Vec<(AgeGroup, f64)>,
    pub female_share: f64,
    pub distance_mix: Vec<(ViewingDistance, f64)>,
    pub device_mix: Vec<(DeviceClass, f64)>,
    pub display_mix: Vec<DisplayShare>,
    pub age_offsets: Vec<(AgeGroup, f64)>,
    pub female_offset: f64,
    pub rater: RaterDistribution,
    pub effects: RatingEffects,
    pub rating_time_median_s: f64,
    pub rating_time_log_sd: f64,
    pub network: NetworkSpec,
    pub cpu: CpuSpec,
}

impl Default for PopulationSpec {
    fn default() -> Self {
        let d = |width, height, weight| DisplayShare { width, height, weight };
        PopulationSpec {
            n_subjects: 4776,
            share_random_raters: 0.01,
            share_skippers: 0.02,
            share_uncorrected_vision: 0.025,
            share_corrected_worn: 0.35,
            share_low_reliability: 0.01,
            share_unsupported_browser: 0.02,
            share_participated_before: 0.01,
            age_mix: vec![(AgeGroup::Under20, 0.05), (AgeGroup::From20To30, 0.50), (AgeGroup::From30To40, 0.28), (AgeGroup::Over40, 0.17)],
            female_share: 0.4,
            distance_mix: vec![(ViewingDistance::Near, 0.35), (ViewingDistance::Medium, 0.55), (ViewingDistance::Far, 0.10)],
            device_mix: vec![
                (DeviceClass::Laptop, 0.55),
                (DeviceClass::Desktop, 0.40),
                (DeviceClass::Tv, 0.01),
                (DeviceClass::Mobile, 0.03),
                (DeviceClass::Tablet, 0.01),
            ],
            display_mix: vec![
                d(1366, 768, 0.40),
                d(1920, 1080, 0.28),
                d(1440, 900, 0.08),
                d(1600, 900, 0.07),
                d(1536, 864, 0.06),
                d(1280, 720, 0.04),
                d(2560, 1440, 0.03),
                d(1280, 1024, 0.03),
                d(1024, 768, 0.01),
            ],
            age_offsets: vec![
                (AgeGroup::Under20, -3.0),
                (AgeGroup::From20To30, -1.0),
                (AgeGroup::From30To40, 0.0),
                (AgeGroup::Over40, 1.0),
            ],
            female_offset: -2.0,
            rater: RaterDistribution::default(),
            effects: RatingEffects::default(),
            rating_time_median_s: 6.0,
            rating_time_log_sd: 0.5,
            network: NetworkSpec::default(),
            cpu: CpuSpec::default(),
        }
    }
}

impl PopulationSpec {
    /// A population of identical, noiseless, always-eligible compliant raters.
    pub fn ideal(n_subjects: usize) -> Self {
        PopulationSpec {
            n_subjects,
            share_random_raters: 0.0,
            share_skippers: 0.0,
            share_uncorrected_vision: 0.0,
            share_low_reliability: 0.0,
            share_unsupported_browser: 0.0,
            share_participated_before: 0.0,
            device_mix: vec![(DeviceClass::Desktop, 1.0)],
            age_offsets: Vec::new(),
            female_offset: 0.0,
            rater: RaterDistribution { gain_sd: 0.0, bias_sd: 0.0, noise_median: 0.0, ..RaterDistribution::default() },
            network: NetworkSpec { connect_fail_prob: 0.0, drop_prob: 0.0, jitter_sigma: 0.0, ..NetworkSpec::default() },
            ..PopulationSpec::default()
        }
    }

    pub fn age_offset(&self, group: AgeGroup) -> f64 {
        self.age_offsets.iter().find(|(g, _)| *g == group).map_or(0.0, |(_, o)| *o)
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let shares = [
            ("share_random_raters", self.share_random_raters),
            ("share_skippers", self.share_skippers),
            ("share_uncorrected_vision", self.share_uncorrected_vision),
            ("share_corrected_worn", self.share_corrected_worn),
            ("share_low_reliability", self.share_low_reliability),
            ("share_unsupported_browser", self.share_unsupported_browser),
            ("share_participated_before", self.share_participated_before),
            ("female_share", self.female_share),
        ];
        for (name, s) in shares {
            if !(0.0..=1.0).contains(&s) {
                v.push(format!("{name} = {s} outside [0, 1]"));
            }
        }
        if self.share_random_raters + self.share_skippers > 1.0 {
            v.push("random-rater and skipper shares exceed 1".into());
        }
        if self.share_uncorrected_vision + self.share_corrected_worn > 1.0 {
            v.push("vision shares exceed 1".into());
        }
        let mix_ok = |w: &mut dyn Iterator<Item = f64>| {
            let w: Vec<f64> = w.collect();
            !w.is_empty() && w.iter().all(|x| *x >= 0.0 && x.is_finite()) && w.iter().sum::<f64>() > 0.0
        };
        if !mix_ok(&mut self.age_mix.iter().map(|x| x.1)) {
            v.push("age mix is empty or invalid".into());
        }
        if !mix_ok(&mut self.distance_mix.iter().map(|x| x.1)) {
            v.push("distance mix is empty or invalid".into());
        }
        if !mix_ok(&mut self.device_mix.iter().map(|x| x.1)) {
            v.push("device mix is empty or invalid".into());
        }
        if !mix_ok(&mut self.display_mix.iter().map(|x| x.weight)) {
            v.push("display mix is empty or invalid".into());
        }
        if !mix_ok(&mut self.cpu.mix.iter().map(|x| x.1)) {
            v.push("cpu mix is empty or invalid".into());
        }
        let r = &self.rater;
        if !(r.gain_sd >= 0.0 && r.bias_sd >= 0.0 && r.noise_median >= 0.0 && r.noise_log_sd >= 0.0) {
            v.push("rater spreads must be non-negative".into());
        }
        if !(r.uncorrected_noise_factor >= 1.0) {
            v.push("uncorrected_noise_factor must be at least 1".into());
        }
        if !(self.effects.stall_penalty_coeff >= 0.0) {
            v.push("stall_penalty_coeff must be non-negative".into());
        }
        if !(self.rating_time_median_s > 0.0 && self.rating_time_log_sd >= 0.0) {
            v.push("rating time parameters invalid".into());
        }
        let n = &self.network;
        if !(n.median_rate_bps > 0.0 && n.rate_log_sd >= 0.0 && n.jitter_sigma >= 0.0) {
            v.push("network rate parameters invalid".into());
        }
        if !(0.0..=1.0).contains(&n.connect_fail_prob) || !(0.0..=1.0).contains(&n.drop_prob) {
            v.push("network probabilities outside [0, 1]".into());
        }
        if !(0.0 <= n.drop_duration_s.0 && n.drop_duration_s.0 <= n.drop_duration_s.1) {
            v.push("drop duration range invalid".into());
        }
        for class in [CpuClass::Fast, CpuClass::Medium, CpuClass::Slow] {
            if let Err(ConfigError::Violations(mut e)) = self.cpu.model(class).validate() {
                v.append(&mut e);
            }
        }
        let (lo, hi) = self.cpu.background_load;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            v.push("background load range must lie within [0, 1]".into());
        }
        v
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Violations(v))
        }
    }
}

/// `n` labels with exact proportions, randomly ordered.
fn shuffled_labels<T: Copy>(n: usize, mix: &[(T, f64)], rng: &mut SimRng) -> Vec<T> {
    let weights: Vec<f64> = mix.iter().map(|m| m.1).collect();
    let mut out = Vec::with_capacity(n);
    for ((label, _), count) in mix.iter().zip(apportion(n, &weights)) {
        out.extend(std::iter::repeat_n(*label, count));
    }
    out.shuffle(rng);
    out
}

/// `n` flags of which `round(share·n)` are set, randomly ordered.
fn shuffled_flags(n: usize, share: f64, rng: &mut SimRng) -> Vec<bool> {
    let k = ((share * n as f64).round() as usize).min(n);
    let mut out: Vec<bool> = (0..n).map(|i| i < k).collect();
    out.shuffle(rng);
    out
}

pub fn subject_id(index: usize) -> String {
    format!("W{:05}", index + 1)
}

/// Samples a population. Categorical attributes are realized with exact
/// proportions; continuous ones are drawn per subject.
pub fn spawn_population(spec: &PopulationSpec, rng: &mut SimRng) -> Result<Vec<SubjectProfile>, ConfigError> {
    spec.validate()?;
    let n = spec.n_subjects;

    let n_random = (spec.share_random_raters * n as f64).round() as usize;
    let n_skip = (spec.share_skippers * n as f64).round() as usize;
    if n_random + n_skip > n {
        return Err(ConfigError::Invalid("behavior shares round above the population size".into()));
    }
    let mut behaviors: Vec<Behavior> = std::iter::repeat_n(Behavior::RandomRater, n_random)
        .chain(std::iter::repeat_n(Behavior::Skipper, n_skip))
        .chain(std::iter::repeat_n(Behavior::Compliant, n - n_random - n_skip))
        .collect();
    behaviors.shuffle(rng);

    let normal_vision = 1.0 - spec.share_uncorrected_vision - spec.share_corrected_worn;
    let vision = shuffled_labels(
        n,
        &[
            (Vision::CorrectedNotWorn, spec.share_uncorrected_vision),
            (Vision::CorrectedWorn, spec.share_corrected_worn),
            (Vision::Normal, normal_vision.max(0.0)),
        ],
        rng,
    );
    let ages = shuffled_labels(n, &spec.age_mix, rng);
    let genders = shuffled_labels(n, &[(Gender::Female, spec.female_share), (Gender::Male, 1.0 - spec.female_share)], rng);
    let distances = shuffled_labels(n, &spec.distance_mix, rng);
    let devices = shuffled_labels(n, &spec.device_mix, rng);
    let display_mix: Vec<(Resolution, f64)> = spec.display_mix.iter().map(|d| (Resolution::new(d.width, d.height), d.weight)).collect();
    let displays = shuffled_labels(n, &display_mix, rng);
    let cpus = shuffled_labels(n, &spec.cpu.mix, rng);
    let low_reliability = shuffled_flags(n, spec.share_low_reliability, rng);
    let unsupported = shuffled_flags(n, spec.share_unsupported_browser, rng);
    let repeaters = shuffled_flags(n, spec.share_participated_before, rng);

    let r = &spec.rater;
    let gain_dist = Normal::new(r.gain_mean, r.gain_sd).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let bias_dist = Normal::new(0.0, r.bias_sd).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let lognormal =
        |median: f64, sd: f64| LogNormal::new(median.max(f64::MIN_POSITIVE).ln(), sd).map_err(|e| ConfigError::Invalid(e.to_string()));
    let noise_dist = lognormal(r.noise_median, r.noise_log_sd)?;
    let rate_dist = lognormal(spec.network.median_rate_bps, spec.network.rate_log_sd)?;
    let time_dist = lognormal(spec.rating_time_median_s, spec.rating_time_log_sd)?;
    let zooms = [(100_u32, 0.8), (90, 0.05), (110, 0.1), (125, 0.05)];

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let behavior = behaviors[i];
        let age_group = ages[i];
        let gender = genders[i];
        let demographic = spec.age_offset(age_group) + if gender == Gender::Female { spec.female_offset } else { 0.0 };

        let gain = gain_dist.sample(rng).max(0.0);
        let bias = bias_dist.sample(rng) + demographic;
        let mut noise_sigma = if r.noise_median > 0.0 { noise_dist.sample(rng) } else { 0.0 };
        if vision[i] == Vision::CorrectedNotWorn {
            noise_sigma *= r.uncorrected_noise_factor;
        }
        let (gain, bias, noise_sigma) = match behavior {
            Behavior::RandomRater => (0.0, 0.0, 0.0),
            _ => (gain, bias, noise_sigma),
        };

        let reliability = if low_reliability[i] { rng.random_range(0.70..=0.90) } else { rng.random_range(0.905..=1.0) };

        let zoom_u: f64 = rng.random();
        let mut acc = 0.0;
        let zoom_percent = zooms
            .iter()
            .find(|(_, w)| {
                acc += w;
                zoom_u < acc
            })
            .map_or(100, |z| z.0);
        let display = DisplayProfile {
            width: displays[i].width,
            height: displays[i].height,
            device_class: devices[i],
            browser_supported: !unsupported[i],
            zoom_percent,
        };

        let net = &spec.network;
        let mut drop_events = Vec::new();
        if rng.random::<f64>() < net.drop_prob {
            let (lo, hi) = net.drop_duration_s;
            let start_s = rng.random_range(0.0..net.horizon_s.max(f64::MIN_POSITIVE));
            let duration_s = if lo < hi { rng.random_range(lo..hi) } else { lo };
            let rate_factor = if rng.random::<bool>() { 0.0 } else { rng.random_range(0.05..0.3) };
            drop_events.push(DropEvent { start_s, duration_s, rate_factor });
        }
        let bandwidth = BandwidthModel {
            base_rate_bps: rate_dist.sample(rng),
            drop_events,
            jitter_sigma: net.jitter_sigma,
            connect_fail_prob: net.connect_fail_prob,
        };

        let (lo, hi) = spec.cpu.background_load;
        let background_load = if lo < hi { rng.random_range(lo..hi) } else { lo };

        out.push(SubjectProfile {
            id: subject_id(i),
            reliability,
            vision: vision[i],
            age_group,
            gender,
            viewing_distance: distances[i],
            display,
            bandwidth,
            cpu: spec.cpu.model(cpus[i]).clone(),
            background_load,
            rating_time_s: time_dist.sample(rng),
            gain,
            bias,
            noise_sigma,
            behavior,
            participated_before: repeaters[i],
        });
    }
    Ok(out)
}
