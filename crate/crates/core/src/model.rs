//! Shared domain types, the study configuration and the video catalog generator.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::netsim::{BandwidthModel, CpuModel};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Resolution {
    pub width: u32,
    pub height: u32,
}

impl Resolution {
    pub const fn new(width: u32, height: u32) -> Self {
        Resolution { width, height }
    }

    pub fn orientation(self) -> Orientation {
        if self.height > self.width {
            Orientation::Portrait
        } else {
            Orientation::Landscape
        }
    }

    pub fn pixels(self) -> u64 {
        u64::from(self.width) * u64::from(self.height)
    }

    pub fn is_known(self) -> bool {
        RESOLUTION_CATALOG.contains(&self)
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

pub const FULL_HD: Resolution = Resolution::new(1920, 1080);

/// The 18 resolutions present in the database.
pub const RESOLUTION_CATALOG: [Resolution; 18] = [
    Resolution::new(1920, 1080),
    Resolution::new(1280, 720),
    Resolution::new(960, 540),
    Resolution::new(800, 450),
    Resolution::new(480, 640),
    Resolution::new(640, 480),
    Resolution::new(404, 720),
    Resolution::new(360, 640),
    Resolution::new(640, 360),
    Resolution::new(352, 640),
    Resolution::new(640, 352),
    Resolution::new(320, 568),
    Resolution::new(568, 320),
    Resolution::new(360, 480),
    Resolution::new(480, 360),
    Resolution::new(272, 480),
    Resolution::new(240, 320),
    Resolution::new(320, 240),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Landscape,
    Portrait,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pool {
    Golden,
    Fhd,
    Standard,
}

macro_rules! text_enum {
    ($ty:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $($ty::$variant => $text),+ }
            }
        }

        impl std::fmt::Display for $ty {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl std::str::FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($text => Ok($ty::$variant),)+
                    other => Err(format!("unknown {} `{}`", stringify!($ty), other)),
                }
            }
        }
    };
}
pub(crate) use text_enum;

text_enum!(Orientation { Landscape => "landscape", Portrait => "portrait" });
text_enum!(Pool { Golden => "golden", Fhd => "fhd", Standard => "standard" });

/// One catalog entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoAsset {
    pub id: String,
    pub width: u32,
    pub height: u32,
    pub orientation: Orientation,
    pub duration_s: f64,
    pub size_bits: u64,
    pub pool: Pool,
    /// Ground-truth quality in MOS units, `[0, 100]`.
    pub latent_quality: f64,
    /// Laboratory MOS; present exactly for golden assets.
    pub golden_ground_truth_mos: Option<f64>,
}

impl VideoAsset {
    pub fn resolution(&self) -> Resolution {
        Resolution::new(self.width, self.height)
    }

    pub fn duration_ms(&self) -> u64 {
        (self.duration_s * 1000.0).round() as u64
    }
}

/// An ordered, immutable set of assets.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Catalog {
    assets: Vec<VideoAsset>,
}

impl Catalog {
    /// Builds a catalog, checking per-asset invariants and id uniqueness.
    pub fn new(assets: Vec<VideoAsset>) -> Result<Self, ConfigError> {
        let mut seen = std::collections::HashSet::new();
        let mut problems = Vec::new();
        for a in &assets {
            if !seen.insert(a.id.as_str()) {
                problems.push(format!("duplicate video id `{}`", a.id));
            }
            if !a.resolution().is_known() {
                problems.push(format!("`{}`: unknown resolution {}", a.id, a.resolution()));
            }
            if a.duration_s <= 0.0 {
                problems.push(format!("`{}`: duration must be positive", a.id));
            }
            if !(0.0..=100.0).contains(&a.latent_quality) {
                problems.push(format!("`{}`: latent quality outside [0, 100]", a.id));
            }
            if (a.pool == Pool::Fhd) != (a.resolution() == FULL_HD) {
                problems.push(format!("`{}`: fhd pool iff 1920x1080", a.id));
            }
            if (a.pool == Pool::Golden) != a.golden_ground_truth_mos.is_some() {
                problems.push(format!("`{}`: golden MOS present iff golden pool", a.id));
            }
        }
        if problems.is_empty() {
            Ok(Catalog { assets })
        } else {
            Err(ConfigError::Violations(problems))
        }
    }

    pub fn assets(&self) -> &[VideoAsset] {
        &self.assets
    }

    pub fn len(&self) -> usize {
        self.assets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assets.is_empty()
    }

    pub fn get(&self, index: usize) -> &VideoAsset {
        &self.assets[index]
    }

    pub fn find(&self, id: &str) -> Option<&VideoAsset> {
        self.assets.iter().find(|a| a.id == id)
    }

    /// Indices of assets in `pool`, in catalog order.
    pub fn pool_indices(&self, pool: Pool) -> Vec<usize> {
        (0..self.assets.len()).filter(|&i| self.assets[i].pool == pool).collect()
    }

    /// Number of non-golden assets (the database proper).
    pub fn database_len(&self) -> usize {
        self.assets.iter().filter(|a| a.pool != Pool::Golden).count()
    }

    pub fn golden_ground_truth(&self) -> BTreeMap<String, f64> {
        self.assets.iter().filter_map(|a| a.golden_ground_truth_mos.map(|m| (a.id.clone(), m))).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QualityDistribution {
    Uniform {
        low: f64,
        high: f64,
    },
    /// Beta(alpha, beta) rescaled onto `[low, high]`.
    Beta {
        alpha: f64,
        beta: f64,
        low: f64,
        high: f64,
    },
}

impl QualityDistribution {
    fn sample(&self, rng: &mut SimRng) -> f64 {
        match *self {
            QualityDistribution::Uniform { low, high } => rng.random_range(low..=high),
            QualityDistribution::Beta { alpha, beta, low, high } => {
                let b = Beta::new(alpha, beta).expect("validated beta parameters");
                low + (high - low) * b.sample(rng)
            }
        }
    }

    fn validate(&self) -> Result<(), String> {
        let (low, high) = match *self {
            QualityDistribution::Uniform { low, high } => (low, high),
            QualityDistribution::Beta { alpha, beta, low, high } => {
                if !(alpha > 0.0 && beta > 0.0) {
                    return Err("beta shape parameters must be positive".into());
                }
                (low, high)
            }
        };
        if !(0.0 <= low && low <= high && high <= 100.0) {
            return Err(format!("quality range [{low}, {high}] must lie within [0, 100]"));
        }
        Ok(())
    }
}

/// Recipe for a synthetic catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CatalogSpec {
    /// Database videos (fhd + standard pools), golden assets not included.
    pub n_videos: usize,
    pub n_fhd: usize,
    pub n_golden: usize,
    /// Laboratory MOS of the golden assets; drawn from `quality` when empty.
    pub golden_mos: Vec<f64>,
    /// Relative frequency of each sub-FHD resolution within the standard pool.
    pub standard_resolution_weights: Vec<(Resolution, f64)>,
    pub quality: QualityDistribution,
    pub duration_s: f64,
    pub fps: f64,
    /// Encoded bits per pixel per frame, drawn uniformly per video.
    pub bits_per_pixel: (f64, f64),
}

impl Default for CatalogSpec {
    fn default() -> Self {
        let r = Resolution::new;
        CatalogSpec {
            n_videos: 585,
            n_fhd: 110,
            n_golden: 4,
            golden_mos: vec![17.5, 39.5, 61.5, 80.5],
            standard_resolution_weights: vec![
                (r(1280, 720), 0.520),
                (r(404, 720), 0.224),
                (r(960, 540), 0.008),
                (r(800, 450), 0.004),
                (r(480, 640), 0.006),
                (r(640, 480), 0.006),
                (r(360, 640), 0.008),
                (r(640, 360), 0.008),
                (r(352, 640), 0.004),
                (r(640, 352), 0.004),
                (r(320, 568), 0.003),
                (r(568, 320), 0.003),
                (r(360, 480), 0.004),
                (r(480, 360), 0.004),
                (r(272, 480), 0.002),
                (r(240, 320), 0.002),
                (r(320, 240), 0.002),
            ],
            quality: QualityDistribution::Beta { alpha: 1.6, beta: 1.6, low: 5.0, high: 95.0 },
            duration_s: 10.0,
            fps: 30.0,
            bits_per_pixel: (0.05, 0.15),
        }
    }
}

impl CatalogSpec {
    fn validate(&self) -> Result<(), ConfigError> {
        let mut v = Vec::new();
        if self.n_fhd >= self.n_videos {
            v.push("catalog needs at least one standard-pool video".to_string());
        }
        if !self.golden_mos.is_empty() && self.golden_mos.len() != self.n_golden {
            v.push(format!("golden_mos lists {} values for {} golden videos", self.golden_mos.len(), self.n_golden));
        }
        if self.golden_mos.iter().any(|m| !(0.0..=100.0).contains(m)) {
            v.push("golden MOS values must lie within [0, 100]".into());
        }
        if self.standard_resolution_weights.is_empty() {
            v.push("standard resolution weights are empty".into());
        }
        for (res, w) in &self.standard_resolution_weights {
            if !res.is_known() || *res == FULL_HD {
                v.push(format!("{res} is not a sub-FHD catalog resolution"));
            }
            if !(*w >= 0.0 && w.is_finite()) {
                v.push(format!("weight for {res} must be non-negative"));
            }
        }
        if self.standard_resolution_weights.iter().map(|(_, w)| w).sum::<f64>() <= 0.0 {
            v.push("standard resolution weights sum to zero".into());
        }
        if let Err(e) = self.quality.validate() {
            v.push(e);
        }
        if !(self.duration_s > 0.0 && self.fps > 0.0) {
            v.push("duration and fps must be positive".into());
        }
        let (lo, hi) = self.bits_per_pixel;
        if !(0.0 < lo && lo <= hi) {
            v.push("bits_per_pixel range must be positive and ordered".into());
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Violations(v))
        }
    }
}

/// Splits `total` into integer counts proportional to `weights` (largest remainder).
pub(crate) fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    // stable sort keeps ties in declaration order
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal)
    });
    let short = total - counts.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        counts[i] += 1;
    }
    counts
}

/// Generates a catalog whose resolution counts follow `spec` exactly.
pub fn generate_catalog(spec: &CatalogSpec, rng: &mut SimRng) -> Result<Catalog, ConfigError> {
    spec.validate()?;
    let n_standard = spec.n_videos - spec.n_fhd;
    let weights: Vec<f64> = spec.standard_resolution_weights.iter().map(|(_, w)| *w).collect();
    let counts = apportion(n_standard, &weights);

    let mut resolutions = vec![FULL_HD; spec.n_fhd];
    for ((res, _), count) in spec.standard_resolution_weights.iter().zip(counts) {
        resolutions.extend(std::iter::repeat_n(*res, count));
    }
    resolutions.shuffle(rng);

    let width = spec.n_videos.to_string().len().max(4);
    let mut assets = Vec::with_capacity(spec.n_videos + spec.n_golden);
    for (i, res) in resolutions.into_iter().enumerate() {
        let latent_quality = spec.quality.sample(rng);
        let size_bits = encoded_size(spec, res, rng);
        assets.push(VideoAsset {
            id: format!("V{:0width$}", i + 1),
            width: res.width,
            height: res.height,
            orientation: res.orientation(),
            duration_s: spec.duration_s,
            size_bits,
            pool: if res == FULL_HD { Pool::Fhd } else { Pool::Standard },
            latent_quality,
            golden_ground_truth_mos: None,
        });
    }
    let golden_res = Resolution::new(1280, 720);
    for g in 0..spec.n_golden {
        let mos = match spec.golden_mos.get(g) {
            Some(&m) => m,
            None => (spec.quality.sample(rng) * 2.0).round() / 2.0,
        };
        let size_bits = encoded_size(spec, golden_res, rng);
        assets.push(VideoAsset {
            id: format!("G{}", g + 1),
            width: golden_res.width,
            height: golden_res.height,
            orientation: Orientation::Landscape,
            duration_s: spec.duration_s,
            size_bits,
            pool: Pool::Golden,
            latent_quality: mos,
            golden_ground_truth_mos: Some(mos),
        });
    }
    Catalog::new(assets)
}

fn encoded_size(spec: &CatalogSpec, res: Resolution, rng: &mut SimRng) -> u64 {
    let (lo, hi) = spec.bits_per_pixel;
    let bpp = if lo == hi { lo } else { rng.random_range(lo..hi) };
    (res.pixels() as f64 * spec.fps * spec.duration_s * bpp).round() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceClass {
    Desktop,
    Laptop,
    Tv,
    Mobile,
    Tablet,
}

text_enum!(DeviceClass {
    Desktop => "desktop",
    Laptop => "laptop",
    Tv => "tv",
    Mobile => "mobile",
    Tablet => "tablet",
});

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplayProfile {
    pub width: u32,
    pub height: u32,
    pub device_class: DeviceClass,
    pub browser_supported: bool,
    pub zoom_percent: u32,
}

impl DisplayProfile {
    pub fn is_high_res(&self) -> bool {
        self.width >= FULL_HD.width && self.height >= FULL_HD.height
    }

    /// The profile after the session forces browser zoom back to 100%.
    pub fn normalized(&self) -> DisplayProfile {
        DisplayProfile { zoom_percent: 100, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Vision {
    Normal,
    CorrectedWorn,
    CorrectedNotWorn,
}

text_enum!(Vision {
    Normal => "normal",
    CorrectedWorn => "corrected_worn",
    CorrectedNotWorn => "corrected_not_worn",
});

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgeGroup {
    #[serde(rename = "<20")]
    Under20,
    #[serde(rename = "20-30")]
    From20To30,
    #[serde(rename = "30-40")]
    From30To40,
    #[serde(rename = ">40")]
    Over40,
}

text_enum!(AgeGroup {
    Under20 => "<20",
    From20To30 => "20-30",
    From30To40 => "30-40",
    Over40 => ">40",
});

impl AgeGroup {
    pub const ALL: [AgeGroup; 4] = [AgeGroup::Under20, AgeGroup::From20To30, AgeGroup::From30To40, AgeGroup::Over40];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Male,
    Female,
}

text_enum!(Gender { Male => "male", Female => "female" });

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ViewingDistance {
    #[serde(rename = "<15in")]
    Near,
    #[serde(rename = "15-30in")]
    Medium,
    #[serde(rename = ">30in")]
    Far,
}

text_enum!(ViewingDistance { Near => "<15in", Medium => "15-30in", Far => ">30in" });

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    Compliant,
    RandomRater,
    Skipper,
}

text_enum!(Behavior {
    Compliant => "compliant",
    RandomRater => "random_rater",
    Skipper => "skipper",
});

/// A synthetic rater.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectProfile {
    pub id: String,
    pub reliability: f64,
    pub vision: Vision,
    pub age_group: AgeGroup,
    pub gender: Gender,
    pub viewing_distance: ViewingDistance,
    pub display: DisplayProfile,
    pub bandwidth: BandwidthModel,
    pub cpu: CpuModel,
    /// Fraction of compute taken by other processes; scales stall durations.
    pub background_load: f64,
    /// Median seconds spent on the rating page per video.
    pub rating_time_s: f64,
    pub gain: f64,
    pub bias: f64,
    pub noise_sigma: f64,
    pub behavior: Behavior,
    pub participated_before: bool,
}

/// Protocol constants of one study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    pub n_training: usize,
    pub n_test: usize,
    pub n_golden: usize,
    pub n_random: usize,
    pub n_fhd_if_highres: usize,
    pub n_fhd_training_if_highres: usize,
    pub n_repeats: usize,
    pub n_common: usize,
    pub prefetch_lead_s: f64,
    /// Videos requested ahead of the one playing.
    pub prefetch_lookahead: usize,
    pub retry_gap_s: f64,
    pub max_retries: u32,
    pub reload_on_halt_max: u32,
    pub halt_window_s: f64,
    pub tick_ms: u64,
    pub session_cap_min: f64,
    pub checkpoint1_min: f64,
    pub checkpoint2_min: f64,
    pub overview_s: f64,
    pub instructions_s: f64,
    pub training_fail_single_s: f64,
    pub training_fail_multi_s: f64,
    pub training_fail_multi_count: usize,
    pub stall_session_reject_fraction: f64,
    pub bt500_outlier_fractions: (f64, f64),
    pub repeat_min_separation: usize,
    pub survey_misreport_rate: f64,
    pub rng_seed: u64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            n_training: 7,
            n_test: 43,
            n_golden: 4,
            n_random: 31,
            n_fhd_if_highres: 18,
            n_fhd_training_if_highres: 2,
            n_repeats: 4,
            n_common: 4,
            prefetch_lead_s: 30.0,
            prefetch_lookahead: 3,
            retry_gap_s: 10.0,
            max_retries: 2,
            reload_on_halt_max: 1,
            halt_window_s: 10.0,
            tick_ms: 100,
            session_cap_min: 30.0,
            checkpoint1_min: 10.0,
            checkpoint2_min: 20.0,
            overview_s: 30.0,
            instructions_s: 60.0,
            training_fail_single_s: 15.0,
            training_fail_multi_s: 12.0,
            training_fail_multi_count: 3,
            stall_session_reject_fraction: 0.75,
            bt500_outlier_fractions: (0.05, 0.3),
            repeat_min_separation: 8,
            survey_misreport_rate: 0.0,
            rng_seed: 0x5eed,
        }
    }
}

impl StudyConfig {
    pub fn composition_sum(&self) -> usize {
        self.n_golden + self.n_random + self.n_repeats + self.n_common
    }

    pub fn session_cap_s(&self) -> f64 {
        self.session_cap_min * 60.0
    }

    /// Number of test videos rated when the two progress checkpoints fire: after
    /// one and two thirds of all session videos (training included).
    pub fn checkpoint_test_counts(&self) -> (usize, usize) {
        let total = (self.n_training + self.n_test) as f64;
        let at = |k: f64| ((total * k / 3.0).round() as usize).saturating_sub(self.n_training);
        (at(1.0), at(2.0))
    }

    /// Every violated invariant; empty when the configuration is usable.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let sum = self.composition_sum();
        if sum != self.n_test {
            v.push(format!("composition sum {sum} ≠ {}", self.n_test));
        }
        if self.n_fhd_if_highres > self.n_random {
            v.push(format!("n_fhd_if_highres {} exceeds n_random {}", self.n_fhd_if_highres, self.n_random));
        }
        if self.n_repeats > self.n_random {
            v.push(format!("n_repeats {} exceeds n_random {}", self.n_repeats, self.n_random));
        }
        if self.n_fhd_training_if_highres > self.n_training {
            v.push("n_fhd_training_if_highres exceeds n_training".into());
        }
        let positive = [
            ("n_training", self.n_training as f64),
            ("n_test", self.n_test as f64),
            ("prefetch_lead_s", self.prefetch_lead_s),
            ("prefetch_lookahead", self.prefetch_lookahead as f64),
            ("retry_gap_s", self.retry_gap_s),
            ("halt_window_s", self.halt_window_s),
            ("tick_ms", self.tick_ms as f64),
            ("session_cap_min", self.session_cap_min),
            ("checkpoint1_min", self.checkpoint1_min),
            ("checkpoint2_min", self.checkpoint2_min),
            ("overview_s", self.overview_s),
            ("instructions_s", self.instructions_s),
            ("training_fail_single_s", self.training_fail_single_s),
            ("training_fail_multi_s", self.training_fail_multi_s),
            ("training_fail_multi_count", self.training_fail_multi_count as f64),
            ("repeat_min_separation", self.repeat_min_separation as f64),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                v.push(format!("{name} must be positive"));
            }
        }
        if !(self.checkpoint1_min < self.checkpoint2_min && self.checkpoint2_min < self.session_cap_min) {
            v.push("checkpoints must satisfy checkpoint1 < checkpoint2 < session cap".into());
        }
        if self.training_fail_multi_count > self.n_training {
            v.push("training_fail_multi_count exceeds n_training".into());
        }
        if !(self.stall_session_reject_fraction > 0.0 && self.stall_session_reject_fraction <= 1.0) {
            v.push("stall_session_reject_fraction must lie in (0, 1]".into());
        }
        let (p, q) = self.bt500_outlier_fractions;
        if !(p > 0.0 && p < 1.0 && q > 0.0 && q <= 1.0) {
            v.push("bt500_outlier_fractions must lie in (0, 1)".into());
        }
        if 2 * self.repeat_min_separation > self.n_test {
            v.push(format!("repeat_min_separation {} infeasible within {} slots", self.repeat_min_separation, self.n_test));
        }
        if !(0.0..=1.0).contains(&self.survey_misreport_rate) {
            v.push("survey_misreport_rate must lie in [0, 1]".into());
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

/// One test-phase presentation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub session_id: String,
    pub subject_id: String,
    pub video_id: String,
    pub position: u32,
    pub raw_score: u8,
    pub stall_total_ms: u64,
    pub play_duration_ms: u64,
    pub is_golden: bool,
    pub is_repeat: bool,
    pub is_common: bool,
    pub cursor_start: u8,
}

impl RatingRecord {
    pub fn stalled(&self) -> bool {
        self.stall_total_ms > 0
    }
}
