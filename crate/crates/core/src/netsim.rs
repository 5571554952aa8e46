//! Download, prefetch and playback simulation.
//!
//! Time is measured in seconds from session start. Transfers advance on a fixed
//! tick; the finishing tick is interpolated so ready times are not quantized.

use std::io::Read;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, DataError};
use crate::model::{text_enum, StudyConfig, VideoAsset};
use crate::rng::SimRng;

/// A window during which the link delivers `rate_factor` of its base rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropEvent {
    pub start_s: f64,
    pub duration_s: f64,
    pub rate_factor: f64,
}

impl DropEvent {
    fn covers(&self, t: f64) -> bool {
        t >= self.start_s && t - self.start_s < self.duration_s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthModel {
    /// Bits per second; `f64::INFINITY` models an instantaneous link.
    pub base_rate_bps: f64,
    #[serde(default)]
    pub drop_events: Vec<DropEvent>,
    /// Log-scale sd of a per-tick multiplicative rate perturbation.
    #[serde(default)]
    pub jitter_sigma: f64,
    /// Probability that one connection attempt fails.
    #[serde(default)]
    pub connect_fail_prob: f64,
}

impl BandwidthModel {
    pub fn steady(base_rate_bps: f64) -> Self {
        BandwidthModel { base_rate_bps, drop_events: Vec::new(), jitter_sigma: 0.0, connect_fail_prob: 0.0 }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut v = Vec::new();
        if !(self.base_rate_bps > 0.0) {
            v.push("base rate must be positive".to_string());
        }
        for e in &self.drop_events {
            if !(0.0..=1.0).contains(&e.rate_factor) {
                v.push(format!("drop rate factor {} outside [0, 1]", e.rate_factor));
            }
            if !(e.duration_s >= 0.0) {
                v.push("drop duration must be non-negative".into());
            }
        }
        if !(self.jitter_sigma >= 0.0) {
            v.push("jitter sigma must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.connect_fail_prob) {
            v.push("connect failure probability outside [0, 1]".into());
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Violations(v))
        }
    }

    /// Fraction of the base rate available at `t`.
    pub fn factor_at(&self, t: f64) -> f64 {
        self.drop_events.iter().filter(|e| e.covers(t)).map(|e| e.rate_factor).product()
    }

    /// Builds a model from a piecewise-constant `t_s,rate_bps` trace. The peak rate
    /// becomes the base rate and every slower segment becomes a drop event; the
    /// last segment holds forever.
    pub fn from_trace<R: Read>(reader: R) -> Result<Self, DataError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h.trim() == name).ok_or_else(|| DataError::MissingColumn(name.to_string()));
        let (ti, ri) = (col("t_s")?, col("rate_bps")?);
        let mut points = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64, DataError> {
                rec.get(i).unwrap_or("").trim().parse::<f64>().map_err(|e| DataError::Row { row: row + 2, message: e.to_string() })
            };
            let (t, r) = (parse(ti)?, parse(ri)?);
            if r < 0.0 || !r.is_finite() {
                return Err(DataError::Row { row: row + 2, message: format!("invalid rate {r}") });
            }
            if points.last().is_some_and(|&(pt, _)| t <= pt) {
                return Err(DataError::Row { row: row + 2, message: "times must increase".into() });
            }
            points.push((t, r));
        }
        let peak = points.iter().map(|p| p.1).fold(0.0_f64, f64::max);
        if peak <= 0.0 {
            return Err(DataError::Integrity("trace has no positive rate".into()));
        }
        let mut drop_events = Vec::new();
        if let Some(&(t0, _)) = points.first() {
            if t0 > 0.0 {
                drop_events.push(DropEvent { start_s: 0.0, duration_s: t0, rate_factor: 0.0 });
            }
        }
        for (i, &(t, r)) in points.iter().enumerate() {
            if r < peak {
                let end = points.get(i + 1).map_or(f64::INFINITY, |p| p.0);
                drop_events.push(DropEvent { start_s: t, duration_s: end - t, rate_factor: r / peak });
            }
        }
        Ok(BandwidthModel { base_rate_bps: peak, drop_events, jitter_sigma: 0.0, connect_fail_prob: 0.0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CpuClass {
    Fast,
    Medium,
    Slow,
}

text_enum!(CpuClass { Fast => "fast", Medium => "medium", Slow => "slow" });

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpuModel {
    pub class: CpuClass,
    pub stall_prob_per_video: f64,
    /// Log-ms location of the stall duration.
    pub stall_mu: f64,
    pub stall_sigma: f64,
}

impl CpuModel {
    /// Calibrated per-class defaults.
    pub fn default_for(class: CpuClass) -> Self {
        let (p, median_ms, sigma) = match class {
            CpuClass::Fast => (0.10, 250.0_f64, 0.6),
            CpuClass::Medium => (0.28, 400.0, 0.8),
            CpuClass::Slow => (0.85, 1500.0, 1.0),
        };
        CpuModel { class, stall_prob_per_video: p, stall_mu: median_ms.ln(), stall_sigma: sigma }
    }

    pub fn never_stalls() -> Self {
        CpuModel { stall_prob_per_video: 0.0, ..CpuModel::default_for(CpuClass::Fast) }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut v = Vec::new();
        if !(0.0..=1.0).contains(&self.stall_prob_per_video) {
            v.push(format!("stall probability {} outside [0, 1]", self.stall_prob_per_video));
        }
        if !(self.stall_sigma >= 0.0 && self.stall_mu.is_finite()) {
            v.push("stall duration parameters must be finite with sigma ≥ 0".into());
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Violations(v))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadFailure {
    ConnectFailed,
    HaltedTwice,
    SessionTimeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadOutcome {
    pub connected: bool,
    pub attempts: u32,
    pub reloads: u32,
    pub ready_at_s: Option<f64>,
    pub terminated_reason: Option<LoadFailure>,
}

/// Protocol constants consumed by [`simulate_preload`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreloadParams {
    pub retry_gap_s: f64,
    pub max_retries: u32,
    pub reload_on_halt_max: u32,
    pub halt_window_s: f64,
    pub tick_s: f64,
    /// Loads still unfinished at this time end with `SessionTimeout`.
    pub deadline_s: f64,
}

impl PreloadParams {
    pub fn from_config(cfg: &StudyConfig) -> Self {
        PreloadParams {
            retry_gap_s: cfg.retry_gap_s,
            max_retries: cfg.max_retries,
            reload_on_halt_max: cfg.reload_on_halt_max,
            halt_window_s: cfg.halt_window_s,
            tick_s: cfg.tick_ms as f64 / 1000.0,
            deadline_s: cfg.session_cap_s(),
        }
    }
}

/// Simulates connecting to and fully downloading `asset`.
///
/// Every call consumes the same number of connection draws regardless of
/// outcome, so callers sharing a stream stay aligned.
pub fn simulate_preload(
    asset: &VideoAsset,
    bw: &BandwidthModel,
    request_time_s: f64,
    needed_time_s: f64,
    params: &PreloadParams,
    rng: &mut SimRng,
) -> LoadOutcome {
    debug_assert!(request_time_s <= needed_time_s);
    let max_attempts = params.max_retries + 1;
    let draws: Vec<bool> = (0..max_attempts).map(|_| rng.random::<f64>() >= bw.connect_fail_prob).collect();
    let Some(first_ok) = draws.iter().position(|&ok| ok) else {
        return LoadOutcome {
            connected: false,
            attempts: max_attempts,
            reloads: 0,
            ready_at_s: None,
            terminated_reason: Some(LoadFailure::ConnectFailed),
        };
    };
    let attempts = first_ok as u32 + 1;
    let connected_at = request_time_s + first_ok as f64 * params.retry_gap_s;
    let finish = |reloads, ready: Result<f64, LoadFailure>| LoadOutcome {
        connected: true,
        attempts,
        reloads,
        ready_at_s: ready.ok(),
        terminated_reason: ready.err(),
    };
    if connected_at > params.deadline_s {
        return finish(0, Err(LoadFailure::SessionTimeout));
    }

    let size = asset.size_bits as f64;
    if size == 0.0 || (bw.base_rate_bps.is_infinite() && bw.factor_at(connected_at) > 0.0) {
        return finish(0, Ok(connected_at));
    }

    let dt = params.tick_s;
    let mut reloads = 0;
    let mut remaining = size;
    let mut last_progress = connected_at;
    let mut tick = 0_u64;
    loop {
        let t = connected_at + tick as f64 * dt;
        if t > params.deadline_s {
            return finish(reloads, Err(LoadFailure::SessionTimeout));
        }
        let factor = bw.factor_at(t);
        let jitter = if bw.jitter_sigma > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            (bw.jitter_sigma * z - 0.5 * bw.jitter_sigma * bw.jitter_sigma).exp()
        } else {
            1.0
        };
        let rate = if factor == 0.0 { 0.0 } else { bw.base_rate_bps * factor * jitter };
        let progress = rate * dt;
        if progress >= remaining {
            return finish(reloads, Ok(t + remaining / rate));
        }
        tick += 1;
        if progress > 0.0 {
            remaining -= progress;
            last_progress = connected_at + tick as f64 * dt;
        } else if connected_at + tick as f64 * dt - last_progress >= params.halt_window_s - 1e-9 {
            if reloads >= params.reload_on_halt_max {
                return finish(reloads, Err(LoadFailure::HaltedTwice));
            }
            reloads += 1;
            remaining = size;
            last_progress = connected_at + tick as f64 * dt;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Playback {
    pub play_duration_ms: u64,
    pub stall_total_ms: u64,
}

/// Plays a fully loaded asset. Stalls come only from compute contention: one
/// Bernoulli draw decides whether the video freezes and a lognormal draw, scaled
/// by `1 + background_load`, gives the total frozen time rounded up to the tick.
pub fn simulate_playback(asset: &VideoAsset, cpu: &CpuModel, background_load: f64, tick_ms: u64, rng: &mut SimRng) -> Playback {
    let u: f64 = rng.random();
    let z: f64 = StandardNormal.sample(rng);
    let stall_total_ms = if u < cpu.stall_prob_per_video {
        let raw = (cpu.stall_mu + cpu.stall_sigma * z).exp() * (1.0 + background_load.max(0.0));
        let tick = tick_ms.max(1) as f64;
        ((raw / tick).ceil() * tick) as u64
    } else {
        0
    };
    Playback { play_duration_ms: asset.duration_ms() + stall_total_ms, stall_total_ms }
}

/// Nominal pacing used to plan prefetch requests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaybackPlan {
    /// When the first playlist item must be ready.
    pub first_needed_s: f64,
    /// Time between consecutive playback starts.
    pub per_video_s: f64,
    /// Item `k` is requested when item `k - lookahead` starts playing.
    pub lookahead: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrefetchRequest {
    pub position: usize,
    pub request_time_s: f64,
    pub needed_time_s: f64,
}

/// Plans download requests for a playlist played at nominal pace.
pub fn schedule_prefetch(playlist: &[&VideoAsset], plan: &PlaybackPlan, cfg: &StudyConfig) -> Result<Vec<PrefetchRequest>, ConfigError> {
    if playlist.is_empty() {
        return Err(ConfigError::Invalid("playlist is empty".into()));
    }
    if plan.lookahead == 0 || plan.per_video_s <= 0.0 {
        return Err(ConfigError::Invalid("lookahead and pacing must be positive".into()));
    }
    let needed = |k: usize| plan.first_needed_s + k as f64 * plan.per_video_s;
    let last_end = needed(playlist.len() - 1) + playlist[playlist.len() - 1].duration_s;
    if last_end > cfg.session_cap_s() {
        return Err(ConfigError::Invalid(format!(
            "{} videos need {:.0} s, beyond the {:.0} s session cap",
            playlist.len(),
            last_end,
            cfg.session_cap_s()
        )));
    }
    let requests: Vec<PrefetchRequest> = (0..playlist.len())
        .map(|k| PrefetchRequest {
            position: k,
            request_time_s: if k < plan.lookahead { 0.0 } else { needed(k - plan.lookahead) },
            needed_time_s: needed(k),
        })
        .collect();
    if let Some(r) = requests.iter().find(|r| r.needed_time_s - r.request_time_s < cfg.prefetch_lead_s) {
        return Err(ConfigError::Invalid(format!("item {} gets only {:.1} s of lead", r.position, r.needed_time_s - r.request_time_s)));
    }
    Ok(requests)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Orientation, Pool};
    use crate::rng::{domain, stream};
    use proptest::prelude::*;

    fn asset(size_bits: u64) -> VideoAsset {
        VideoAsset {
            id: "V1".into(),
            width: 1280,
            height: 720,
            orientation: Orientation::Landscape,
            duration_s: 10.0,
            size_bits,
            pool: Pool::Standard,
            latent_quality: 50.0,
            golden_ground_truth_mos: None,
        }
    }

    fn params() -> PreloadParams {
        PreloadParams::from_config(&StudyConfig::default())
    }

    fn rng(i: u64) -> SimRng {
        stream(3, domain::TEST, i)
    }

    #[test]
    fn constant_rate_ready_time_is_size_over_rate() {
        let out = simulate_preload(&asset(64_000_000), &BandwidthModel::steady(4e6), 5.0, 35.0, &params(), &mut rng(0));
        let ready = out.ready_at_s.unwrap();
        assert!((ready - 21.0).abs() < 1e-9, "{ready}");
        assert_eq!((out.attempts, out.reloads, out.terminated_reason), (1, 0, None));
        assert!(ready <= 35.0);
    }

    #[test]
    fn infinite_bandwidth_is_instant() {
        let out = simulate_preload(&asset(1 << 30), &BandwidthModel::steady(f64::INFINITY), 12.0, 42.0, &params(), &mut rng(0));
        assert_eq!(out.ready_at_s, Some(12.0));
        assert_eq!(out.attempts, 1);
    }

    #[test]
    fn three_failed_connections_terminate() {
        let bw = BandwidthModel { connect_fail_prob: 1.0, ..BandwidthModel::steady(1e7) };
        let out = simulate_preload(&asset(1000), &bw, 0.0, 30.0, &params(), &mut rng(0));
        assert!(!out.connected);
        assert_eq!(out.attempts, 3);
        assert_eq!(out.terminated_reason, Some(LoadFailure::ConnectFailed));
        assert_eq!(out.ready_at_s, None);
    }

    #[test]
    fn retries_are_spaced_by_the_gap() {
        let bw = BandwidthModel { connect_fail_prob: 0.5, ..BandwidthModel::steady(f64::INFINITY) };
        for i in 0..64 {
            let out = simulate_preload(&asset(1000), &bw, 100.0, 130.0, &params(), &mut rng(i));
            if let Some(ready) = out.ready_at_s {
                assert_eq!(ready, 100.0 + 10.0 * f64::from(out.attempts - 1));
            }
        }
    }

    #[test]
    fn single_halt_reloads_once() {
        let bw = BandwidthModel {
            drop_events: vec![DropEvent { start_s: 1.0, duration_s: 12.0, rate_factor: 0.0 }],
            ..BandwidthModel::steady(1e6)
        };
        let out = simulate_preload(&asset(2_000_000), &bw, 0.0, 30.0, &params(), &mut rng(0));
        assert_eq!(out.reloads, 1);
        // halted at 1 s, torn down at 11 s, rate back at 13 s, full 2 s transfer
        assert!((out.ready_at_s.unwrap() - 15.0).abs() < 1e-9, "{out:?}");
    }

    #[test]
    fn second_halt_terminates() {
        let bw = BandwidthModel {
            drop_events: vec![DropEvent { start_s: 1.0, duration_s: 100.0, rate_factor: 0.0 }],
            ..BandwidthModel::steady(1e6)
        };
        let out = simulate_preload(&asset(2_000_000), &bw, 0.0, 30.0, &params(), &mut rng(0));
        assert_eq!(out.terminated_reason, Some(LoadFailure::HaltedTwice));
        assert_eq!(out.reloads, 1);
    }

    #[test]
    fn slow_link_hits_the_deadline() {
        let p = PreloadParams { deadline_s: 60.0, ..params() };
        let out = simulate_preload(&asset(1_000_000_000), &BandwidthModel::steady(1e5), 0.0, 30.0, &p, &mut rng(0));
        assert_eq!(out.terminated_reason, Some(LoadFailure::SessionTimeout));
    }

    #[test]
    fn trace_becomes_drop_events() {
        let csv = "t_s,rate_bps\n0,8000000\n5,2000000\n9,8000000\n";
        let bw = BandwidthModel::from_trace(csv.as_bytes()).unwrap();
        assert_eq!(bw.base_rate_bps, 8e6);
        assert_eq!(bw.factor_at(1.0), 1.0);
        assert_eq!(bw.factor_at(6.0), 0.25);
        assert_eq!(bw.factor_at(9.5), 1.0);
        assert!(BandwidthModel::from_trace("t,rate\n0,1\n".as_bytes()).is_err());
    }

    #[test]
    fn zero_probability_never_stalls() {
        let mut r = rng(0);
        for _ in 0..100 {
            let p = simulate_playback(&asset(1), &CpuModel::never_stalls(), 0.3, 100, &mut r);
            assert_eq!(p, Playback { play_duration_ms: 10_000, stall_total_ms: 0 });
        }
    }

    #[test]
    fn background_load_lengthens_stalls() {
        let cpu = CpuModel::default_for(CpuClass::Slow);
        for i in 0..200 {
            let a = simulate_playback(&asset(1), &cpu, 0.0, 100, &mut rng(i));
            let b = simulate_playback(&asset(1), &cpu, 1.0, 100, &mut rng(i));
            assert!(b.stall_total_ms >= a.stall_total_ms);
        }
    }

    #[test]
    fn schedule_defaults() {
        let a = asset(1);
        let playlist: Vec<&VideoAsset> = vec![&a; 50];
        let plan = PlaybackPlan { first_needed_s: 90.0, per_video_s: 16.0, lookahead: 3 };
        let reqs = schedule_prefetch(&playlist, &plan, &StudyConfig::default()).unwrap();
        assert_eq!(reqs.len(), 50);
        assert!(reqs[..3].iter().all(|r| r.request_time_s == 0.0));
        assert!(reqs.windows(2).all(|w| w[0].request_time_s <= w[1].request_time_s));
        assert!(reqs.iter().all(|r| r.needed_time_s - r.request_time_s >= 30.0));
    }

    #[test]
    fn schedule_single_and_overlong() {
        let a = asset(1);
        let plan = PlaybackPlan { first_needed_s: 90.0, per_video_s: 16.0, lookahead: 3 };
        let one = schedule_prefetch(&[&a], &plan, &StudyConfig::default()).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].request_time_s, 0.0);
        let long: Vec<&VideoAsset> = vec![&a; 200];
        assert!(schedule_prefetch(&long, &plan, &StudyConfig::default()).is_err());
    }

    proptest! {
        #[test]
        fn preload_bounds(seed in any::<u64>(), fail in 0.0..1.0f64, rate in 1e5..1e8f64, size in 1u64..200_000_000) {
            let bw = BandwidthModel {
                jitter_sigma: 0.2,
                connect_fail_prob: fail,
                drop_events: vec![DropEvent { start_s: 3.0, duration_s: 11.0, rate_factor: 0.0 }],
                base_rate_bps: rate,
            };
            let out = simulate_preload(&asset(size), &bw, 0.0, 30.0, &params(), &mut stream(seed, domain::TEST, 0));
            prop_assert!(out.attempts <= 3 && out.reloads <= 1);
            prop_assert_eq!(out.ready_at_s.is_none(), out.terminated_reason.is_some());
            let again = simulate_preload(&asset(size), &bw, 0.0, 30.0, &params(), &mut stream(seed, domain::TEST, 0));
            prop_assert_eq!(out, again);
        }

        #[test]
        fn steady_fast_link_is_ready_in_time(size in 1u64..100_000_000, slack in 1.0..4.0f64, t0 in 0.0..600.0f64) {
            let bw = BandwidthModel::steady(size as f64 / 30.0 * slack);
            let out = simulate_preload(&asset(size), &bw, t0, t0 + 30.0, &params(), &mut rng(0));
            prop_assert!(out.ready_at_s.unwrap() <= t0 + 30.0 + 1e-9);
        }

        #[test]
        fn stall_identity(seed in any::<u64>(), load in 0.0..1.0f64) {
            let cpu = CpuModel::default_for(CpuClass::Medium);
            let p = simulate_playback(&asset(1), &cpu, load, 100, &mut stream(seed, domain::TEST, 1));
            prop_assert_eq!(p.play_duration_ms, 10_000 + p.stall_total_ms);
            prop_assert_eq!(p.stall_total_ms % 100, 0);
        }
    }
}
