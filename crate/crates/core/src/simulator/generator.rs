//! Waveform synthesis.
//!
//! Each channel is produced by inverting the engine's calibration: the red
//! channel's pulse depth is set from the target SpO2 through the
//! ratio-of-ratios line, GSR counts from the divider model, and sound
//! amplitudes from the dB map. Per-hour targets become piecewise-constant
//! levels joined by 60 s ramps; episode overlays are then applied and the
//! levels are re-solved so every hour still averages to its target.

use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::profile::{HrEffect, SnoreScript, SubjectProfile};
use crate::config::EngineConfig;
use crate::engine::calib;
use crate::error::ProfileError;
use crate::protocol::{SensorFrame, ADC_MAX};

const RAMP_HALF_S: f64 = 30.0;
const REBOUND_S: f64 = 20.0;
/// Beat times wander by up to this fraction of the interval.
const BEAT_JITTER_FRACTION: f64 = 0.015;
const AMP_JITTER: f64 = 0.02;
/// Systolic peak trails the R wave by this much.
const PULSE_TRANSIT_S: f64 = 0.2;

const ECG_BASE: f64 = 512.0;
const ECG_GAIN: f64 = 250.0;
const ECG_NOISE: f64 = 1.5;
const PPG_BASE: f64 = 350.0;
const PPG_GAIN: f64 = 300.0;
const PPG_NOISE: f64 = 1.5;
const DC_IR: f64 = 120_000.0;
const DC_RED: f64 = 95_000.0;
const IR_DEPTH: f64 = 0.015;
const OXI_NOISE: f64 = 3.0;
const GSR_NOISE: f64 = 0.8;
const SOUND_BASE: f64 = 512.0;
const SOUND_NOISE: f64 = 0.3;
const FLOOR_TONE_HZ: f64 = 23.0;
const SNORE_TONE_HZ: f64 = 31.0;
const BURST_EDGE_S: f64 = 0.1;

// PPG beat shape, widths relative to the beat interval
const SYSTOLIC_WIDTH: f64 = 0.08;
const DICROTIC_DELAY: f64 = 0.4;
const DICROTIC_WIDTH: f64 = 0.10;
const DICROTIC_GAIN: f64 = 0.3;

fn gauss(x: f64, sigma: f64) -> f64 {
    (-0.5 * (x / sigma).powi(2)).exp()
}

/// Mean of one beat's pulse shape over its own interval.
fn pulse_mean() -> f64 {
    (TAU).sqrt() * (SYSTOLIC_WIDTH + DICROTIC_GAIN * DICROTIC_WIDTH)
}

fn ppg_shape(dt: f64, ibi: f64) -> f64 {
    gauss(dt, SYSTOLIC_WIDTH * ibi)
        + DICROTIC_GAIN * gauss(dt - DICROTIC_DELAY * ibi, DICROTIC_WIDTH * ibi)
}

fn ecg_shape(dt: f64, ibi: f64, r_scale: f64) -> f64 {
    let s = (ibi / 0.8).min(1.0);
    0.12 * gauss(dt + 0.16 * s, 0.025 * s)
        - 0.12 * gauss(dt + 0.03, 0.010)
        + r_scale * gauss(dt, 0.012)
        - 0.25 * gauss(dt - 0.03, 0.010)
        + 0.30 * gauss(dt - 0.26 * s, 0.045 * s)
}

/// Target value per whole second `0..=n` for one channel.
#[derive(Debug, Clone)]
struct Track(Vec<f64>);

impl Track {
    fn at(&self, t: f64) -> f64 {
        let k = t.floor().max(0.0) as usize;
        let last = self.0.len() - 1;
        if k >= last {
            return self.0[last];
        }
        let w = t - k as f64;
        self.0[k] + (self.0[k + 1] - self.0[k]) * w
    }
}

fn baseline(levels: &[f64], t: f64) -> f64 {
    let h = ((t / 3600.0) as usize).min(levels.len() - 1);
    let here = levels[h];
    let next_edge = (h + 1) as f64 * 3600.0;
    let prev_edge = h as f64 * 3600.0;
    if h + 1 < levels.len() && t > next_edge - RAMP_HALF_S {
        let w = (t - (next_edge - RAMP_HALF_S)) / (2.0 * RAMP_HALF_S);
        here + (levels[h + 1] - here) * w
    } else if h > 0 && t < prev_edge + RAMP_HALF_S {
        let w = (t - (prev_edge - RAMP_HALF_S)) / (2.0 * RAMP_HALF_S);
        levels[h - 1] + (here - levels[h - 1]) * w
    } else {
        here
    }
}

/// Trapezoid weight: 0 outside `[start, start + len]`, ramps up over `up`
/// and down over `down`.
fn trapezoid(t: f64, start: f64, len: f64, up: f64, down: f64) -> f64 {
    if t < start || t > start + len {
        0.0
    } else if t < start + up {
        (t - start) / up
    } else if t > start + len - down {
        (start + len - t) / down
    } else {
        1.0
    }
}

fn episode_weight(t: f64, start: f64, dur: f64) -> f64 {
    trapezoid(t, start, dur, (dur / 4.0).min(4.0), (dur / 4.0).min(6.0))
}

#[derive(Clone, Copy)]
enum Channel {
    Hr,
    Spo2,
    Gsr,
}

fn overlay(profile: &SubjectProfile, ch: Channel, t: f64, base: f64) -> f64 {
    let mut v = base;
    for e in &profile.episodes {
        match ch {
            Channel::Spo2 => {
                let w = episode_weight(t, e.start_s, e.duration_s);
                v += w * (e.spo2_nadir_pct - v);
            }
            Channel::Hr => match e.hr_effect {
                HrEffect::Bradycardia(target) => {
                    let w = episode_weight(t, e.start_s, e.duration_s);
                    v += w * (target - v);
                }
                HrEffect::TachyRebound(target) => {
                    let w = trapezoid(t, e.start_s + e.duration_s, REBOUND_S, 5.0, 5.0);
                    v += w * (target - v);
                }
                HrEffect::None => {}
            },
            Channel::Gsr => {}
        }
    }
    v
}

/// Builds a per-second track whose hourly means equal `targets`.
fn solve_track(profile: &SubjectProfile, ch: Channel, targets: &[f64], seconds: usize, clamp: (f64, f64)) -> Track {
    let mut levels = targets.to_vec();
    let render = |levels: &[f64]| -> Vec<f64> {
        (0..=seconds)
            .map(|k| {
                let t = k as f64;
                overlay(profile, ch, t, baseline(levels, t)).clamp(clamp.0, clamp.1)
            })
            .collect()
    };
    let mut values = render(&levels);
    for _ in 0..12 {
        let mut worst: f64 = 0.0;
        for (h, target) in targets.iter().enumerate() {
            let from = h * 3600;
            let to = ((h + 1) * 3600).min(seconds);
            if from >= to {
                continue;
            }
            // the engine reports second k from data in [k, k + 1)
            let mean = (from..to).map(|k| 0.5 * (values[k] + values[k + 1])).sum::<f64>()
                / (to - from) as f64;
            let err = target - mean;
            worst = worst.max(err.abs());
            levels[h] += err;
        }
        if worst < 1e-6 {
            break;
        }
        values = render(&levels);
    }
    Track(values)
}

#[derive(Debug, Clone, Copy)]
struct Beat {
    t: f64,
    ibi: f64,
    amp: f64,
    r_scale: f64,
}

struct SnoreCycle {
    start: f64,
    period: f64,
    amp: f64,
}

/// Deterministic frame source for one subject.
pub struct FrameGenerator {
    rate_hz: u32,
    total: u64,
    next: u64,
    hr: Track,
    spo2: Track,
    gsr: Track,
    cfg: EngineConfig,
    rng: ChaCha8Rng,
    noise: Normal<f64>,
    beats: VecDeque<Beat>,
    next_nominal: f64,
    beat_count: u64,
    anomalies: BTreeMap<u64, f64>,
    snore: Option<SnoreScript>,
    cycle: Option<SnoreCycle>,
    floor_amp: f64,
    burst_amp: f64,
    floor_jitter: (u64, f64),
    suppressed: Vec<(f64, f64)>,
}

impl FrameGenerator {
    pub fn new(
        profile: &SubjectProfile,
        duration_s: f64,
        rate_hz: u32,
        seed: u64,
        cfg: &EngineConfig,
    ) -> Result<Self, ProfileError> {
        profile.validate()?;
        if rate_hz < 50 {
            return Err(ProfileError::Request(format!("rate {rate_hz} Hz is below 50 Hz")));
        }
        if !(duration_s >= 0.0) || !duration_s.is_finite() {
            return Err(ProfileError::Request(format!("duration {duration_s} s is invalid")));
        }
        let total = (duration_s * f64::from(rate_hz)).round() as u64;
        let seconds = duration_s.ceil() as usize + 1;
        let hr = solve_track(profile, Channel::Hr, &profile.hr_baseline_bpm, seconds, (30.0, 220.0));
        let spo2 = solve_track(profile, Channel::Spo2, &profile.spo2_baseline_pct, seconds, (70.0, 100.0));
        let gsr = solve_track(profile, Channel::Gsr, &profile.gsr_baseline_us, seconds, (1.0, 1e6));

        // floor: tone + white noise + rounding noise share the target power
        let floor_rms = calib::rms_for_db(profile.room_floor_db(), cfg);
        let floor_amp = (2.0 * (floor_rms.powi(2) - SOUND_NOISE.powi(2) - 1.0 / 12.0)).max(0.0).sqrt();
        let burst_amp = profile.snore.as_ref().map_or(0.0, |s| {
            let peak_rms = calib::rms_for_db(s.peak_db, cfg);
            (2.0 * (peak_rms.powi(2) - floor_rms.powi(2))).max(0.0).sqrt()
        });
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let first_beat = rng.random_range(0.2..0.8);
        let cycle = profile.snore.as_ref().map(|s| SnoreCycle {
            start: 1.0 + rng.random_range(0.0..s.cycle_period_s),
            period: s.cycle_period_s,
            amp: 1.0,
        });
        Ok(Self {
            rate_hz,
            total,
            next: 0,
            hr,
            spo2,
            gsr,
            cfg: cfg.clone(),
            rng,
            noise: Normal::new(0.0, 1.0).unwrap(),
            beats: VecDeque::new(),
            next_nominal: first_beat,
            beat_count: 0,
            anomalies: profile.ecg_anomalies.iter().map(|a| (a.beat_index, a.amplitude_scale)).collect(),
            snore: profile.snore.clone(),
            cycle,
            floor_amp,
            burst_amp,
            floor_jitter: (u64::MAX, 1.0),
            suppressed: profile
                .episodes
                .iter()
                .filter(|e| e.snore_suppressed)
                .map(|e| (e.start_s, e.start_s + e.duration_s))
                .collect(),
        })
    }

    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Target heart rate the generator is following at `t` seconds.
    pub fn target_hr(&self, t: f64) -> f64 {
        self.hr.at(t)
    }

    pub fn target_spo2(&self, t: f64) -> f64 {
        self.spo2.at(t)
    }

    pub fn target_gsr(&self, t: f64) -> f64 {
        self.gsr.at(t)
    }

    fn gaussian(&mut self, sigma: f64) -> f64 {
        sigma * self.noise.sample(&mut self.rng)
    }

    fn jitter(&mut self) -> f64 {
        1.0 + self.rng.random_range(-AMP_JITTER..=AMP_JITTER)
    }

    fn schedule_beats(&mut self, t: f64) {
        while self.next_nominal <= t + 2.0 {
            let nominal = self.next_nominal;
            let ibi = 60.0 / self.hr.at(nominal);
            let offset = ibi * self.rng.random_range(-BEAT_JITTER_FRACTION..=BEAT_JITTER_FRACTION);
            let amp = self.jitter();
            let r_scale = self.anomalies.get(&self.beat_count).copied().unwrap_or(1.0);
            self.beats.push_back(Beat { t: nominal + offset, ibi, amp, r_scale });
            self.beat_count += 1;
            self.next_nominal = nominal + ibi;
        }
        while self.beats.front().is_some_and(|b| b.t < t - 3.0) {
            self.beats.pop_front();
        }
    }

    fn snore_envelope(&mut self, t: f64) -> f64 {
        let Some(script) = self.snore.clone() else {
            return 0.0;
        };
        let Some(mut c) = self.cycle.take() else {
            return 0.0;
        };
        while t >= c.start + c.period {
            let start = c.start + c.period;
            let period = script.cycle_period_s
                + if script.cycle_jitter_s > 0.0 {
                    self.rng.random_range(-script.cycle_jitter_s..=script.cycle_jitter_s)
                } else {
                    0.0
                };
            c = SnoreCycle { start, period, amp: self.jitter() };
        }
        let burst = script.burst_fraction * c.period;
        let edge = BURST_EDGE_S.min(burst / 2.0);
        let dt = t - c.start;
        let env = if dt < 0.0 || dt > burst {
            0.0
        } else if dt < edge {
            0.5 - 0.5 * (PI * dt / edge).cos()
        } else if dt > burst - edge {
            0.5 - 0.5 * (PI * (burst - dt) / edge).cos()
        } else {
            1.0
        };
        let amp = c.amp;
        self.cycle = Some(c);
        if self.suppressed.iter().any(|&(a, b)| t >= a && t <= b) {
            0.0
        } else {
            env * amp
        }
    }

    fn render(&mut self, index: u64) -> SensorFrame {
        let timestamp_ms = (index * 1000 / u64::from(self.rate_hz)) as u32;
        let t = f64::from(timestamp_ms) / 1000.0;
        self.schedule_beats(t);

        let (mut ecg, mut ppg) = (0.0, 0.0);
        for b in &self.beats {
            ecg += b.amp * ecg_shape(t - b.t, b.ibi, b.r_scale);
            ppg += b.amp * ppg_shape(t - b.t - PULSE_TRANSIT_S, b.ibi);
        }
        let pulse = ppg - pulse_mean();

        let ratio = calib::ratio_for_spo2(self.spo2.at(t), &self.cfg);
        let ir = DC_IR * (1.0 + IR_DEPTH * pulse) + self.gaussian(OXI_NOISE);
        let red = DC_RED * (1.0 + ratio * IR_DEPTH * pulse) + self.gaussian(OXI_NOISE);

        let gsr = calib::gsr_raw_for_conductance(self.gsr.at(t), self.cfg.divider_k) + self.gaussian(GSR_NOISE);

        let second = t.floor() as u64;
        if self.floor_jitter.0 != second {
            self.floor_jitter = (second, self.jitter());
        }
        let env = self.snore_envelope(t);
        let sound = SOUND_BASE
            + self.floor_amp * self.floor_jitter.1 * (TAU * FLOOR_TONE_HZ * t).sin()
            + self.burst_amp * env * (TAU * SNORE_TONE_HZ * t).sin()
            + self.gaussian(SOUND_NOISE);

        let ecg = ECG_BASE + ECG_GAIN * ecg + self.gaussian(ECG_NOISE);
        let ppg = PPG_BASE + PPG_GAIN * ppg + self.gaussian(PPG_NOISE);
        let adc = |v: f64| v.round().clamp(0.0, f64::from(ADC_MAX)) as u16;
        let count = |v: f64| v.round().clamp(0.0, f64::from(u32::MAX)) as u32;
        SensorFrame {
            seq: index as u16,
            timestamp_ms,
            ecg_raw: adc(ecg),
            ppg_raw: adc(ppg),
            red_raw: count(red),
            ir_raw: count(ir),
            gsr_raw: adc(gsr),
            sound_raw: adc(sound),
        }
    }
}

impl Iterator for FrameGenerator {
    type Item = SensorFrame;

    fn next(&mut self) -> Option<SensorFrame> {
        if self.next >= self.total {
            return None;
        }
        let f = self.render(self.next);
        self.next += 1;
        Some(f)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.total - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for FrameGenerator {}

/// Convenience wrapper returning a [`FrameGenerator`].
pub fn generate_frames(
    profile: &SubjectProfile,
    duration_s: f64,
    rate_hz: u32,
    rng_seed: u64,
    cfg: &EngineConfig,
) -> Result<FrameGenerator, ProfileError> {
    FrameGenerator::new(profile, duration_s, rate_hz, rng_seed, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_profile(hr: f64) -> SubjectProfile {
        SubjectProfile {
            label: "flat".into(),
            age_group: String::new(),
            gender: String::new(),
            body_status: String::new(),
            hr_baseline_bpm: vec![hr],
            spo2_baseline_pct: vec![96.0],
            gsr_baseline_us: vec![200.0],
            ambient_db: 37.5,
            snore: None,
            episodes: vec![],
            ecg_anomalies: vec![],
        }
    }

    #[test]
    fn zero_duration_is_empty() {
        let g = generate_frames(&flat_profile(72.0), 0.0, 100, 1, &EngineConfig::default()).unwrap();
        assert_eq!(g.count(), 0);
    }

    #[test]
    fn frame_count_and_timestamps() {
        let frames: Vec<_> = generate_frames(&flat_profile(72.0), 2.0, 100, 1, &EngineConfig::default())
            .unwrap()
            .collect();
        assert_eq!(frames.len(), 200);
        assert_eq!(frames[1].timestamp_ms, 10);
        assert_eq!(frames[199].seq, 199);
    }

    #[test]
    fn invalid_profile_fails_before_frames() {
        let mut p = flat_profile(72.0);
        p.hr_baseline_bpm = vec![10.0];
        assert!(generate_frames(&p, 10.0, 100, 1, &EngineConfig::default()).is_err());
        assert!(generate_frames(&flat_profile(72.0), 10.0, 20, 1, &EngineConfig::default()).is_err());
    }

    #[test]
    fn same_seed_same_stream() {
        let cfg = EngineConfig::default();
        let a: Vec<_> = generate_frames(&flat_profile(65.0), 5.0, 100, 9, &cfg).unwrap().collect();
        let b: Vec<_> = generate_frames(&flat_profile(65.0), 5.0, 100, 9, &cfg).unwrap().collect();
        let c: Vec<_> = generate_frames(&flat_profile(65.0), 5.0, 100, 10, &cfg).unwrap().collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn solved_track_hits_hourly_targets() {
        let mut p = flat_profile(70.0);
        p.hr_baseline_bpm = vec![70.0, 90.0];
        p.spo2_baseline_pct = vec![96.0, 95.0];
        p.gsr_baseline_us = vec![200.0, 100.0];
        p.episodes.push(super::super::profile::ApneaEpisodeScript {
            start_s: 1000.0,
            duration_s: 60.0,
            spo2_nadir_pct: 85.0,
            hr_effect: HrEffect::Bradycardia(45.0),
            snore_suppressed: false,
        });
        let tr = solve_track(&p, Channel::Spo2, &p.spo2_baseline_pct, 7200, (70.0, 100.0));
        for (h, target) in [96.0, 95.0].iter().enumerate() {
            let m = (h * 3600..(h + 1) * 3600).map(|k| 0.5 * (tr.0[k] + tr.0[k + 1])).sum::<f64>() / 3600.0;
            assert!((m - target).abs() < 1e-4, "hour {h}: {m}");
        }
        assert!(tr.at(1030.0) < 86.0);
    }
}
