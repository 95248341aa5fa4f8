//! Real-time signal engine: 100 Hz sensor frames in, 1 Hz vitals out.
//!
//! Frames are placed on a uniform sample grid by timestamp. Short holes
//! (up to `gap_reset_s`) are filled by linear interpolation so the filters
//! see an evenly sampled signal; longer gaps close the current second, emit
//! empty samples for every missing second and restart detector warm-up.

pub mod calib;
pub mod ecg;
pub mod ppg;
pub mod snore;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::config::EngineConfig;
use crate::error::SignalError;
use crate::protocol::SensorFrame;
use crate::stats;

pub use ecg::{detect_r_peaks, BeatAnnotation, RAnomaly, RPeakDetector, RPeakParams};
pub use ppg::{detect_ppg_peaks, PeakParams};
pub use snore::{detect_snore_cycles, SnoreParams, SnoreStatus, SnoreTracker};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EcgFlag {
    RLoss,
    RGain,
}

/// One derived record per second of session time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VitalsSample {
    pub t_s: u64,
    pub bpm: Option<f64>,
    pub spo2_pct: Option<f64>,
    pub gsr_us: Option<f64>,
    pub sound_db: Option<f64>,
    pub snore_active: bool,
    pub snore_period_s: Option<f64>,
    pub ecg_flags: Vec<EcgFlag>,
}

impl VitalsSample {
    pub fn empty(t_s: u64) -> Self {
        Self {
            t_s,
            bpm: None,
            spo2_pct: None,
            gsr_us: None,
            sound_db: None,
            snore_active: false,
            snore_period_s: None,
            ecg_flags: Vec::new(),
        }
    }

    /// 1-based hour this sample belongs to.
    pub fn hour(&self) -> u64 {
        self.t_s / 3600 + 1
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineDiagnostics {
    pub frames_accepted: u64,
    pub frames_rejected_order: u64,
    pub frames_duplicate: u64,
    pub samples_interpolated: u64,
    pub gap_resets: u64,
}

#[derive(Debug, Clone, Copy)]
struct GridPoint {
    ecg: f64,
    ppg: f64,
    red: f64,
    ir: f64,
    gsr: f64,
    sound: f64,
}

impl GridPoint {
    fn of(f: &SensorFrame) -> Self {
        Self {
            ecg: f64::from(f.ecg_raw),
            ppg: f64::from(f.ppg_raw),
            red: f64::from(f.red_raw),
            ir: f64::from(f.ir_raw),
            gsr: f64::from(f.gsr_raw),
            sound: f64::from(f.sound_raw),
        }
    }

    fn lerp(a: &Self, b: &Self, w: f64) -> Self {
        let l = |x: f64, y: f64| x + (y - x) * w;
        Self {
            ecg: l(a.ecg, b.ecg),
            ppg: l(a.ppg, b.ppg),
            red: l(a.red, b.red),
            ir: l(a.ir, b.ir),
            gsr: l(a.gsr, b.gsr),
            sound: l(a.sound, b.sound),
        }
    }
}

#[derive(Debug, Default)]
struct SecondBuffers {
    red: Vec<f64>,
    ir: Vec<f64>,
    gsr: Vec<f64>,
    sound: Vec<f64>,
    flags: Vec<EcgFlag>,
}

impl SecondBuffers {
    fn clear(&mut self) {
        self.red.clear();
        self.ir.clear();
        self.gsr.clear();
        self.sound.clear();
        self.flags.clear();
    }
}

/// Per-session engine state. Feed frames in timestamp order with
/// [`ingest`](Self::ingest), then call [`finish`](Self::finish) once.
pub struct SignalEngine {
    cfg: EngineConfig,
    fs: u64,
    last: Option<(u64, u32, GridPoint)>,
    current_second: Option<u64>,
    buf: SecondBuffers,
    ppg: VecDeque<f64>,
    ecg: RPeakDetector,
    snore: SnoreTracker,
    beats: Vec<BeatAnnotation>,
    diag: EngineDiagnostics,
}

impl SignalEngine {
    pub fn new(cfg: EngineConfig) -> Self {
        let fs = u64::from(cfg.rate_hz);
        Self {
            ecg: RPeakDetector::new(r_params(&cfg)),
            snore: SnoreTracker::new(SnoreParams {
                window_s: u64::from(cfg.snore_window_s),
                burst_threshold_db: cfg.burst_threshold_db,
                min_bursts: cfg.snore_min_bursts,
                max_cv: cfg.snore_max_cv,
            }),
            ppg: VecDeque::with_capacity((u64::from(cfg.bpm_window_s) * fs) as usize + 1),
            cfg,
            fs,
            last: None,
            current_second: None,
            buf: SecondBuffers::default(),
            beats: Vec::new(),
            diag: EngineDiagnostics::default(),
        }
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn diagnostics(&self) -> EngineDiagnostics {
        self.diag
    }

    /// Beat annotations produced since the last call.
    pub fn take_beats(&mut self) -> Vec<BeatAnnotation> {
        std::mem::take(&mut self.beats)
    }

    /// Accepts one frame; returns every sample whose second was completed.
    pub fn ingest(&mut self, frame: &SensorFrame) -> Result<Vec<VitalsSample>, SignalError> {
        let point = GridPoint::of(frame);
        let index = (u64::from(frame.timestamp_ms) * self.fs + 500) / 1000;
        let mut out = Vec::new();
        match self.last {
            Some((_, last_ts, _)) if frame.timestamp_ms < last_ts => {
                self.diag.frames_rejected_order += 1;
                return Err(SignalError::NonMonotonic { last: last_ts, got: frame.timestamp_ms });
            }
            Some((last_index, _, _)) if index <= last_index => {
                self.diag.frames_duplicate += 1;
                return Ok(out);
            }
            Some((last_index, _, last_point)) => {
                let gap = index - last_index;
                if gap as f64 / self.fs as f64 > self.cfg.gap_reset_s {
                    self.reset_after_gap(index, &mut out);
                } else {
                    for k in 1..gap {
                        let p = GridPoint::lerp(&last_point, &point, k as f64 / gap as f64);
                        self.diag.samples_interpolated += 1;
                        self.push_point(last_index + k, &p, &mut out);
                    }
                }
            }
            None => {}
        }
        self.diag.frames_accepted += 1;
        self.push_point(index, &point, &mut out);
        self.last = Some((index, frame.timestamp_ms, point));
        Ok(out)
    }

    /// Closes the partially filled final second.
    pub fn finish(&mut self) -> Option<VitalsSample> {
        let s = self.current_second.take()?;
        Some(self.close_second(s))
    }

    fn reset_after_gap(&mut self, next_index: u64, out: &mut Vec<VitalsSample>) {
        self.diag.gap_resets += 1;
        let next_second = next_index / self.fs;
        if let Some(s) = self.current_second.take() {
            out.push(self.close_second(s));
            for t in s + 1..next_second {
                let sample = VitalsSample::empty(t);
                self.snore.update(t, None);
                out.push(sample);
            }
        }
        self.ppg.clear();
        self.ecg = RPeakDetector::new(r_params(&self.cfg));
    }

    fn push_point(&mut self, index: u64, p: &GridPoint, out: &mut Vec<VitalsSample>) {
        let second = index / self.fs;
        match self.current_second {
            Some(s) if second > s => {
                out.push(self.close_second(s));
                self.current_second = Some(second);
            }
            None => self.current_second = Some(second),
            _ => {}
        }
        for beat in self.ecg.push(index, p.ecg) {
            match beat.anomaly {
                RAnomaly::Loss => self.buf.flags.push(EcgFlag::RLoss),
                RAnomaly::Gain => self.buf.flags.push(EcgFlag::RGain),
                RAnomaly::None => {}
            }
            self.beats.push(beat);
        }
        self.ppg.push_back(p.ppg);
        let cap = (u64::from(self.cfg.bpm_window_s) * self.fs) as usize;
        while self.ppg.len() > cap {
            self.ppg.pop_front();
        }
        self.buf.red.push(p.red);
        self.buf.ir.push(p.ir);
        self.buf.gsr.push(p.gsr);
        self.buf.sound.push(p.sound);
    }

    fn close_second(&mut self, t_s: u64) -> VitalsSample {
        let cfg = &self.cfg;
        let ppg: Vec<f64> = self.ppg.iter().copied().collect();
        let bpm = ppg::detect_ppg_peaks(
            &ppg,
            &PeakParams {
                rate_hz: self.fs as f64,
                fraction: cfg.ppg_peak_fraction,
                refractory_ms: cfg.ppg_refractory_ms,
            },
        );
        let spo2_pct = calib::compute_spo2(&self.buf.red, &self.buf.ir, cfg).unwrap_or(None);
        let gsr_us = stats::mean(&self.buf.gsr)
            .and_then(|raw| calib::divider_resistance(raw, cfg.divider_k))
            .map(calib::conductance_us);
        let sound_db = (!self.buf.sound.is_empty()).then(|| calib::sound_db(&self.buf.sound, cfg));
        let snore = self.snore.update(t_s, sound_db);
        let mut ecg_flags = std::mem::take(&mut self.buf.flags);
        ecg_flags.sort();
        ecg_flags.dedup();
        self.buf.clear();
        VitalsSample {
            t_s,
            bpm,
            spo2_pct,
            gsr_us,
            sound_db,
            snore_active: snore.active,
            snore_period_s: snore.period_s,
            ecg_flags,
        }
    }
}

fn r_params(cfg: &EngineConfig) -> RPeakParams {
    RPeakParams {
        rate_hz: f64::from(cfg.rate_hz),
        refractory_ms: cfg.ecg_refractory_ms,
        loss_ratio: cfg.r_loss_ratio,
        gain_ratio: cfg.r_gain_ratio,
        median_beats: cfg.r_median_beats,
    }
}

/// Runs a whole frame sequence through a fresh engine.
pub fn process_frames<'a, I>(cfg: &EngineConfig, frames: I) -> Vec<VitalsSample>
where
    I: IntoIterator<Item = &'a SensorFrame>,
{
    let mut engine = SignalEngine::new(cfg.clone());
    let mut out = Vec::new();
    for f in frames {
        if let Ok(samples) = engine.ingest(f) {
            out.extend(samples);
        }
    }
    out.extend(engine.finish());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(ts: u32) -> SensorFrame {
        SensorFrame {
            seq: (ts / 10) as u16,
            timestamp_ms: ts,
            ecg_raw: 512,
            ppg_raw: 400,
            red_raw: 80_000,
            ir_raw: 100_000,
            gsr_raw: 200,
            sound_raw: 512,
        }
    }

    #[test]
    fn one_second_of_frames_gives_one_sample() {
        let frames: Vec<_> = (0..100).map(|i| frame(i * 10)).collect();
        let samples = process_frames(&EngineConfig::default(), &frames);
        assert_eq!(samples.len(), 1);
        assert_eq!(samples[0].t_s, 0);
        // flat channels: no pulse, no sound
        assert_eq!(samples[0].bpm, None);
        assert_eq!(samples[0].spo2_pct, None);
        assert_eq!(samples[0].sound_db, Some(30.0));
        assert!(samples[0].gsr_us.is_some());
    }

    #[test]
    fn non_monotonic_frame_is_rejected() {
        let mut e = SignalEngine::new(EngineConfig::default());
        e.ingest(&frame(1000)).unwrap();
        assert!(matches!(e.ingest(&frame(990)), Err(SignalError::NonMonotonic { .. })));
        assert_eq!(e.diagnostics().frames_rejected_order, 1);
        assert!(e.ingest(&frame(1000)).unwrap().is_empty());
        assert_eq!(e.diagnostics().frames_duplicate, 1);
    }

    #[test]
    fn short_hole_is_interpolated() {
        let mut frames: Vec<_> = (0..200).map(|i| frame(i * 10)).collect();
        frames.retain(|f| !(500..1500).contains(&f.timestamp_ms));
        let samples = process_frames(&EngineConfig::default(), &frames);
        assert_eq!(samples.iter().map(|s| s.t_s).collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn long_gap_emits_empty_seconds() {
        let mut frames: Vec<_> = (0..300).map(|i| frame(i * 10)).collect();
        frames.extend((800..1000).map(|i| frame(i * 10)));
        let samples = process_frames(&EngineConfig::default(), &frames);
        assert_eq!(samples.len(), 10);
        for s in &samples[3..8] {
            assert_eq!(s.bpm, None);
            assert_eq!(s.spo2_pct, None);
            assert_eq!(s.sound_db, None);
        }
        assert_eq!(samples.last().unwrap().t_s, 9);
    }
}
