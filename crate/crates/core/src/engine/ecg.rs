//! Streaming R-wave detector.
//!
//! Pan-Tompkins style chain: 5-15 Hz band-pass, five-point derivative,
//! squaring, 150 ms moving-window integration and an adaptive signal/noise
//! threshold with a refractory period and slope-based T-wave rejection. Thresholds are tracked on the square
//! root of the integrator output so low-amplitude beats are not buried.
//!
//! The first two seconds are buffered to seed the signal and noise levels;
//! peaks from that learning phase are replayed through the threshold once it
//! is initialized, so no early beats are lost.

use std::collections::VecDeque;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::stats;

const LEARNING_S: f64 = 2.0;
const INTEGRATION_S: f64 = 0.150;
/// How far back from an integrator peak the raw R maximum is searched.
const SEARCH_BACK_S: f64 = 0.200;
const BASELINE_S: f64 = 1.0;
const MIN_PRIOR_BEATS: usize = 3;
/// Normalization applied to raw R heights (half the ADC span).
const AMPLITUDE_SCALE: f64 = 512.0;
const MIN_SIGNAL: f64 = 1.0;
/// Candidates this soon after a beat must show a QRS-like slope.
const T_WAVE_WINDOW_S: f64 = 0.360;
const T_WAVE_SLOPE_RATIO: f64 = 0.5;
const SLOPE_HALF_WIDTH_S: f64 = 0.060;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RAnomaly {
    None,
    Loss,
    Gain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatAnnotation {
    pub r_time_s: f64,
    pub rr_ms: Option<f64>,
    pub r_amplitude: f64,
    pub anomaly: RAnomaly,
}

#[derive(Debug, Clone, Copy)]
pub struct RPeakParams {
    pub rate_hz: f64,
    pub refractory_ms: f64,
    pub loss_ratio: f64,
    pub gain_ratio: f64,
    pub median_beats: usize,
}

impl Default for RPeakParams {
    fn default() -> Self {
        Self {
            rate_hz: 100.0,
            refractory_ms: 200.0,
            loss_ratio: 0.5,
            gain_ratio: 1.5,
            median_beats: 8,
        }
    }
}

/// Direct-form I biquad.
#[derive(Debug, Clone)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
    x: [f64; 2],
    y: [f64; 2],
}

impl Biquad {
    fn butterworth(fc: f64, fs: f64, highpass: bool) -> Self {
        let w0 = 2.0 * PI * fc / fs;
        let alpha = w0.sin() / (2.0 * std::f64::consts::FRAC_1_SQRT_2);
        let cos = w0.cos();
        let a0 = 1.0 + alpha;
        let (b0, b1) = if highpass {
            ((1.0 + cos) / 2.0, -(1.0 + cos))
        } else {
            ((1.0 - cos) / 2.0, 1.0 - cos)
        };
        Self {
            b: [b0 / a0, b1 / a0, b0 / a0],
            a: [-2.0 * cos / a0, (1.0 - alpha) / a0],
            x: [0.0; 2],
            y: [0.0; 2],
        }
    }

    fn step(&mut self, x: f64) -> f64 {
        let y = self.b[0] * x + self.b[1] * self.x[0] + self.b[2] * self.x[1]
            - self.a[0] * self.y[0]
            - self.a[1] * self.y[1];
        self.x = [x, self.x[0]];
        self.y = [y, self.y[0]];
        y
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    index: u64,
    level: f64,
    amplitude: f64,
    slope: f64,
}

#[derive(Debug, Clone)]
pub struct RPeakDetector {
    p: RPeakParams,
    hp: Biquad,
    lp: Biquad,
    offset: Option<f64>,
    band: [f64; 5],
    mwi: VecDeque<f64>,
    mwi_sum: f64,
    mwi_len: usize,
    prev: [f64; 2],
    /// (index, raw value, derivative magnitude)
    raw: VecDeque<(u64, f64, f64)>,
    raw_len: usize,
    seen: usize,
    learning: Option<Learning>,
    signal_level: f64,
    noise_level: f64,
    last_r: Option<u64>,
    last_slope: f64,
    amplitudes: VecDeque<f64>,
}

#[derive(Debug, Clone, Default)]
struct Learning {
    candidates: Vec<Candidate>,
    levels: Vec<f64>,
}

impl RPeakDetector {
    pub fn new(p: RPeakParams) -> Self {
        let fs = p.rate_hz;
        let mwi_len = ((INTEGRATION_S * fs).round() as usize).max(1);
        let raw_len = ((BASELINE_S * fs).round() as usize).max(mwi_len + 1);
        Self {
            p,
            hp: Biquad::butterworth(5.0, fs, true),
            lp: Biquad::butterworth(15.0, fs, false),
            offset: None,
            band: [0.0; 5],
            mwi: VecDeque::with_capacity(mwi_len + 1),
            mwi_sum: 0.0,
            mwi_len,
            prev: [0.0; 2],
            raw: VecDeque::with_capacity(raw_len + 1),
            raw_len,
            seen: 0,
            learning: Some(Learning::default()),
            signal_level: 0.0,
            noise_level: 0.0,
            last_r: None,
            last_slope: 0.0,
            amplitudes: VecDeque::new(),
        }
    }

    /// Feeds the sample at absolute grid `index`; returns the beats confirmed
    /// by it (usually none, occasionally several right after learning ends).
    pub fn push(&mut self, index: u64, value: f64) -> Vec<BeatAnnotation> {
        let x0 = *self.offset.get_or_insert(value);
        let filtered = self.lp.step(self.hp.step(value - x0));
        self.band = [filtered, self.band[0], self.band[1], self.band[2], self.band[3]];
        let d = (2.0 * self.band[0] + self.band[1] - self.band[3] - 2.0 * self.band[4]) / 8.0
            * self.p.rate_hz;
        self.mwi.push_back(d * d);
        self.mwi_sum += d * d;
        if self.mwi.len() > self.mwi_len {
            self.mwi_sum -= self.mwi.pop_front().unwrap();
        }
        let integ = (self.mwi_sum.max(0.0) / self.mwi_len as f64).sqrt();

        self.raw.push_back((index, value, d.abs()));
        if self.raw.len() > self.raw_len {
            self.raw.pop_front();
        }
        self.seen += 1;

        let mut out = Vec::new();
        // local maximum of the integrator at index - 1
        let is_peak = self.seen >= 3 && self.prev[0] > self.prev[1] && self.prev[0] >= integ;
        if is_peak {
            if let Some(c) = self.candidate(index - 1, self.prev[0]) {
                match &mut self.learning {
                    Some(l) => l.candidates.push(c),
                    None => out.extend(self.classify(c)),
                }
            }
        }
        self.prev = [integ, self.prev[0]];

        if let Some(l) = &mut self.learning {
            l.levels.push(integ);
            if self.seen as f64 >= LEARNING_S * self.p.rate_hz {
                let l = self.learning.take().unwrap();
                let peak = l.candidates.iter().map(|c| c.level).fold(0.0, f64::max);
                self.signal_level = peak;
                self.noise_level = 0.5 * stats::median(&l.levels).unwrap_or(0.0);
                for c in l.candidates {
                    out.extend(self.classify(c));
                }
            }
        }
        out
    }

    fn candidate(&self, mwi_index: u64, level: f64) -> Option<Candidate> {
        let back = (SEARCH_BACK_S * self.p.rate_hz).round() as u64;
        let from = mwi_index.saturating_sub(back);
        let (r_index, r_value) = self
            .raw
            .iter()
            .filter(|(i, _, _)| *i >= from && *i <= mwi_index)
            .fold(None, |best: Option<(u64, f64)>, &(i, v, _)| match best {
                Some((_, bv)) if bv >= v => best,
                _ => Some((i, v)),
            })?;
        let near = (SLOPE_HALF_WIDTH_S * self.p.rate_hz).round() as u64;
        let slope = self
            .raw
            .iter()
            .filter(|(i, _, _)| i.abs_diff(r_index) <= near)
            .map(|(_, _, d)| *d)
            .fold(0.0, f64::max);
        let raw: Vec<f64> = self.raw.iter().map(|(_, v, _)| *v).collect();
        let baseline = stats::median(&raw)?;
        let amplitude = (r_value - baseline) / AMPLITUDE_SCALE;
        (amplitude > 0.0).then_some(Candidate { index: r_index, level, amplitude, slope })
    }

    fn classify(&mut self, c: Candidate) -> Option<BeatAnnotation> {
        let refractory = (self.p.refractory_ms / 1000.0 * self.p.rate_hz).round() as u64;
        let t_wave = (T_WAVE_WINDOW_S * self.p.rate_hz).round() as u64;
        if let Some(last) = self.last_r {
            if c.index <= last + refractory {
                return None;
            }
            if c.index <= last + t_wave && c.slope < T_WAVE_SLOPE_RATIO * self.last_slope {
                self.noise_level = 0.125 * c.level + 0.875 * self.noise_level;
                return None;
            }
        }
        let threshold = (self.noise_level + 0.25 * (self.signal_level - self.noise_level)).max(MIN_SIGNAL);
        if c.level <= threshold {
            self.noise_level = 0.125 * c.level + 0.875 * self.noise_level;
            return None;
        }
        self.signal_level = 0.125 * c.level + 0.875 * self.signal_level;

        let anomaly = if self.amplitudes.len() >= MIN_PRIOR_BEATS {
            let prior: Vec<f64> = self.amplitudes.iter().copied().collect();
            let med = stats::median(&prior).unwrap_or(c.amplitude);
            if c.amplitude < self.p.loss_ratio * med {
                RAnomaly::Loss
            } else if c.amplitude > self.p.gain_ratio * med {
                RAnomaly::Gain
            } else {
                RAnomaly::None
            }
        } else {
            RAnomaly::None
        };
        self.amplitudes.push_back(c.amplitude);
        if self.amplitudes.len() > self.p.median_beats {
            self.amplitudes.pop_front();
        }
        let ms_per_sample = 1000.0 / self.p.rate_hz;
        let rr_ms = self.last_r.map(|l| (c.index - l) as f64 * ms_per_sample);
        self.last_r = Some(c.index);
        self.last_slope = c.slope;
        Some(BeatAnnotation {
            r_time_s: c.index as f64 / self.p.rate_hz,
            rr_ms,
            r_amplitude: c.amplitude,
            anomaly,
        })
    }
}

/// Runs a fresh detector over a window of ECG samples starting at index 0.
pub fn detect_r_peaks(window: &[f64], p: RPeakParams) -> Vec<BeatAnnotation> {
    let mut det = RPeakDetector::new(p);
    window
        .iter()
        .enumerate()
        .flat_map(|(i, &v)| det.push(i as u64, v))
        .collect()
}
