//! Pulse-rate estimation from the PPG channel.

use crate::stats;

/// Bounds of a reportable heart rate.
pub const MIN_BPM: f64 = 20.0;
pub const MAX_BPM: f64 = 250.0;

#[derive(Debug, Clone, Copy)]
pub struct PeakParams {
    pub rate_hz: f64,
    /// Peaks must exceed `min + fraction * (max - min)` of the window.
    pub fraction: f64,
    pub refractory_ms: f64,
}

/// Systolic peak times (ms from window start) with parabolic sub-sample
/// refinement. Within the refractory period only the taller peak is kept.
pub fn ppg_peak_times(window: &[f64], p: &PeakParams) -> Vec<f64> {
    if window.len() < 3 {
        return Vec::new();
    }
    let (lo, hi) = window
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if hi - lo <= 1e-9 {
        return Vec::new();
    }
    let thr = lo + p.fraction * (hi - lo);
    let dt_ms = 1000.0 / p.rate_hz;
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    for i in 1..window.len() - 1 {
        let (a, b, c) = (window[i - 1], window[i], window[i + 1]);
        if !(b > a && b >= c && b > thr) {
            continue;
        }
        let denom = a - 2.0 * b + c;
        let offset = if denom < 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
        let t = (i as f64 + offset) * dt_ms;
        match peaks.last_mut() {
            Some(last) if t - last.0 < p.refractory_ms => {
                if b > last.1 {
                    *last = (t, b);
                }
            }
            _ => peaks.push((t, b)),
        }
    }
    peaks.into_iter().map(|(t, _)| t).collect()
}

/// Beats per minute from a trailing PPG window: 60000 / median inter-beat
/// interval. `None` with fewer than three peaks.
pub fn detect_ppg_peaks(window: &[f64], p: &PeakParams) -> Option<f64> {
    let peaks = ppg_peak_times(window, p);
    if peaks.len() < 3 {
        return None;
    }
    let ibis: Vec<f64> = peaks.windows(2).map(|w| w[1] - w[0]).collect();
    let bpm = 60_000.0 / stats::median(&ibis)?;
    (MIN_BPM..=MAX_BPM).contains(&bpm).then_some(bpm)
}
