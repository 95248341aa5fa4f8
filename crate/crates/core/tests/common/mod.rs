//! Helpers and independent reference implementations shared by the
//! integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sleepwatch::config::{DetectorConfig, EngineConfig};
use sleepwatch::detector::{Alert, ApneaClass, ApneaEvent, EventKind};
use sleepwatch::simulator::{generate_frames, SubjectProfile};
use sleepwatch::{SensorFrame, VitalsSample};

/// Bit-at-a-time CRC-16/CCITT-FALSE, written from the textbook definition.
pub fn crc16_bitwise(data: &[u8]) -> u16 {
    let mut crc: u32 = 0xFFFF;
    for &byte in data {
        for i in (0..8).rev() {
            let bit = u32::from((byte >> i) & 1);
            let top = (crc >> 15) & 1;
            crc = (crc << 1) & 0xFFFF;
            if top ^ bit == 1 {
                crc ^= 0x1021;
            }
        }
    }
    crc as u16
}

pub fn random_frame(rng: &mut impl Rng) -> SensorFrame {
    SensorFrame {
        seq: rng.random(),
        timestamp_ms: rng.random(),
        ecg_raw: rng.random_range(0..=1023),
        ppg_raw: rng.random_range(0..=1023),
        red_raw: rng.random(),
        ir_raw: rng.random(),
        gsr_raw: rng.random_range(0..=1023),
        sound_raw: rng.random_range(0..=1023),
    }
}

pub fn constant_profile(hr: f64, spo2: f64, gsr: f64, hours: usize) -> SubjectProfile {
    SubjectProfile {
        label: format!("constant-{hr}"),
        age_group: String::new(),
        gender: String::new(),
        body_status: String::new(),
        hr_baseline_bpm: vec![hr; hours],
        spo2_baseline_pct: vec![spo2; hours],
        gsr_baseline_us: vec![gsr; hours],
        ambient_db: 37.5,
        snore: None,
        episodes: Vec::new(),
        ecg_anomalies: Vec::new(),
    }
}

pub fn frames(profile: &SubjectProfile, seconds: f64, seed: u64) -> Vec<SensorFrame> {
    generate_frames(profile, seconds, 100, seed, &EngineConfig::default())
        .unwrap()
        .collect()
}

/// Counts pulses by upward crossings of the mid level with hysteresis.
pub fn count_pulses(signal: &[f64]) -> usize {
    let lo = signal.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = signal.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (up, down) = (lo + 0.6 * (hi - lo), lo + 0.4 * (hi - lo));
    let mut armed = signal.first().is_some_and(|&v| v < up);
    let mut n = 0;
    for &v in signal {
        if armed && v >= up {
            n += 1;
            armed = false;
        } else if !armed && v <= down {
            armed = true;
        }
    }
    n
}

/// A random contiguous 1 Hz series with desaturation dips, slow-heart runs,
/// snoring with pauses, and missing values.
pub fn random_series(seed: u64, len: u64) -> Vec<VitalsSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spo2 = vec![Some(96.0); len as usize];
    let mut bpm = vec![Some(70.0); len as usize];
    let mut sound = vec![Some(37.0); len as usize];
    let mut snore = vec![false; len as usize];
    let base: f64 = rng.random_range(93.0..98.0);
    for (t, v) in spo2.iter_mut().enumerate() {
        *v = Some(base + rng.random_range(-0.8..0.8) + (t as f64 / 300.0).sin() * 0.5);
    }
    let paint = |rng: &mut ChaCha8Rng, n: usize, max_len: u64, f: &mut dyn FnMut(usize, &mut ChaCha8Rng)| {
        for _ in 0..n {
            let start = rng.random_range(0..len);
            let dur = rng.random_range(1..=max_len);
            for t in start..(start + dur).min(len) {
                f(t as usize, rng);
            }
        }
    };
    let dips = rng.random_range(0..25);
    paint(&mut rng, dips, 40, &mut |t, rng| {
        let depth = rng.random_range(1.0..8.0);
        spo2[t] = Some(base - depth);
    });
    let slow = rng.random_range(0..8);
    paint(&mut rng, slow, 40, &mut |t, rng| bpm[t] = Some(rng.random_range(35.0..55.0)));
    let very_slow = rng.random_range(0..4);
    paint(&mut rng, very_slow, 30, &mut |t, rng| bpm[t] = Some(rng.random_range(38.0..45.0)));
    // snoring stretches with bursts every 3-6 s
    let stretches = rng.random_range(0..5);
    for _ in 0..stretches {
        let start = rng.random_range(0..len);
        let end = (start + rng.random_range(60..900)).min(len);
        let mut t = start;
        while t < end {
            sound[t as usize] = Some(rng.random_range(50.0..62.0));
            if rng.random_bool(0.05) {
                t += rng.random_range(5..80);
            } else {
                t += rng.random_range(3..7);
            }
        }
        for t in start..end {
            snore[t as usize] = rng.random_bool(0.85);
        }
    }
    let holes = rng.random_range(0..10);
    paint(&mut rng, holes, 15, &mut |t, rng| match rng.random_range(0..3) {
        0 => spo2[t] = None,
        1 => bpm[t] = None,
        _ => sound[t] = None,
    });
    (0..len)
        .map(|t| {
            let i = t as usize;
            VitalsSample {
                bpm: bpm[i],
                spo2_pct: spo2[i],
                gsr_us: Some(200.0),
                sound_db: sound[i],
                snore_active: snore[i],
                snore_period_s: snore[i].then_some(4.0),
                ..VitalsSample::empty(t)
            }
        })
        .collect()
}

/// Direct scan of the scoring rules over a contiguous series starting at 0.
pub fn reference_events(cfg: &DetectorConfig, s: &[VitalsSample]) -> Vec<ApneaEvent> {
    let n = s.len();
    let mut events = Vec::new();

    // desaturation: baseline from present, non-event values in the trailing window
    let mut in_event = vec![false; n];
    let mut t = 0;
    while t < n {
        let baseline = {
            let from = t.saturating_sub(cfg.baseline_window_s as usize);
            let vals: Vec<f64> = (from..t).filter(|&k| !in_event[k]).filter_map(|k| s[k].spo2_pct).collect();
            (vals.len() >= cfg.baseline_min_samples).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        };
        match (s[t].spo2_pct, baseline) {
            (Some(v), Some(b)) if v <= b - cfg.desat_drop_pct => {
                let thr = b - cfg.desat_drop_pct;
                let mut end = t;
                while end + 1 < n && s[end + 1].spo2_pct.is_some_and(|x| x <= thr) {
                    end += 1;
                }
                for k in t..=end {
                    in_event[k] = true;
                }
                let dur = (end - t + 1) as u64;
                if dur >= cfg.min_event_s {
                    let nadir = (t..=end).filter_map(|k| s[k].spo2_pct).fold(f64::INFINITY, f64::min);
                    events.push(event(EventKind::Desaturation, t, dur, nadir));
                }
                t = end + 1;
            }
            _ => t += 1,
        }
    }

    // bradycardia: maximal runs below the limit
    let mut t = 0;
    while t < n {
        if s[t].bpm.is_some_and(|b| b < cfg.brady_bpm) {
            let start = t;
            while t < n && s[t].bpm.is_some_and(|b| b < cfg.brady_bpm) {
                t += 1;
            }
            let dur = (t - start) as u64;
            if dur >= cfg.min_event_s {
                let min = (start..t).filter_map(|k| s[k].bpm).fold(f64::INFINITY, f64::min);
                events.push(event(EventKind::Bradycardia, start, dur, min));
            }
        } else {
            t += 1;
        }
    }

    // snore gap: quiet stretch between two loud seconds, the first one rhythmic
    let loud = |k: usize| s[k].sound_db.is_some_and(|d| d >= cfg.burst_threshold_db);
    for k in 0..n {
        if !loud(k) || k + 1 >= n || loud(k + 1) {
            continue;
        }
        if let Some(next) = (k + 1..n).find(|&j| loud(j)) {
            let gap = (next - k - 1) as u64;
            if s[k].snore_active && gap >= cfg.min_event_s && gap <= cfg.snore_gap_max_s {
                events.push(event(EventKind::SnoreGap, k + 1, gap, gap as f64));
            }
        }
    }

    // classification
    let first_snore = s.iter().position(|x| x.snore_active);
    let ctx = cfg.class_context_s as usize;
    for e in &mut events {
        let start = e.start_s as usize;
        let end = start + e.duration_s as usize - 1;
        let lo = start.saturating_sub(ctx);
        let hi = (end + ctx).min(n - 1);
        e.klass = if (lo..=hi).any(|k| s[k].snore_active) {
            ApneaClass::Osa
        } else if first_snore.is_some_and(|f| f <= end + ctx) {
            ApneaClass::Csa
        } else {
            ApneaClass::Unclassified
        };
    }
    sort_events(&mut events);
    events
}

fn event(kind: EventKind, start: usize, duration_s: u64, detail: f64) -> ApneaEvent {
    ApneaEvent { kind, klass: ApneaClass::Unclassified, start_s: start as u64, duration_s, detail }
}

pub fn sort_events(events: &mut [ApneaEvent]) {
    events.sort_by(|a, b| (a.start_s, a.kind).cmp(&(b.start_s, b.kind)));
}

/// Alert times by direct scan: the tenth second of each qualifying run.
pub fn reference_alerts(cfg: &DetectorConfig, s: &[VitalsSample]) -> Vec<(u64, String)> {
    let rules: [(&str, f64, fn(&VitalsSample) -> Option<f64>); 3] = [
        ("spo2_low", cfg.alert_warn_spo2, |x| x.spo2_pct),
        ("spo2_critical", cfg.alert_crit_spo2, |x| x.spo2_pct),
        ("bpm_critical", cfg.alert_crit_bpm, |x| x.bpm),
    ];
    let mut out = Vec::new();
    for (code, thr, get) in rules {
        let mut run = 0;
        for x in s {
            if get(x).is_some_and(|v| v < thr) {
                run += 1;
                if run == cfg.alert_sustain_s {
                    out.push((x.t_s, code.to_string()));
                }
            } else {
                run = 0;
            }
        }
    }
    out.sort();
    out
}

pub fn alert_keys(alerts: &[Alert]) -> Vec<(u64, String)> {
    let mut v: Vec<_> = alerts.iter().map(|a| (a.t_s, a.code.clone())).collect();
    v.sort();
    v
}
