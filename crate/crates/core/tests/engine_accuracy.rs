mod common;

use proptest::prelude::*;

use sleepwatch::config::EngineConfig;
use sleepwatch::engine::calib::{conductance_us, divider_resistance, gsr_conductance, spo2_from_ratio};
use sleepwatch::engine::{detect_r_peaks, process_frames, BeatAnnotation, RAnomaly, RPeakParams, SignalEngine};
use sleepwatch::simulator::{builtin_profile, generate_frames, ApneaEpisodeScript, EcgAnomaly, HrEffect};
use sleepwatch::VitalsSample;

use common::{constant_profile, count_pulses, frames};

fn samples_for(hr: f64, seconds: f64, seed: u64) -> Vec<VitalsSample> {
    let f = frames(&constant_profile(hr, 96.0, 250.0, 1), seconds, seed);
    process_frames(&EngineConfig::default(), &f)
}

#[test]
fn bpm_sweep_forty_to_one_eighty() {
    for hr in (40..=180).step_by(5) {
        let hr = f64::from(hr);
        let s = samples_for(hr, 40.0, hr as u64);
        let settled: Vec<f64> = s.iter().filter(|x| x.t_s >= 12).filter_map(|x| x.bpm).collect();
        assert!(settled.len() >= 25, "{hr}: only {} bpm values", settled.len());
        for b in settled {
            assert!((b - hr).abs() <= 2.0, "target {hr}, engine {b}");
        }
    }
}

#[test]
fn ppg_pulse_count_matches_rate() {
    let f = frames(&constant_profile(72.0, 96.0, 250.0, 1), 60.0, 3);
    let ppg: Vec<f64> = f.iter().map(|x| f64::from(x.ppg_raw)).collect();
    let n = count_pulses(&ppg);
    assert!((71..=73).contains(&n), "{n} pulses in 60 s");
}

#[test]
fn bpm_agrees_with_pulse_count_oracle() {
    let f = frames(&constant_profile(60.0, 96.0, 250.0, 1), 60.0, 5);
    let ppg: Vec<f64> = f.iter().map(|x| f64::from(x.ppg_raw)).collect();
    let oracle = count_pulses(&ppg) as f64;
    let s = process_frames(&EngineConfig::default(), &f);
    let mean = {
        let v: Vec<f64> = s.iter().filter(|x| x.t_s >= 12).filter_map(|x| x.bpm).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    assert!((mean - oracle).abs() <= 1.0, "engine {mean}, oracle {oracle}");
}

#[test]
fn spo2_calibration_is_exact() {
    let cfg = EngineConfig::default();
    assert_eq!(spo2_from_ratio(0.6, &cfg), 95.0);
    assert_eq!(spo2_from_ratio(0.0, &cfg), 100.0);
    assert_eq!(spo2_from_ratio(2.0, &cfg), 70.0);
}

#[test]
fn conductance_of_band_edges() {
    assert_eq!(conductance_us(4000.0), 250.0);
    assert!((conductance_us(2222.22) - 450.0).abs() < 1e-3);
}

#[test]
fn open_divider_is_absent() {
    assert_eq!(gsr_conductance(512, 1000.0).unwrap(), None);
    assert_eq!(gsr_conductance(1023, 1000.0).unwrap(), None);
    assert!(gsr_conductance(1024, 1000.0).is_err());
}

proptest! {
    #[test]
    fn conductance_is_reciprocal_to_machine_precision(r in 1.0f64..1e9) {
        let g = conductance_us(r);
        let reference = 1.0 / r * 1e6;
        prop_assert!((g - reference).abs() <= 2.0 * f64::EPSILON * reference);
    }

    #[test]
    fn conductance_decreases_with_resistance(a in 1.0f64..1e9, b in 1.0f64..1e9) {
        prop_assume!(a < b);
        prop_assert!(conductance_us(a) > conductance_us(b));
    }

    #[test]
    fn raw_counts_follow_divider_model(raw in 0u16..512, k in 100.0f64..20000.0) {
        let r = k * (1024.0 + 2.0 * f64::from(raw)) / (512.0 - f64::from(raw));
        let g = gsr_conductance(raw, k).unwrap().unwrap();
        prop_assert!((g - 1e6 / r).abs() <= 4.0 * f64::EPSILON * g);
        prop_assert_eq!(divider_resistance(f64::from(raw), k), Some(r));
        if raw > 0 {
            prop_assert!(gsr_conductance(raw - 1, k).unwrap().unwrap() > g);
        }
    }
}

#[test]
fn desaturation_episode_reaches_nadir() {
    let mut p = constant_profile(70.0, 96.0, 250.0, 1);
    p.episodes.push(ApneaEpisodeScript {
        start_s: 120.0,
        duration_s: 20.0,
        spo2_nadir_pct: 88.0,
        hr_effect: HrEffect::None,
        snore_suppressed: false,
    });
    let cfg = EngineConfig::default();
    let gen = generate_frames(&p, 200.0, 100, 11, &cfg).unwrap();
    let baseline = gen.target_spo2(100.0);
    let f: Vec<_> = gen.collect();
    let s = process_frames(&cfg, &f);
    let low: Vec<_> = s.iter().filter(|x| (125..=130).contains(&x.t_s)).filter_map(|x| x.spo2_pct).collect();
    assert!(!low.is_empty());
    assert!(low.iter().all(|&v| v <= 90.0), "{low:?}");
    let before = s.iter().find(|x| x.t_s == 100).and_then(|x| x.spo2_pct).unwrap();
    assert!((before - baseline).abs() < 0.3, "{before} vs {baseline}");
}

fn ecg_beats(anomalies: &[(u64, f64)], seconds: f64) -> Vec<BeatAnnotation> {
    let mut p = constant_profile(60.0, 96.0, 250.0, 1);
    p.ecg_anomalies = anomalies.iter().map(|&(beat_index, amplitude_scale)| EcgAnomaly { beat_index, amplitude_scale }).collect();
    let f = frames(&p, seconds, 21);
    let ecg: Vec<f64> = f.iter().map(|x| f64::from(x.ecg_raw)).collect();
    detect_r_peaks(&ecg, RPeakParams::default())
}

#[test]
fn six_uniform_beats() {
    let beats = ecg_beats(&[], 6.0);
    assert_eq!(beats.len(), 6, "{beats:?}");
    for b in &beats {
        assert_eq!(b.anomaly, RAnomaly::None);
    }
    for rr in beats.iter().filter_map(|b| b.rr_ms) {
        assert!((rr - 1000.0).abs() < 30.0, "rr {rr}");
    }
}

#[test]
fn tall_fifth_beat_is_gain() {
    let beats = ecg_beats(&[(4, 1.8)], 6.0);
    assert_eq!(beats.len(), 6);
    let flagged: Vec<_> = beats.iter().enumerate().filter(|(_, b)| b.anomaly != RAnomaly::None).collect();
    assert_eq!(flagged.len(), 1, "{beats:?}");
    assert_eq!((flagged[0].0, flagged[0].1.anomaly), (4, RAnomaly::Gain));
}

#[test]
fn short_first_beat_of_later_window_is_loss() {
    let beats = ecg_beats(&[(6, 0.3)], 12.0);
    assert_eq!(beats.len(), 12, "{beats:?}");
    let flagged: Vec<_> = beats.iter().enumerate().filter(|(_, b)| b.anomaly != RAnomaly::None).collect();
    assert_eq!(flagged.len(), 1, "{beats:?}");
    assert_eq!((flagged[0].0, flagged[0].1.anomaly), (6, RAnomaly::Loss));
}

#[test]
fn streaming_engine_annotates_beats() {
    let mut p = constant_profile(60.0, 96.0, 250.0, 1);
    p.ecg_anomalies = vec![EcgAnomaly { beat_index: 4, amplitude_scale: 1.8 }];
    let mut engine = SignalEngine::new(EngineConfig::default());
    for f in frames(&p, 30.0, 4) {
        engine.ingest(&f).unwrap();
    }
    engine.finish();
    let beats = engine.take_beats();
    assert!((29..=31).contains(&beats.len()), "{}", beats.len());
    assert_eq!(beats[4].anomaly, RAnomaly::Gain);
    assert_eq!(beats.iter().filter(|b| b.anomaly != RAnomaly::None).count(), 1);
}

#[test]
fn one_second_of_frames_is_one_sample() {
    let f = frames(&constant_profile(70.0, 96.0, 250.0, 1), 1.0, 1);
    assert_eq!(f.len(), 100);
    assert_eq!(process_frames(&EngineConfig::default(), &f).len(), 1);
}

#[test]
fn dropout_leaves_absent_values() {
    let mut f = frames(&constant_profile(70.0, 96.0, 250.0, 1), 60.0, 9);
    f.retain(|x| !(30_000..35_000).contains(&x.timestamp_ms));
    let s = process_frames(&EngineConfig::default(), &f);
    assert_eq!(s.len(), 60);
    for x in s.iter().filter(|x| (30..35).contains(&x.t_s)) {
        assert_eq!((x.bpm, x.spo2_pct), (None, None), "t={}", x.t_s);
    }
    assert!(s[50].spo2_pct.is_some());
}

#[test]
fn six_hours_of_person_one() {
    let cfg = EngineConfig::default();
    let p = builtin_profile("person-1").unwrap();
    let gen = generate_frames(&p, 6.0 * 3600.0, 100, 7, &cfg).unwrap();
    let mut engine = SignalEngine::new(cfg);
    let mut n = 0u64;
    for f in gen {
        n += engine.ingest(&f).unwrap().len() as u64;
    }
    n += u64::from(engine.finish().is_some());
    assert!((21599..=21601).contains(&n), "{n}");
}
