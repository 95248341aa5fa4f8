//! Feed frames one at a time and print each second's vitals and the R-wave
//! annotations, including a scripted tall beat and a short beat.
//!
//!     cargo run --example streaming_engine

use sleepwatch::config::EngineConfig;
use sleepwatch::engine::RAnomaly;
use sleepwatch::simulator::{generate_frames, EcgAnomaly, SubjectProfile};
use sleepwatch::SignalEngine;

fn main() {
    let profile = SubjectProfile {
        label: "demo".into(),
        age_group: String::new(),
        gender: String::new(),
        body_status: String::new(),
        hr_baseline_bpm: vec![66.0],
        spo2_baseline_pct: vec![96.5],
        gsr_baseline_us: vec![240.0],
        ambient_db: 37.5,
        snore: None,
        episodes: Vec::new(),
        ecg_anomalies: vec![
            EcgAnomaly { beat_index: 12, amplitude_scale: 1.8 },
            EcgAnomaly { beat_index: 20, amplitude_scale: 0.3 },
        ],
    };
    let cfg = EngineConfig::default();
    let mut engine = SignalEngine::new(cfg.clone());
    for f in generate_frames(&profile, 30.0, cfg.rate_hz, 3, &cfg).unwrap() {
        for s in engine.ingest(&f).unwrap() {
            println!(
                "t={:>2}s bpm={:>6} spo2={:>6} gsr={:>7} sound={:>5} flags={:?}",
                s.t_s,
                s.bpm.map_or("-".into(), |v| format!("{v:.1}")),
                s.spo2_pct.map_or("-".into(), |v| format!("{v:.2}")),
                s.gsr_us.map_or("-".into(), |v| format!("{v:.1}")),
                s.sound_db.map_or("-".into(), |v| format!("{v:.1}")),
                s.ecg_flags,
            );
        }
    }
    engine.finish();
    println!("\nbeats with anomalies:");
    for (i, b) in engine.take_beats().iter().enumerate() {
        if b.anomaly != RAnomaly::None {
            println!("  beat {i} at {:.2}s amplitude {:.3} -> {:?}", b.r_time_s, b.r_amplitude, b.anomaly);
        }
    }
    println!("{:?}", engine.diagnostics());
}
