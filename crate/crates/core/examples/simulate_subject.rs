//! Generate a builtin subject, run the engine, and compare the hourly means
//! with the subject's targets.
//!
//!     cargo run --release --example simulate_subject -- person-5 2

use sleepwatch::config::EngineConfig;
use sleepwatch::detector::HourlyAggregator;
use sleepwatch::simulator::{builtin_profile, generate_frames};
use sleepwatch::SignalEngine;

fn main() {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "person-1".into());
    let hours: f64 = args.next().and_then(|h| h.parse().ok()).unwrap_or(1.0);

    let profile = builtin_profile(&name).unwrap_or_else(|e| {
        eprintln!("{e}");
        std::process::exit(2);
    });
    let cfg = EngineConfig::default();
    let frames = generate_frames(&profile, hours * 3600.0, cfg.rate_hz, 7, &cfg).unwrap();
    println!("{name}: {} frames at {} Hz", frames.len(), cfg.rate_hz);

    let mut engine = SignalEngine::new(cfg);
    let mut hourly = HourlyAggregator::new();
    let mut done = Vec::new();
    for f in frames {
        for s in engine.ingest(&f).unwrap() {
            done.extend(hourly.push(&s));
        }
    }
    if let Some(s) = engine.finish() {
        done.extend(hourly.push(&s));
    }
    done.extend(hourly.finish());

    let show = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.2}"));
    println!("hour  bpm (target)      spo2 (target)     gsr (target)");
    for h in &done {
        let i = (h.hour_index - 1) as usize;
        println!(
            "{:>4}  {:>6} ({:>6.2})  {:>6} ({:>6.2})  {:>7} ({:>7.2})",
            h.hour_index,
            show(h.mean_bpm),
            profile.hr_baseline_bpm[i],
            show(h.mean_spo2),
            profile.spo2_baseline_pct[i],
            show(h.mean_gsr),
            profile.gsr_baseline_us[i],
        );
    }
}
