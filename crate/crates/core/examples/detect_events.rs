//! Score a hand-built 1 Hz series: a desaturation during snoring, a quiet
//! pause in the snoring, a slow-heart run, and the resulting assessment.
//!
//!     cargo run --example detect_events

use sleepwatch::config::Config;
use sleepwatch::detector::{assess_session, hourly_summary, session_stats, EventDetector};
use sleepwatch::VitalsSample;

fn main() {
    let cfg = Config::default();
    let series: Vec<VitalsSample> = (0..3600u64)
        .map(|t| {
            let snoring = (300..1500).contains(&t) && !(900..930).contains(&t);
            let loud = snoring && t % 4 == 0;
            VitalsSample {
                bpm: Some(if (2000..2030).contains(&t) { 44.0 } else { 68.0 }),
                spo2_pct: Some(if (600..625).contains(&t) { 91.0 } else { 96.0 }),
                gsr_us: Some(210.0),
                sound_db: Some(if loud { 59.0 } else { 37.0 }),
                snore_active: snoring && t >= 312,
                snore_period_s: (snoring && t >= 312).then_some(4.0),
                ..VitalsSample::empty(t)
            }
        })
        .collect();

    let mut det = EventDetector::new(cfg.detector.clone());
    let mut events = Vec::new();
    for s in &series {
        let (e, alerts) = det.update(s).unwrap();
        for a in alerts {
            println!("alert   t={:>4}s {:<13} {}", a.t_s, a.code, a.message);
        }
        events.extend(e);
    }
    events.extend(det.finish());
    for e in &events {
        println!(
            "event   t={:>4}s {:?} ({:?}) for {} s, detail {:.1}",
            e.start_s, e.kind, e.klass, e.duration_s, e.detail
        );
    }

    let summaries = vec![hourly_summary(1, &series)];
    let stats = session_stats(&series);
    let a = assess_session(&cfg.assessment, &summaries, &events, &stats).unwrap();
    println!("\nverdict {:?}, AHI {:.1} ({:?})", a.verdict, a.ahi, a.severity);
    for e in &a.evidence {
        println!("  {:?}: {}", e.rule, e.detail);
    }
}
