//! Describe a subject in TOML, simulate two hours of it and print the
//! assessment.
//!
//!     cargo run --release --example custom_profile

use sleepwatch::pipeline::run_frames;
use sleepwatch::simulator::{generate_frames, SubjectProfile};
use sleepwatch::store::assessment_text;
use sleepwatch::Config;

const PROFILE: &str = r#"
label = "quiet-desaturator"
age_group = "36-50"
gender = "female"
body_status = "no snoring, repeated oxygen dips"
hr_baseline_bpm = [64.0, 61.0]
spo2_baseline_pct = [96.5, 96.0]
gsr_baseline_us = [300.0, 280.0]
ambient_db = 36.5

[[episodes]]
start_s = 1200.0
duration_s = 30.0
spo2_nadir_pct = 89.0

[[episodes]]
start_s = 2400.0
duration_s = 35.0
spo2_nadir_pct = 88.0
hr_effect = { bradycardia = 46.0 }

[[episodes]]
start_s = 4800.0
duration_s = 30.0
spo2_nadir_pct = 90.0
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let profile = SubjectProfile::from_toml_str(PROFILE)?;
    profile.validate()?;
    let cfg = Config::default();
    let frames: Vec<_> =
        generate_frames(&profile, profile.hours() as f64 * 3600.0, cfg.engine.rate_hz, 5, &cfg.engine)?.collect();
    let outcome = run_frames(&cfg, &frames)?;
    for h in &outcome.summaries {
        println!(
            "hour {}: bpm {:.2} spo2 {:.2} gsr {:.2}",
            h.hour_index,
            h.mean_bpm.unwrap_or(f64::NAN),
            h.mean_spo2.unwrap_or(f64::NAN),
            h.mean_gsr.unwrap_or(f64::NAN)
        );
    }
    for e in &outcome.events {
        println!("{:?} ({:?}) at {} s for {} s", e.kind, e.klass, e.start_s, e.duration_s);
    }
    if let Some(a) = &outcome.assessment {
        print!("{}", assessment_text(a));
    }
    Ok(())
}
