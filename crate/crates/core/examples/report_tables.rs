//! Simulate all five builtin subjects, store each night, and print the
//! hourly BPM / SpO2 / GSR tables next to the published values, followed by
//! each subject's verdict.
//!
//!     cargo run --release --example report_tables -- 6

use sleepwatch::detector::MeanRow;
use sleepwatch::pipeline::Pipeline;
use sleepwatch::simulator::{builtin_profile, generate_frames, BUILTIN_NAMES, GSR_MEAN_ROW, HR_MEAN_ROW, SPO2_MEAN_ROW};
use sleepwatch::store::{render_report, Manifest, ReportFormat, SessionReader, SessionWriter};
use sleepwatch::Config;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let hours: f64 = std::env::args().nth(1).and_then(|h| h.parse().ok()).unwrap_or(6.0);
    let tmp = tempfile::tempdir()?;
    let cfg = Config::default();

    let mut tables = Vec::new();
    for (i, name) in BUILTIN_NAMES.iter().enumerate() {
        let profile = builtin_profile(name)?;
        let dir = tmp.path().join(name);
        let writer = SessionWriter::create(&dir, &Manifest::new("example", &cfg), &cfg)?;
        let mut pipe = Pipeline::with_recorder(cfg.clone(), writer);
        for f in generate_frames(&profile, hours * 3600.0, cfg.engine.rate_hz, 7, &cfg.engine)? {
            pipe.push_frame(&f)?;
        }
        let (outcome, _, _) = pipe.finish(None)?;
        let doc = render_report(&SessionReader::open(&dir)?, ReportFormat::TableText)?;
        let verdict = outcome.assessment.as_ref().map(|a| format!("{:?}, AHI {:.1}", a.verdict, a.ahi));
        println!("{name}: {}", verdict.unwrap_or_default());
        tables.push((profile, doc.summaries, i));
    }

    for (title, col) in [("BPM", 0), ("SpO2", 1), ("GSR", 2)] {
        println!("\n{title}: measured (published)");
        print!("{:<6}", "hour");
        for name in BUILTIN_NAMES {
            print!("{name:>20}");
        }
        println!();
        let rows = tables[0].1.len();
        for h in 0..rows {
            print!("{:<6}", h + 1);
            for (profile, summaries, _) in &tables {
                let s = &summaries[h];
                let (got, want) = match col {
                    0 => (s.mean_bpm, profile.hr_baseline_bpm[h]),
                    1 => (s.mean_spo2, profile.spo2_baseline_pct[h]),
                    _ => (s.mean_gsr, profile.gsr_baseline_us[h]),
                };
                print!("{:>20}", format!("{:.2} ({want:.2})", got.unwrap_or(f64::NAN)));
            }
            println!();
        }
        if rows == 6 {
            print!("{:<6}", "Mean");
            for (_, summaries, i) in &tables {
                let m = MeanRow::of(summaries);
                let (got, want) = match col {
                    0 => (m.bpm, HR_MEAN_ROW[*i]),
                    1 => (m.spo2, SPO2_MEAN_ROW[*i]),
                    _ => (m.gsr, GSR_MEAN_ROW[*i]),
                };
                print!("{:>20}", format!("{:.2} ({want:.2})", got.unwrap_or(f64::NAN)));
            }
            println!();
        }
    }
    Ok(())
}
