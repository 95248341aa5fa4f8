//! Record a session to disk, then replay its stored frames twice: once as
//! fast as possible against the stored logs, once paced at 30x.
//!
//!     cargo run --release --example session_replay

use std::time::Instant;

use sleepwatch::pipeline::Pipeline;
use sleepwatch::simulator::{builtin_profile, generate_frames};
use sleepwatch::store::{LogComparer, Manifest, Pacer, ReplayStream, SessionReader, SessionWriter};
use sleepwatch::Config;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tmp = tempfile::tempdir()?;
    let dir = tmp.path().join("person-2-demo");
    let cfg = Config::default();

    let profile = builtin_profile("person-2")?;
    let writer = SessionWriter::create(&dir, &Manifest::new("example", &cfg), &cfg)?;
    let mut pipe = Pipeline::with_recorder(cfg.clone(), writer);
    for f in generate_frames(&profile, 600.0, cfg.engine.rate_hz, 1, &cfg.engine)? {
        pipe.push_frame(&f)?;
    }
    let (outcome, _, _) = pipe.finish(None)?;
    println!("recorded {} samples, {} events into {}", outcome.stats.sample_count, outcome.events.len(), dir.display());

    let session = SessionReader::open(&dir)?;
    println!("finalized: {}, log check: {:?}", session.is_finalized(), session.check_logs()?);

    let start = Instant::now();
    let mut pipe = Pipeline::with_recorder(session.config()?, LogComparer::new(&session)?);
    pipe.push_bytes(&session.frame_bytes()?)?;
    let (_, _, cmp) = pipe.finish(None)?;
    println!(
        "fast replay in {:.2?}: identical={} ({} sample lines, {} event lines)",
        start.elapsed(),
        cmp.identical(),
        cmp.sample_lines,
        cmp.record_lines
    );

    // the first 20 s of the night at 30x takes about 0.67 s
    let start = Instant::now();
    let mut pipe = Pipeline::new(session.config()?);
    pipe.set_pacer(Pacer::new(30.0)?);
    let mut n = 0;
    for f in ReplayStream::new(session.frames_reader()?, f64::INFINITY)?.take(2000) {
        pipe.push_frame(&f?)?;
        n += 1;
    }
    println!("paced replay of {n} frames at 30x took {:.2?}", start.elapsed());
    Ok(())
}
