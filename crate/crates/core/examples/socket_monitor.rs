//! A simulated device serves frames on a local TCP port at 20x real time; a
//! monitor thread connects, scores the stream and prints alerts as JSON.
//!
//!     cargo run --release --example socket_monitor

use std::io::{BufWriter, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::thread;

use sleepwatch::pipeline::Pipeline;
use sleepwatch::protocol::encode_frame;
use sleepwatch::simulator::{builtin_profile, generate_frames};
use sleepwatch::store::Pacer;
use sleepwatch::Config;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = Config::default();
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?;
    println!("device listening on tcp://{addr}");

    // person-5 has a desaturation episode at 7500 s; send the three minutes around it
    let engine_cfg = cfg.engine.clone();
    let device = thread::spawn(move || -> std::io::Result<()> {
        let (stream, _) = listener.accept()?;
        let mut out = BufWriter::new(stream);
        let profile = builtin_profile("person-5").unwrap();
        let mut pacer = Pacer::new(20.0).unwrap();
        let frames = generate_frames(&profile, 7620.0, engine_cfg.rate_hz, 2, &engine_cfg).unwrap();
        for f in frames.skip(7440 * 100) {
            pacer.wait(f.timestamp_ms);
            out.write_all(&encode_frame(&f).unwrap())?;
        }
        out.flush()
    });

    let mut conn = TcpStream::connect(addr)?;
    let mut pipe = Pipeline::new(cfg);
    let mut buf = [0u8; 4096];
    let mut seconds = 0;
    loop {
        let n = conn.read(&mut buf)?;
        if n == 0 {
            break;
        }
        let step = pipe.push_bytes(&buf[..n])?;
        for s in &step.samples {
            seconds += 1;
            if s.t_s % 30 == 0 {
                println!("t={}s spo2={:?} bpm={:?} snore={}", s.t_s, s.spo2_pct.map(|v| v.round()), s.bpm.map(|v| v.round()), s.snore_active);
            }
        }
        for a in &step.alerts {
            println!("{}", serde_json::to_string(a)?);
        }
    }
    device.join().unwrap()?;
    let (outcome, _, _) = pipe.finish(None)?;
    println!("{seconds} seconds scored, {} events, {} alerts", outcome.events.len(), outcome.alert_count);
    for e in &outcome.events {
        println!("  {:?} ({:?}) at {} s for {} s", e.kind, e.klass, e.start_s, e.duration_s);
    }
    println!("diagnostics: {:?}", outcome.parser);
    Ok(())
}
