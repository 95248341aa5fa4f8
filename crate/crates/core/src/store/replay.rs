//! Timed replay of a stored frame log.

use std::collections::VecDeque;
use std::io::{self, Read};
use std::thread;
use std::time::{Duration, Instant};

use crate::error::StoreError;
use crate::protocol::{FrameDecoder, SensorFrame};

const CHUNK: usize = 64 * 1024;

/// Wall-clock offset at which the frame stamped `ts_ms` is due, relative to
/// the first frame stamped `ts0_ms`.
pub fn pacing_offset(ts0_ms: u32, ts_ms: u32, speed: f64) -> Duration {
    if speed.is_infinite() {
        return Duration::ZERO;
    }
    let dt = f64::from(ts_ms.saturating_sub(ts0_ms)) / 1000.0;
    Duration::from_secs_f64(dt / speed)
}

/// Sleeps until each frame's scheduled time. Schedules are absolute, so
/// oversleeping on one frame does not accumulate drift.
#[derive(Debug, Clone)]
pub struct Pacer {
    speed: f64,
    origin: Option<(Instant, u32)>,
}

impl Pacer {
    /// `speed` is a multiple of real time; `f64::INFINITY` never sleeps.
    pub fn new(speed: f64) -> Result<Self, StoreError> {
        if speed.is_nan() || speed <= 0.0 {
            return Err(StoreError::BadSpeed(speed));
        }
        Ok(Self { speed, origin: None })
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn wait(&mut self, ts_ms: u32) {
        if self.speed.is_infinite() {
            return;
        }
        let (start, ts0) = *self.origin.get_or_insert((Instant::now(), ts_ms));
        let due = start + pacing_offset(ts0, ts_ms, self.speed);
        let now = Instant::now();
        if due > now {
            thread::sleep(due - now);
        }
    }
}

/// Frames decoded from a byte source, released on the replay schedule.
pub struct ReplayStream<R: Read> {
    source: R,
    decoder: FrameDecoder,
    queue: VecDeque<SensorFrame>,
    pacer: Pacer,
    buf: Vec<u8>,
    eof: bool,
}

impl<R: Read> ReplayStream<R> {
    pub fn new(source: R, speed: f64) -> Result<Self, StoreError> {
        Ok(Self {
            source,
            decoder: FrameDecoder::new(),
            queue: VecDeque::new(),
            pacer: Pacer::new(speed)?,
            buf: vec![0; CHUNK],
            eof: false,
        })
    }

    pub fn decoder(&self) -> &FrameDecoder {
        &self.decoder
    }
}

impl<R: Read> Iterator for ReplayStream<R> {
    type Item = io::Result<SensorFrame>;

    fn next(&mut self) -> Option<Self::Item> {
        while self.queue.is_empty() && !self.eof {
            match self.source.read(&mut self.buf) {
                Ok(0) => self.eof = true,
                Ok(n) => {
                    let (frames, _) = self.decoder.decode_stream(&self.buf[..n]);
                    self.queue.extend(frames);
                }
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Some(Err(e)),
            }
        }
        let f = self.queue.pop_front()?;
        self.pacer.wait(f.timestamp_ms);
        Some(Ok(f))
    }
}
