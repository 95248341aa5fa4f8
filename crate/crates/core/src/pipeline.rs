//! Frames in, samples, events, alerts and an assessment out.
//!
//! [`Pipeline`] chains the frame decoder, the signal engine, the event
//! detector and the session aggregators, and hands everything it produces to
//! a [`Recorder`]. Memory stays bounded: only detector windows, one hourly
//! accumulator and the (short) event list are retained.

use crate::config::Config;
use crate::detector::{
    assess_session, Alert, ApneaEvent, EventDetector, HourlyAggregator, HourlySummary, SessionAssessment,
    SessionStats, StatsAccumulator,
};
use crate::engine::{EngineDiagnostics, SignalEngine, VitalsSample};
use crate::error::StoreError;
use crate::protocol::{encode_frame, FrameDecoder, ParserDiagnostics, SensorFrame};
use crate::store::{EventRecord, FinalRecord, Pacer, Recorder};

/// What one call produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepOutput {
    pub samples: Vec<VitalsSample>,
    pub events: Vec<ApneaEvent>,
    pub alerts: Vec<Alert>,
}

impl StepOutput {
    fn extend(&mut self, other: StepOutput) {
        self.samples.extend(other.samples);
        self.events.extend(other.events);
        self.alerts.extend(other.alerts);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionOutcome {
    pub summaries: Vec<HourlySummary>,
    pub events: Vec<ApneaEvent>,
    pub alert_count: usize,
    pub stats: SessionStats,
    pub assessment: Option<SessionAssessment>,
    pub parser: ParserDiagnostics,
    pub engine: EngineDiagnostics,
    pub truncated: Option<String>,
}

pub struct Pipeline<R: Recorder = ()> {
    cfg: Config,
    decoder: FrameDecoder,
    engine: SignalEngine,
    detector: EventDetector,
    hourly: HourlyAggregator,
    stats: StatsAccumulator,
    summaries: Vec<HourlySummary>,
    events: Vec<ApneaEvent>,
    alert_count: usize,
    pacer: Option<Pacer>,
    recorder: R,
}

impl Pipeline<()> {
    pub fn new(cfg: Config) -> Self {
        Self::with_recorder(cfg, ())
    }
}

impl<R: Recorder> Pipeline<R> {
    pub fn with_recorder(cfg: Config, recorder: R) -> Self {
        Self {
            decoder: FrameDecoder::new(),
            engine: SignalEngine::new(cfg.engine.clone()),
            detector: EventDetector::new(cfg.detector.clone()),
            hourly: HourlyAggregator::new(),
            stats: StatsAccumulator::new(),
            summaries: Vec::new(),
            events: Vec::new(),
            alert_count: 0,
            pacer: None,
            recorder,
            cfg,
        }
    }

    /// Delays each decoded frame until its timestamp comes due.
    pub fn set_pacer(&mut self, pacer: Pacer) {
        self.pacer = Some(pacer);
    }

    pub fn config(&self) -> &Config {
        &self.cfg
    }

    pub fn recorder(&self) -> &R {
        &self.recorder
    }

    pub fn parser_diagnostics(&self) -> ParserDiagnostics {
        self.decoder.diagnostics()
    }

    pub fn engine_diagnostics(&self) -> EngineDiagnostics {
        self.engine.diagnostics()
    }

    /// Bytes held by the decoder awaiting the rest of a frame.
    pub fn pending_bytes(&self) -> usize {
        self.decoder.pending_bytes()
    }

    /// Records a raw chunk as received and processes every frame in it.
    pub fn push_bytes(&mut self, chunk: &[u8]) -> Result<StepOutput, StoreError> {
        self.recorder.frame_bytes(chunk)?;
        let (frames, _) = self.decoder.decode_stream(chunk);
        let mut out = StepOutput::default();
        for f in &frames {
            if let Some(p) = &mut self.pacer {
                p.wait(f.timestamp_ms);
            }
            out.extend(self.process(f)?);
        }
        Ok(out)
    }

    /// Inline path: encodes the frame for the log and processes it directly.
    pub fn push_frame(&mut self, frame: &SensorFrame) -> Result<StepOutput, StoreError> {
        let bytes = encode_frame(frame)?;
        self.push_bytes(&bytes)
    }

    fn process(&mut self, frame: &SensorFrame) -> Result<StepOutput, StoreError> {
        let mut out = StepOutput::default();
        // out-of-order frames are counted in the engine diagnostics
        if let Ok(samples) = self.engine.ingest(frame) {
            for s in samples {
                out.extend(self.on_sample(s)?);
            }
        }
        Ok(out)
    }

    fn on_sample(&mut self, s: VitalsSample) -> Result<StepOutput, StoreError> {
        let mut out = StepOutput::default();
        self.recorder.sample(&s)?;
        self.stats.push(&s);
        self.summaries.extend(self.hourly.push(&s));
        if let Ok((events, alerts)) = self.detector.update(&s) {
            self.record(&events, &alerts)?;
            out.events = events;
            out.alerts = alerts;
        }
        out.samples.push(s);
        Ok(out)
    }

    fn record(&mut self, events: &[ApneaEvent], alerts: &[Alert]) -> Result<(), StoreError> {
        for a in alerts {
            self.recorder.record(&EventRecord::Alert(a.clone()))?;
        }
        for e in events {
            self.recorder.record(&EventRecord::Event(e.clone()))?;
        }
        self.alert_count += alerts.len();
        self.events.extend_from_slice(events);
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), StoreError> {
        self.recorder.flush()
    }

    /// Flushes every stage, assesses the session and finalizes the recorder.
    /// `truncated` explains an early end of input.
    pub fn finish(mut self, truncated: Option<String>) -> Result<(SessionOutcome, StepOutput, R), StoreError> {
        let mut tail = StepOutput::default();
        if let Some(s) = self.engine.finish() {
            tail.extend(self.on_sample(s)?);
        }
        let events = self.detector.finish();
        self.record(&events, &[])?;
        tail.events.extend(events);
        self.summaries.extend(self.hourly.finish());

        let stats = self.stats.stats();
        let assessment = if stats.duration_s() > 0 {
            assess_session(&self.cfg.assessment, &self.summaries, &self.events, &stats).ok()
        } else {
            None
        };
        let outcome = SessionOutcome {
            summaries: self.summaries,
            events: self.events,
            alert_count: self.alert_count,
            stats,
            assessment,
            parser: self.decoder.diagnostics(),
            engine: self.engine.diagnostics(),
            truncated,
        };
        let fin = FinalRecord {
            truncated: outcome.truncated.clone(),
            summaries: outcome.summaries.clone(),
            assessment: outcome.assessment.clone(),
            stats: outcome.stats.clone(),
            event_count: outcome.events.len(),
            alert_count: outcome.alert_count,
            parser: outcome.parser,
            engine: outcome.engine,
        };
        self.recorder.finalize(&fin)?;
        Ok((outcome, tail, self.recorder))
    }
}

/// Runs a frame sequence through a recorder-less pipeline.
pub fn run_frames<'a, I>(cfg: &Config, frames: I) -> Result<SessionOutcome, StoreError>
where
    I: IntoIterator<Item = &'a SensorFrame>,
{
    let mut p = Pipeline::new(cfg.clone());
    for f in frames {
        p.push_frame(f)?;
    }
    Ok(p.finish(None)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::encode_stream;

    fn flat_frames(seconds: u32) -> Vec<SensorFrame> {
        (0..seconds * 100)
            .map(|i| SensorFrame {
                seq: i as u16,
                timestamp_ms: i * 10,
                ecg_raw: 512,
                ppg_raw: 400,
                red_raw: 90_000,
                ir_raw: 110_000,
                gsr_raw: 300,
                sound_raw: 512,
            })
            .collect()
    }

    #[test]
    fn bytes_and_frames_agree() {
        let frames = flat_frames(5);
        let mut a = Pipeline::new(Config::default());
        let mut sa = Vec::new();
        for f in &frames {
            sa.extend(a.push_frame(f).unwrap().samples);
        }
        let mut b = Pipeline::new(Config::default());
        let bytes = encode_stream(&frames).unwrap();
        let mut sb = Vec::new();
        for chunk in bytes.chunks(1000) {
            sb.extend(b.push_bytes(chunk).unwrap().samples);
        }
        let (oa, ta, _) = a.finish(None).unwrap();
        let (ob, tb, _) = b.finish(None).unwrap();
        sa.extend(ta.samples);
        sb.extend(tb.samples);
        assert_eq!(sa, sb);
        assert_eq!(sa.len(), 5);
        assert_eq!(oa, ob);
        assert_eq!(oa.summaries.len(), 1);
        assert_eq!(oa.parser.frames_ok, 500);
    }

    #[test]
    fn empty_session_has_no_assessment() {
        let (o, _, _) = Pipeline::new(Config::default()).finish(None).unwrap();
        assert!(o.assessment.is_none());
        assert!(o.summaries.is_empty());
    }
}
