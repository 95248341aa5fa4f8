//! Apnea event scoring over the 1 Hz vitals stream.
//!
//! Rules, all thresholds from [`DetectorConfig`]:
//!
//! * desaturation: SpO2 at or below `baseline - desat_drop_pct`, where the
//!   baseline is the mean of present, non-event SpO2 values from the
//!   trailing `baseline_window_s` seconds (at least `baseline_min_samples`).
//!   The baseline is frozen while an event is open; the event closes on the
//!   first sample above the frozen threshold or without SpO2.
//! * bradycardia: consecutive samples with bpm below `brady_bpm`.
//! * snore gap: a run of quiet seconds (sound below the burst threshold)
//!   that started right after a loud second with an active snore rhythm and
//!   ended with a loud second at most `snore_gap_max_s` later.
//!
//! Every event must last `min_event_s`. Events are classified once
//! `class_context_s` seconds past their end have been seen: OSA when a snore
//! rhythm was active anywhere within `class_context_s` of the event, CSA when
//! the subject has snored at some point but not around the event, and
//! unclassified otherwise.

mod assess;
mod summary;

pub use assess::{
    assess_session, compute_ahi, AhiResult, CardiacFlags, Evidence, Rule, SessionAssessment, Severity, Verdict,
    GSR_NORMAL_BAND_US,
};
pub use summary::{
    hourly_summary, hours_spanned, session_stats, HourlyAggregator, HourlySummary, MeanRow, SessionStats,
    StatsAccumulator,
};

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::config::DetectorConfig;
use crate::engine::VitalsSample;
use crate::error::DetectorError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Desaturation,
    Bradycardia,
    SnoreGap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApneaClass {
    Osa,
    Csa,
    Unclassified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApneaEvent {
    pub kind: EventKind,
    pub klass: ApneaClass,
    pub start_s: u64,
    pub duration_s: u64,
    /// Nadir SpO2, minimum bpm, or gap length in seconds.
    pub detail: f64,
}

impl ApneaEvent {
    /// Last second covered by the event.
    pub fn end_s(&self) -> u64 {
        self.start_s + self.duration_s - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlertSeverity {
    Warning,
    Critical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alert {
    pub t_s: u64,
    pub severity: AlertSeverity,
    pub code: String,
    pub message: String,
    pub value: f64,
}

#[derive(Debug, Clone, Copy)]
struct OpenRun {
    start: u64,
    last: u64,
    extremum: f64,
    threshold: f64,
}

#[derive(Debug, Clone, Copy)]
struct QuietRun {
    start: u64,
    rhythm: bool,
}

#[derive(Debug, Clone, Copy, Default)]
struct AlertRun {
    count: u64,
    fired: bool,
}

#[derive(Debug, Clone, Copy)]
enum AlertRule {
    SpO2Low,
    SpO2Critical,
    BpmCritical,
}

impl AlertRule {
    const ALL: [AlertRule; 3] = [AlertRule::SpO2Low, AlertRule::SpO2Critical, AlertRule::BpmCritical];
}

/// Streaming, single-session event detector.
#[derive(Debug, Clone)]
pub struct EventDetector {
    cfg: DetectorConfig,
    last_t: Option<u64>,
    history: VecDeque<(u64, f64)>,
    desat: Option<OpenRun>,
    brady: Option<OpenRun>,
    quiet: Option<QuietRun>,
    last_loud_rhythm: Option<bool>,
    snore_times: VecDeque<u64>,
    ever_snored_until: Option<u64>,
    pending: Vec<ApneaEvent>,
    runs: [AlertRun; 3],
    rejected: u64,
}

impl EventDetector {
    pub fn new(cfg: DetectorConfig) -> Self {
        Self {
            cfg,
            last_t: None,
            history: VecDeque::new(),
            desat: None,
            brady: None,
            quiet: None,
            last_loud_rhythm: None,
            snore_times: VecDeque::new(),
            ever_snored_until: None,
            pending: Vec::new(),
            runs: [AlertRun::default(); 3],
            rejected: 0,
        }
    }

    /// Samples refused because they arrived out of order.
    pub fn rejected(&self) -> u64 {
        self.rejected
    }

    /// Consumes one sample; returns newly classified events and new alerts.
    pub fn update(&mut self, s: &VitalsSample) -> Result<(Vec<ApneaEvent>, Vec<Alert>), DetectorError> {
        let t = s.t_s;
        if let Some(last) = self.last_t {
            if t <= last {
                self.rejected += 1;
                return Err(DetectorError::OutOfOrder { last, got: t });
            }
        }
        let mut events = self.classify_ready(|end| end < t);
        if self.last_t.is_some_and(|last| t > last + 1) {
            self.close_desat();
            self.close_brady();
            self.quiet = None;
            self.last_loud_rhythm = None;
            self.runs = [AlertRun::default(); 3];
        }
        self.last_t = Some(t);

        if s.snore_active {
            self.snore_times.push_back(t);
            self.ever_snored_until.get_or_insert(t);
        }
        self.step_desat(t, s.spo2_pct);
        self.step_brady(t, s.bpm);
        self.step_snore_gap(t, s);
        let alerts = self.step_alerts(t, s);

        events.extend(self.classify_ready(|end| end <= t));
        self.prune(t);
        Ok((events, alerts))
    }

    /// Closes open runs and classifies every pending event.
    pub fn finish(&mut self) -> Vec<ApneaEvent> {
        self.close_desat();
        self.close_brady();
        self.classify_ready(|_| true)
    }

    fn baseline(&self, t: u64) -> Option<f64> {
        let from = t.saturating_sub(self.cfg.baseline_window_s);
        let vals: Vec<f64> = self
            .history
            .iter()
            .filter(|(ht, _)| *ht >= from && *ht < t)
            .map(|(_, v)| *v)
            .collect();
        if vals.len() < self.cfg.baseline_min_samples {
            return None;
        }
        Some(vals.iter().sum::<f64>() / vals.len() as f64)
    }

    fn step_desat(&mut self, t: u64, spo2: Option<f64>) {
        if let Some(open) = &mut self.desat {
            match spo2 {
                Some(v) if v <= open.threshold => {
                    open.last = t;
                    open.extremum = open.extremum.min(v);
                    return;
                }
                _ => self.close_desat(),
            }
        }
        let Some(v) = spo2 else { return };
        match self.baseline(t) {
            Some(b) if v <= b - self.cfg.desat_drop_pct => {
                self.desat = Some(OpenRun { start: t, last: t, extremum: v, threshold: b - self.cfg.desat_drop_pct });
            }
            _ => self.history.push_back((t, v)),
        }
    }

    fn close_desat(&mut self) {
        if let Some(r) = self.desat.take() {
            self.emit_run(EventKind::Desaturation, r);
        }
    }

    fn step_brady(&mut self, t: u64, bpm: Option<f64>) {
        match bpm {
            Some(v) if v < self.cfg.brady_bpm => match &mut self.brady {
                Some(open) => {
                    open.last = t;
                    open.extremum = open.extremum.min(v);
                }
                None => {
                    self.brady = Some(OpenRun { start: t, last: t, extremum: v, threshold: self.cfg.brady_bpm })
                }
            },
            _ => self.close_brady(),
        }
    }

    fn close_brady(&mut self) {
        if let Some(r) = self.brady.take() {
            self.emit_run(EventKind::Bradycardia, r);
        }
    }

    fn emit_run(&mut self, kind: EventKind, r: OpenRun) {
        let duration_s = r.last - r.start + 1;
        if duration_s >= self.cfg.min_event_s {
            self.pending.push(ApneaEvent {
                kind,
                klass: ApneaClass::Unclassified,
                start_s: r.start,
                duration_s,
                detail: r.extremum,
            });
        }
    }

    fn step_snore_gap(&mut self, t: u64, s: &VitalsSample) {
        let loud = s.sound_db.is_some_and(|d| d >= self.cfg.burst_threshold_db);
        if loud {
            if let Some(q) = self.quiet.take() {
                let gap = t - q.start;
                if q.rhythm && gap >= self.cfg.min_event_s && gap <= self.cfg.snore_gap_max_s {
                    self.pending.push(ApneaEvent {
                        kind: EventKind::SnoreGap,
                        klass: ApneaClass::Unclassified,
                        start_s: q.start,
                        duration_s: gap,
                        detail: gap as f64,
                    });
                }
            }
            self.last_loud_rhythm = Some(s.snore_active);
        } else if self.quiet.is_none() {
            if let Some(rhythm) = self.last_loud_rhythm {
                self.quiet = Some(QuietRun { start: t, rhythm });
            }
        }
    }

    fn step_alerts(&mut self, t: u64, s: &VitalsSample) -> Vec<Alert> {
        let mut out = Vec::new();
        for (i, rule) in AlertRule::ALL.iter().enumerate() {
            let (value, threshold, severity, code, what) = match rule {
                AlertRule::SpO2Low => (s.spo2_pct, self.cfg.alert_warn_spo2, AlertSeverity::Warning, "spo2_low", "SpO2"),
                AlertRule::SpO2Critical => {
                    (s.spo2_pct, self.cfg.alert_crit_spo2, AlertSeverity::Critical, "spo2_critical", "SpO2")
                }
                AlertRule::BpmCritical => (s.bpm, self.cfg.alert_crit_bpm, AlertSeverity::Critical, "bpm_critical", "heart rate"),
            };
            let run = &mut self.runs[i];
            match value {
                Some(v) if v < threshold => {
                    run.count += 1;
                    if run.count >= self.cfg.alert_sustain_s && !run.fired {
                        run.fired = true;
                        out.push(Alert {
                            t_s: t,
                            severity,
                            code: code.to_string(),
                            message: format!(
                                "{what} below {threshold} for {} s",
                                self.cfg.alert_sustain_s
                            ),
                            value: v,
                        });
                    }
                }
                _ => *run = AlertRun::default(),
            }
        }
        out
    }

    fn classify_ready(&mut self, ready: impl Fn(u64) -> bool) -> Vec<ApneaEvent> {
        let ctx = self.cfg.class_context_s;
        let (done, keep): (Vec<_>, Vec<_>) = self
            .pending
            .drain(..)
            .partition(|e| ready(e.end_s() + ctx));
        self.pending = keep;
        let mut out = Vec::with_capacity(done.len());
        for mut e in done {
            let lo = e.start_s.saturating_sub(ctx);
            let hi = e.end_s() + ctx;
            let near = self.snore_times.iter().any(|&st| st >= lo && st <= hi);
            let capable = self.ever_snored_until.is_some_and(|first| first <= hi);
            e.klass = if near {
                ApneaClass::Osa
            } else if capable {
                ApneaClass::Csa
            } else {
                ApneaClass::Unclassified
            };
            out.push(e);
        }
        out.sort_by(|a, b| (a.start_s, a.kind).cmp(&(b.start_s, b.kind)));
        out
    }

    fn prune(&mut self, t: u64) {
        let from = t.saturating_sub(self.cfg.baseline_window_s);
        while self.history.front().is_some_and(|(ht, _)| *ht < from) {
            self.history.pop_front();
        }
        let oldest_open = [
            self.desat.map(|r| r.start),
            self.brady.map(|r| r.start),
            self.quiet.map(|q| q.start),
        ]
        .into_iter()
        .flatten()
        .chain(self.pending.iter().map(|e| e.start_s))
        .min()
        .unwrap_or(t);
        let keep_from = oldest_open.min(t).saturating_sub(self.cfg.class_context_s);
        while self.snore_times.front().is_some_and(|&st| st < keep_from) {
            self.snore_times.pop_front();
        }
    }
}

/// Scores a complete sample series in one call.
pub fn score_series(cfg: &DetectorConfig, samples: &[VitalsSample]) -> (Vec<ApneaEvent>, Vec<Alert>) {
    let mut det = EventDetector::new(cfg.clone());
    let mut events = Vec::new();
    let mut alerts = Vec::new();
    for s in samples {
        if let Ok((e, a)) = det.update(s) {
            events.extend(e);
            alerts.extend(a);
        }
    }
    events.extend(det.finish());
    (events, alerts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(spo2: impl Fn(u64) -> f64, len: u64) -> Vec<VitalsSample> {
        (0..len)
            .map(|t| VitalsSample {
                spo2_pct: Some(spo2(t)),
                bpm: Some(70.0),
                gsr_us: Some(200.0),
                sound_db: Some(37.0),
                ..VitalsSample::empty(t)
            })
            .collect()
    }

    #[test]
    fn constant_spo2_is_quiet() {
        let (events, alerts) = score_series(&DetectorConfig::default(), &series(|_| 96.0, 600));
        assert!(events.is_empty());
        assert!(alerts.is_empty());
    }

    #[test]
    fn four_point_dip_for_fifteen_seconds() {
        let s = series(|t| if (200..215).contains(&t) { 92.0 } else { 96.0 }, 600);
        let (events, alerts) = score_series(&DetectorConfig::default(), &s);
        assert_eq!(events.len(), 1);
        let e = &events[0];
        assert_eq!((e.kind, e.start_s, e.duration_s, e.detail), (EventKind::Desaturation, 200, 15, 92.0));
        assert_eq!(e.klass, ApneaClass::Unclassified);
        // 92 is not below the warning level
        assert!(alerts.is_empty());
    }

    #[test]
    fn two_point_dip_is_ignored() {
        let s = series(|t| if (200..215).contains(&t) { 94.0 } else { 96.0 }, 600);
        assert!(score_series(&DetectorConfig::default(), &s).0.is_empty());
    }

    #[test]
    fn short_dip_is_not_an_event() {
        let s = series(|t| if (200..209).contains(&t) { 90.0 } else { 96.0 }, 600);
        assert!(score_series(&DetectorConfig::default(), &s).0.is_empty());
    }

    #[test]
    fn critical_alert_once_per_episode() {
        let s = series(|t| if (100..140).contains(&t) || (300..320).contains(&t) { 88.0 } else { 96.0 }, 600);
        let (_, alerts) = score_series(&DetectorConfig::default(), &s);
        let crit: Vec<_> = alerts.iter().filter(|a| a.code == "spo2_critical").collect();
        assert_eq!(crit.len(), 2);
        assert_eq!(crit[0].t_s, 109);
        assert_eq!(crit[0].severity, AlertSeverity::Critical);
        assert_eq!(alerts.iter().filter(|a| a.code == "spo2_low").count(), 2);
    }

    #[test]
    fn out_of_order_rejected() {
        let mut d = EventDetector::new(DetectorConfig::default());
        let s = series(|_| 96.0, 3);
        d.update(&s[1]).unwrap();
        assert_eq!(d.update(&s[0]), Err(DetectorError::OutOfOrder { last: 1, got: 0 }));
        assert_eq!(d.rejected(), 1);
    }

    #[test]
    fn bradycardia_run() {
        let mut s = series(|_| 96.0, 300);
        for x in &mut s[100..130] {
            x.bpm = Some(44.0);
        }
        s[110].bpm = Some(42.0);
        let (events, _) = score_series(&DetectorConfig::default(), &s);
        assert_eq!(events.len(), 1);
        assert_eq!((events[0].kind, events[0].duration_s, events[0].detail), (EventKind::Bradycardia, 30, 42.0));
    }

    #[test]
    fn snore_gap_is_osa() {
        let mut s = series(|_| 96.0, 400);
        for x in &mut s {
            let loud = x.t_s % 4 == 0 && !(200..230).contains(&x.t_s);
            x.sound_db = Some(if loud { 60.0 } else { 37.0 });
            x.snore_active = x.t_s >= 12 && !(205..240).contains(&x.t_s);
        }
        let (events, _) = score_series(&DetectorConfig::default(), &s);
        let gaps: Vec<_> = events.iter().filter(|e| e.kind == EventKind::SnoreGap).collect();
        assert_eq!(gaps.len(), 1);
        // last burst at 196, next at 232
        assert_eq!((gaps[0].start_s, gaps[0].duration_s), (197, 35));
        assert_eq!(gaps[0].klass, ApneaClass::Osa);
    }

    #[test]
    fn desaturation_away_from_snoring_is_csa() {
        let mut s = series(|t| if (1000..1020).contains(&t) { 90.0 } else { 96.0 }, 1200);
        for x in &mut s[..300] {
            x.snore_active = true;
        }
        let (events, _) = score_series(&DetectorConfig::default(), &s);
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].klass, ApneaClass::Csa);
    }
}
