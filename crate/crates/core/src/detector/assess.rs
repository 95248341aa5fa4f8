//! AHI and the end-of-session verdict.

use serde::{Deserialize, Serialize};

use super::summary::{HourlySummary, MeanRow, SessionStats};
use super::{ApneaClass, ApneaEvent, EventKind};
use crate::config::AssessmentConfig;
use crate::error::DetectorError;

/// Normal skin conductance band, micro-Siemens.
pub const GSR_NORMAL_BAND_US: (f64, f64) = (250.0, 450.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    None,
    Mild,
    Moderate,
    Severe,
}

impl Severity {
    pub fn from_ahi(ahi: f64) -> Self {
        if ahi < 5.0 {
            Severity::None
        } else if ahi < 15.0 {
            Severity::Mild
        } else if ahi <= 30.0 {
            Severity::Moderate
        } else {
            Severity::Severe
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AhiResult {
    pub ahi: f64,
    pub event_count: usize,
    pub severity: Severity,
}

/// Desaturation and snore-gap events per hour of recording.
pub fn compute_ahi(events: &[ApneaEvent], session_duration_s: u64) -> Result<AhiResult, DetectorError> {
    if session_duration_s == 0 {
        return Err(DetectorError::ZeroDuration);
    }
    let event_count = events
        .iter()
        .filter(|e| matches!(e.kind, EventKind::Desaturation | EventKind::SnoreGap))
        .count();
    let ahi = event_count as f64 * 3600.0 / session_duration_s as f64;
    Ok(AhiResult { ahi, event_count, severity: Severity::from_ahi(ahi) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    NoIndication,
    OsaSuspected,
    CsaSuspected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    LowSpo2WithSnoring,
    BradycardiaWithSnoring,
    DesaturationWithoutSnoring,
    AhiThreshold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub rule: Rule,
    pub suggests: Verdict,
    pub detail: String,
    pub values: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CardiacFlags {
    /// Seconds carrying an R-wave loss annotation.
    pub r_loss: u64,
    pub r_gain: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionAssessment {
    pub verdict: Verdict,
    pub ahi: f64,
    pub severity: Severity,
    pub evidence: Vec<Evidence>,
    pub cardiac_flags: CardiacFlags,
    pub observations: Vec<String>,
}

/// Applies the enabled rules. OSA evidence outranks CSA evidence.
pub fn assess_session(
    cfg: &AssessmentConfig,
    summaries: &[HourlySummary],
    events: &[ApneaEvent],
    stats: &SessionStats,
) -> Result<SessionAssessment, DetectorError> {
    let ahi = compute_ahi(events, stats.duration_s())?;
    let snoring = stats.snore_detected();
    let mut evidence = Vec::new();

    if cfg.low_spo2_with_snoring && snoring {
        let low: Vec<&HourlySummary> = summaries
            .iter()
            .filter(|h| h.mean_spo2.is_some_and(|m| m < cfg.low_spo2_mean_pct))
            .collect();
        if !low.is_empty() {
            let mut values: Vec<(String, f64)> = low
                .iter()
                .map(|h| (format!("hour_{}_mean_spo2", h.hour_index), h.mean_spo2.unwrap()))
                .collect();
            values.push(("snore_active_s".into(), stats.snore_active_s as f64));
            evidence.push(Evidence {
                rule: Rule::LowSpo2WithSnoring,
                suggests: Verdict::OsaSuspected,
                detail: format!(
                    "{} hour(s) with mean SpO2 below {} % while snoring",
                    low.len(),
                    cfg.low_spo2_mean_pct
                ),
                values,
            });
        }
    }

    let brady: Vec<&ApneaEvent> = events.iter().filter(|e| e.kind == EventKind::Bradycardia).collect();
    if cfg.bradycardia_with_snoring && snoring && !brady.is_empty() {
        let min_bpm = brady.iter().map(|e| e.detail).fold(f64::INFINITY, f64::min);
        evidence.push(Evidence {
            rule: Rule::BradycardiaWithSnoring,
            suggests: Verdict::OsaSuspected,
            detail: format!("{} bradycardia episode(s) in a snoring subject", brady.len()),
            values: vec![
                ("bradycardia_events".into(), brady.len() as f64),
                ("min_bpm".into(), min_bpm),
                ("first_start_s".into(), brady[0].start_s as f64),
            ],
        });
    }

    let silent_desats: Vec<&ApneaEvent> = events
        .iter()
        .filter(|e| e.kind == EventKind::Desaturation && e.klass != ApneaClass::Osa)
        .collect();
    if cfg.desaturation_without_snoring && !silent_desats.is_empty() {
        let nadir = silent_desats.iter().map(|e| e.detail).fold(f64::INFINITY, f64::min);
        evidence.push(Evidence {
            rule: Rule::DesaturationWithoutSnoring,
            suggests: Verdict::CsaSuspected,
            detail: format!("{} desaturation event(s) with no snoring nearby", silent_desats.len()),
            values: vec![
                ("events".into(), silent_desats.len() as f64),
                ("nadir_spo2".into(), nadir),
            ],
        });
    }

    if cfg.ahi_rule && ahi.ahi >= cfg.ahi_threshold {
        let scored = events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::Desaturation | EventKind::SnoreGap));
        let (osa, csa) = scored.fold((0usize, 0usize), |(o, c), e| match e.klass {
            ApneaClass::Osa => (o + 1, c),
            ApneaClass::Csa => (o, c + 1),
            ApneaClass::Unclassified => (o, c),
        });
        let suggests = if csa > osa { Verdict::CsaSuspected } else { Verdict::OsaSuspected };
        evidence.push(Evidence {
            rule: Rule::AhiThreshold,
            suggests,
            detail: format!("AHI {:.1} ({:?} severity)", ahi.ahi, ahi.severity).to_lowercase(),
            values: vec![
                ("ahi".into(), ahi.ahi),
                ("events".into(), ahi.event_count as f64),
                ("osa_events".into(), osa as f64),
                ("csa_events".into(), csa as f64),
            ],
        });
    }

    let verdict = if evidence.iter().any(|e| e.suggests == Verdict::OsaSuspected) {
        Verdict::OsaSuspected
    } else if evidence.iter().any(|e| e.suggests == Verdict::CsaSuspected) {
        Verdict::CsaSuspected
    } else {
        Verdict::NoIndication
    };

    Ok(SessionAssessment {
        verdict,
        ahi: ahi.ahi,
        severity: ahi.severity,
        evidence,
        cardiac_flags: CardiacFlags { r_loss: stats.r_loss_s, r_gain: stats.r_gain_s },
        observations: gsr_observations(summaries),
    })
}

fn gsr_observations(summaries: &[HourlySummary]) -> Vec<String> {
    let mut out = Vec::new();
    let Some(mean) = MeanRow::of(summaries).gsr else {
        return out;
    };
    let (lo, hi) = GSR_NORMAL_BAND_US;
    let place = if mean < lo {
        "below"
    } else if mean > hi {
        "above"
    } else {
        "within"
    };
    out.push(format!("mean GSR {mean:.2} uS, {place} the {lo}-{hi} uS normal band"));
    let drop = summaries
        .windows(2)
        .filter_map(|w| Some((w[1].hour_index, w[0].mean_gsr? - w[1].mean_gsr?)))
        .max_by(|a, b| a.1.total_cmp(&b.1));
    if let Some((hour, d)) = drop.filter(|(_, d)| *d > 0.0) {
        out.push(format!("largest hourly GSR drop {d:.2} uS into hour {hour}"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn event(kind: EventKind, klass: ApneaClass, start_s: u64) -> ApneaEvent {
        ApneaEvent { kind, klass, start_s, duration_s: 15, detail: 90.0 }
    }

    fn stats(duration: u64, snore_s: u64) -> SessionStats {
        SessionStats {
            first_t_s: Some(0),
            last_t_s: Some(duration - 1),
            sample_count: duration,
            snore_active_s: snore_s,
            ..SessionStats::default()
        }
    }

    #[test]
    fn ahi_arithmetic() {
        let evs: Vec<_> = (0..12).map(|i| event(EventKind::Desaturation, ApneaClass::Osa, i * 100)).collect();
        assert_eq!(compute_ahi(&evs, 7200).unwrap().ahi, 6.0);
        let none = compute_ahi(&[], 3600).unwrap();
        assert_eq!((none.ahi, none.severity), (0.0, Severity::None));
        let evs: Vec<_> = (0..31).map(|i| event(EventKind::SnoreGap, ApneaClass::Osa, i * 100)).collect();
        let r = compute_ahi(&evs, 3600).unwrap();
        assert_eq!((r.ahi, r.severity), (31.0, Severity::Severe));
        assert_eq!(compute_ahi(&[], 0), Err(DetectorError::ZeroDuration));
    }

    #[test]
    fn bradycardia_does_not_count_towards_ahi() {
        let evs = [event(EventKind::Bradycardia, ApneaClass::Osa, 0)];
        assert_eq!(compute_ahi(&evs, 3600).unwrap().event_count, 0);
    }

    #[test]
    fn severity_band_edges() {
        assert_eq!(Severity::from_ahi(4.99), Severity::None);
        assert_eq!(Severity::from_ahi(5.0), Severity::Mild);
        assert_eq!(Severity::from_ahi(15.0), Severity::Moderate);
        assert_eq!(Severity::from_ahi(30.0), Severity::Moderate);
        assert_eq!(Severity::from_ahi(30.01), Severity::Severe);
    }

    #[test]
    fn healthy_session() {
        let hs = vec![HourlySummary { mean_spo2: Some(97.0), mean_gsr: Some(300.0), ..HourlySummary::empty(1) }];
        let a = assess_session(&AssessmentConfig::default(), &hs, &[], &stats(3600, 0)).unwrap();
        assert_eq!(a.verdict, Verdict::NoIndication);
        assert!(a.evidence.is_empty());
        assert!(a.observations[0].contains("within"));
    }

    #[test]
    fn low_hour_with_snoring_is_osa() {
        let hs = vec![
            HourlySummary { mean_spo2: Some(95.0), ..HourlySummary::empty(1) },
            HourlySummary { mean_spo2: Some(93.8), ..HourlySummary::empty(2) },
        ];
        let a = assess_session(&AssessmentConfig::default(), &hs, &[], &stats(7200, 500)).unwrap();
        assert_eq!(a.verdict, Verdict::OsaSuspected);
        assert_eq!(a.evidence[0].rule, Rule::LowSpo2WithSnoring);
        // the same hours without snoring say nothing
        let a = assess_session(&AssessmentConfig::default(), &hs, &[], &stats(7200, 0)).unwrap();
        assert_eq!(a.verdict, Verdict::NoIndication);
    }

    #[test]
    fn silent_desaturation_is_csa() {
        let hs = vec![HourlySummary::empty(1)];
        let evs = [event(EventKind::Desaturation, ApneaClass::Unclassified, 100)];
        let a = assess_session(&AssessmentConfig::default(), &hs, &evs, &stats(3600, 0)).unwrap();
        assert_eq!(a.verdict, Verdict::CsaSuspected);
    }

    #[test]
    fn disabled_rules_do_not_fire() {
        let cfg = AssessmentConfig { desaturation_without_snoring: false, ..AssessmentConfig::default() };
        let evs = [event(EventKind::Desaturation, ApneaClass::Unclassified, 100)];
        let a = assess_session(&cfg, &[HourlySummary::empty(1)], &evs, &stats(3600, 0)).unwrap();
        assert_eq!(a.verdict, Verdict::NoIndication);
    }

    #[test]
    fn ahi_rule_takes_majority_class() {
        let evs: Vec<_> = (0..6)
            .map(|i| event(EventKind::Desaturation, if i < 4 { ApneaClass::Csa } else { ApneaClass::Osa }, i * 300))
            .collect();
        let cfg = AssessmentConfig { desaturation_without_snoring: false, ..AssessmentConfig::default() };
        let a = assess_session(&cfg, &[HourlySummary::empty(1)], &evs, &stats(3600, 10)).unwrap();
        assert_eq!(a.verdict, Verdict::CsaSuspected);
        assert_eq!(a.evidence[0].rule, Rule::AhiThreshold);
    }
}
