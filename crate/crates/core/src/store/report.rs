//! Hourly tables, per-second series and event listings for a session.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{EventRecord, SessionReader};
use crate::detector::{hourly_summary, Alert, ApneaEvent, HourlySummary, MeanRow, SessionAssessment};
use crate::engine::VitalsSample;
use crate::error::StoreError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    TableText,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table-text" | "text" => Ok(ReportFormat::TableText),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown report format {other:?}; expected table-text or csv")),
        }
    }
}

/// A rendered report: the main document plus named CSV files.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportDocument {
    pub format: ReportFormat,
    pub main: String,
    pub summaries: Vec<HourlySummary>,
    pub mean_row: MeanRow,
    pub files: Vec<(String, String)>,
}

impl ReportDocument {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn write_files(&self, dir: &Path) -> Result<(), StoreError> {
        fs::create_dir_all(dir)?;
        for (name, content) in &self.files {
            fs::write(dir.join(name), content)?;
        }
        Ok(())
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_default()
}

fn text_cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into())
}

fn ordinal(n: u64) -> String {
    let suffix = match (n % 10, n % 100) {
        (1, r) if r != 11 => "st",
        (2, r) if r != 12 => "nd",
        (3, r) if r != 13 => "rd",
        _ => "th",
    };
    format!("{n}{suffix}")
}

/// Hour rows for every hour spanned by the samples, in order.
fn summarize(samples: &[VitalsSample]) -> Vec<HourlySummary> {
    let Some(last) = samples.last() else {
        return Vec::new();
    };
    let mut by_hour: Vec<Vec<VitalsSample>> = vec![Vec::new(); last.hour() as usize];
    for s in samples {
        by_hour[s.hour() as usize - 1].push(s.clone());
    }
    by_hour
        .iter()
        .enumerate()
        .map(|(i, hs)| hourly_summary(i as u64 + 1, hs))
        .collect()
}

fn hourly_csv(summaries: &[HourlySummary], mean: &MeanRow) -> String {
    let mut out = String::from("hour,mean_bpm,mean_spo2,mean_gsr,sample_count\n");
    for h in summaries {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            h.hour_index,
            cell(h.mean_bpm),
            cell(h.mean_spo2),
            cell(h.mean_gsr),
            h.sample_count
        );
    }
    let total: u64 = summaries.iter().map(|h| h.sample_count).sum();
    let _ = writeln!(out, "Mean,{},{},{},{}", cell(mean.bpm), cell(mean.spo2), cell(mean.gsr), total);
    out
}

fn series_csv(samples: &[VitalsSample], column: &str, f: fn(&VitalsSample) -> Option<f64>) -> String {
    let mut out = format!("t_s,{column}\n");
    for s in samples {
        let _ = writeln!(out, "{},{}", s.t_s, f(s).map(|v| format!("{v:.3}")).unwrap_or_default());
    }
    out
}

fn csv_quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn events_csv(events: &[&ApneaEvent]) -> String {
    let mut out = String::from("kind,class,start_s,duration_s,detail\n");
    for e in events {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.2}",
            enum_name(&e.kind),
            enum_name(&e.klass),
            e.start_s,
            e.duration_s,
            e.detail
        );
    }
    out
}

fn alerts_csv(alerts: &[&Alert]) -> String {
    let mut out = String::from("t_s,severity,code,value,message\n");
    for a in alerts {
        let _ = writeln!(
            out,
            "{},{},{},{:.2},{}",
            a.t_s,
            enum_name(&a.severity),
            a.code,
            a.value,
            csv_quote(&a.message)
        );
    }
    out
}

/// The serde name of a unit enum variant.
fn enum_name<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|j| j.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn hourly_table(summaries: &[HourlySummary], mean: &MeanRow) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<10} {:>8} {:>9} {:>9} {:>8}", "Hour", "BPM", "SpO2 (%)", "GSR (uS)", "Samples");
    for h in summaries {
        let _ = writeln!(
            out,
            "{:<10} {:>8} {:>9} {:>9} {:>8}",
            format!("{} Hour", ordinal(h.hour_index)),
            text_cell(h.mean_bpm),
            text_cell(h.mean_spo2),
            text_cell(h.mean_gsr),
            h.sample_count
        );
    }
    let _ = writeln!(
        out,
        "{:<10} {:>8} {:>9} {:>9}",
        "Mean",
        text_cell(mean.bpm),
        text_cell(mean.spo2),
        text_cell(mean.gsr)
    );
    out
}

/// Multi-line plain-text rendering of an assessment.
pub fn assessment_text(a: &SessionAssessment) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "verdict: {}", enum_name(&a.verdict));
    let _ = writeln!(out, "ahi: {:.2} ({})", a.ahi, enum_name(&a.severity));
    for e in &a.evidence {
        let values: Vec<String> = e.values.iter().map(|(k, v)| format!("{k}={v:.2}")).collect();
        let _ = writeln!(out, "  [{}] {} ({})", enum_name(&e.rule), e.detail, values.join(", "));
    }
    let _ = writeln!(
        out,
        "cardiac: r_loss={} r_gain={}",
        a.cardiac_flags.r_loss, a.cardiac_flags.r_gain
    );
    for o in &a.observations {
        let _ = writeln!(out, "note: {o}");
    }
    out
}

/// Renders a finalized session.
pub fn render_report(session: &SessionReader, format: ReportFormat) -> Result<ReportDocument, StoreError> {
    let fin = session.final_record()?;
    let samples = session.samples()?;
    let records = session.records()?;
    let summaries = summarize(&samples);
    let mean_row = MeanRow::of(&summaries);
    let mut events: Vec<&ApneaEvent> = records
        .iter()
        .filter_map(|r| match r {
            EventRecord::Event(e) => Some(e),
            EventRecord::Alert(_) => None,
        })
        .collect();
    events.sort_by_key(|e| (e.start_s, e.kind));
    let alerts: Vec<&Alert> = records
        .iter()
        .filter_map(|r| match r {
            EventRecord::Alert(a) => Some(a),
            EventRecord::Event(_) => None,
        })
        .collect();

    let hourly = hourly_csv(&summaries, &mean_row);
    let mut files = vec![
        ("hourly.csv".to_string(), hourly.clone()),
        ("events.csv".to_string(), events_csv(&events)),
        ("alerts.csv".to_string(), alerts_csv(&alerts)),
    ];
    let series: [(&str, fn(&VitalsSample) -> Option<f64>); 4] = [
        ("bpm", |s| s.bpm),
        ("spo2", |s| s.spo2_pct),
        ("gsr", |s| s.gsr_us),
        ("sound_db", |s| s.sound_db),
    ];
    for (name, f) in series {
        files.push((format!("series_{name}.csv"), series_csv(&samples, name, f)));
    }

    let main = match format {
        ReportFormat::Csv => hourly,
        ReportFormat::TableText => {
            let m = session.manifest();
            let mut out = String::new();
            let _ = writeln!(out, "session {}", m.session_id);
            if let Some(p) = &m.profile_label {
                let _ = writeln!(out, "profile {p}");
            }
            let _ = writeln!(out, "samples {} ({} s)", samples.len(), fin.stats.duration_s());
            if let Some(note) = &fin.truncated {
                let _ = writeln!(out, "truncated: {note}");
            }
            out.push('\n');
            out.push_str(&hourly_table(&summaries, &mean_row));
            let _ = writeln!(out, "\nevents ({})", events.len());
            for e in &events {
                let _ = writeln!(
                    out,
                    "  {:>6} s  {:<12} {:<12} {:>3} s  {:.2}",
                    e.start_s,
                    enum_name(&e.kind),
                    enum_name(&e.klass),
                    e.duration_s,
                    e.detail
                );
            }
            let _ = writeln!(out, "\nalerts ({})", alerts.len());
            for a in &alerts {
                let _ = writeln!(out, "  {:>6} s  {:<8} {:<14} {:.2}", a.t_s, enum_name(&a.severity), a.code, a.value);
            }
            let s = &fin.stats;
            let _ = writeln!(
                out,
                "\nsound {}..{} dB, snore active {} s, median cycle {}",
                text_cell(s.sound_min_db),
                text_cell(s.sound_max_db),
                s.snore_active_s,
                s.snore_period_median_s.map(|p| format!("{p:.1} s")).unwrap_or_else(|| "-".into())
            );
            let p = &fin.parser;
            let _ = writeln!(
                out,
                "frames ok {} crc_fail {} range_rejected {} resync_bytes {}",
                p.frames_ok, p.frames_crc_fail, p.frames_rejected_range, p.bytes_skipped_resync
            );
            out.push('\n');
            match &fin.assessment {
                Some(a) => out.push_str(&assessment_text(a)),
                None => out.push_str("verdict: none (empty session)\n"),
            }
            out
        }
    };
    Ok(ReportDocument { format, main, summaries, mean_row, files })
}
