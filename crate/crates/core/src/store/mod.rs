//! Session directories.
//!
//! A session lives in one directory with fixed file names:
//!
//! | file            | content                                              |
//! |-----------------|------------------------------------------------------|
//! | `manifest.json` | one JSON line: id, start time, source, config hash   |
//! | `config.toml`   | the full configuration the session ran with          |
//! | `frames.bin`    | raw wire bytes exactly as received                   |
//! | `samples.log`   | one `VitalsSample` per line                          |
//! | `events.log`    | events and alerts, one per line, in emission order   |
//! | `final.json`    | written once on finalize; its presence marks the end |
//!
//! Log lines are `<crc> <json>\n` where `<crc>` is the CRC-16/CCITT-FALSE of
//! the JSON bytes as four lowercase hex digits.

mod replay;
mod report;

pub use replay::{pacing_offset, Pacer, ReplayStream};
pub use report::{assessment_text, render_report, ReportDocument, ReportFormat};

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::detector::{Alert, ApneaEvent, HourlySummary, SessionAssessment, SessionStats};
use crate::engine::{EngineDiagnostics, VitalsSample};
use crate::error::StoreError;
use crate::protocol::{crc16_ccitt_false, ParserDiagnostics};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.toml";
pub const FRAMES_FILE: &str = "frames.bin";
pub const SAMPLES_FILE: &str = "samples.log";
pub const EVENTS_FILE: &str = "events.log";
pub const FINAL_FILE: &str = "final.json";

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub session_id: String,
    pub started_at_unix_ms: u64,
    pub source: String,
    pub profile_label: Option<String>,
    pub seed: Option<u64>,
    pub config_hash: String,
}

impl Manifest {
    /// A manifest stamped with the current wall-clock time. The session id
    /// is filled in by [`SessionWriter::create`] from the directory name.
    pub fn new(source: impl Into<String>, cfg: &Config) -> Self {
        let started_at_unix_ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0);
        Self {
            format_version: FORMAT_VERSION,
            session_id: String::new(),
            started_at_unix_ms,
            source: source.into(),
            profile_label: None,
            seed: None,
            config_hash: cfg.hash(),
        }
    }
}

/// One line of `events.log`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum EventRecord {
    Event(ApneaEvent),
    Alert(Alert),
}

/// Content of `final.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalRecord {
    /// Set when the input ended early (disconnect, interrupt).
    pub truncated: Option<String>,
    pub summaries: Vec<HourlySummary>,
    pub assessment: Option<SessionAssessment>,
    pub stats: SessionStats,
    pub event_count: usize,
    pub alert_count: usize,
    pub parser: ParserDiagnostics,
    pub engine: EngineDiagnostics,
}

/// Formats one checksummed log line, newline included.
pub fn format_line(json: &str) -> String {
    format!("{:04x} {json}\n", crc16_ccitt_false(json.as_bytes()))
}

/// Checks a log line (without newline) and returns its JSON part.
pub fn parse_line(line: &str) -> Result<&str, String> {
    let (crc, json) = line.split_once(' ').ok_or("missing checksum field")?;
    let stored = u16::from_str_radix(crc, 16)
        .ok()
        .filter(|_| crc.len() == 4)
        .ok_or_else(|| format!("bad checksum field {crc:?}"))?;
    let actual = crc16_ccitt_false(json.as_bytes());
    if actual != stored {
        return Err(format!("checksum {crc} does not match {actual:04x}"));
    }
    Ok(json)
}

/// Sink for everything a pipeline produces. `()` discards.
pub trait Recorder {
    fn frame_bytes(&mut self, bytes: &[u8]) -> Result<(), StoreError>;
    fn sample(&mut self, s: &VitalsSample) -> Result<(), StoreError>;
    fn record(&mut self, r: &EventRecord) -> Result<(), StoreError>;
    fn flush(&mut self) -> Result<(), StoreError>;
    fn finalize(&mut self, fin: &FinalRecord) -> Result<(), StoreError>;
}

impl Recorder for () {
    fn frame_bytes(&mut self, _: &[u8]) -> Result<(), StoreError> {
        Ok(())
    }
    fn sample(&mut self, _: &VitalsSample) -> Result<(), StoreError> {
        Ok(())
    }
    fn record(&mut self, _: &EventRecord) -> Result<(), StoreError> {
        Ok(())
    }
    fn flush(&mut self) -> Result<(), StoreError> {
        Ok(())
    }
    fn finalize(&mut self, _: &FinalRecord) -> Result<(), StoreError> {
        Ok(())
    }
}

impl<A: Recorder, B: Recorder> Recorder for (A, B) {
    fn frame_bytes(&mut self, bytes: &[u8]) -> Result<(), StoreError> {
        self.0.frame_bytes(bytes)?;
        self.1.frame_bytes(bytes)
    }
    fn sample(&mut self, s: &VitalsSample) -> Result<(), StoreError> {
        self.0.sample(s)?;
        self.1.sample(s)
    }
    fn record(&mut self, r: &EventRecord) -> Result<(), StoreError> {
        self.0.record(r)?;
        self.1.record(r)
    }
    fn flush(&mut self) -> Result<(), StoreError> {
        self.0.flush()?;
        self.1.flush()
    }
    fn finalize(&mut self, fin: &FinalRecord) -> Result<(), StoreError> {
        self.0.finalize(fin)?;
        self.1.finalize(fin)
    }
}

/// Append-only writer for a new session directory.
#[derive(Debug)]
pub struct SessionWriter {
    dir: PathBuf,
    id: String,
    frames: BufWriter<File>,
    samples: BufWriter<File>,
    events: BufWriter<File>,
    finalized: bool,
}

impl SessionWriter {
    /// Creates the directory (if needed) and the session files. Fails if a
    /// session already lives there.
    pub fn create(dir: &Path, manifest: &Manifest, cfg: &Config) -> Result<Self, StoreError> {
        if dir.join(MANIFEST_FILE).exists() {
            return Err(StoreError::Exists(dir.to_path_buf()));
        }
        fs::create_dir_all(dir)?;
        let id = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "session".into());
        let manifest = Manifest { session_id: id.clone(), ..manifest.clone() };
        fs::write(dir.join(CONFIG_FILE), cfg.to_toml_string())?;
        let open = |name: &str| -> Result<BufWriter<File>, StoreError> {
            let f = OpenOptions::new().create(true).write(true).truncate(true).open(dir.join(name))?;
            Ok(BufWriter::new(f))
        };
        let writer = Self {
            dir: dir.to_path_buf(),
            frames: open(FRAMES_FILE)?,
            samples: open(SAMPLES_FILE)?,
            events: open(EVENTS_FILE)?,
            id,
            finalized: false,
        };
        // manifest last, so a half-created directory is not mistaken for a session
        fs::write(dir.join(MANIFEST_FILE), format!("{}\n", serde_json::to_string(&manifest)?))?;
        Ok(writer)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn guard(&self) -> Result<(), StoreError> {
        if self.finalized {
            Err(StoreError::Finalized(self.id.clone()))
        } else {
            Ok(())
        }
    }

    pub fn append_frame_bytes(&mut self, bytes: &[u8]) -> Result<(), StoreError> {
        self.guard()?;
        self.frames.write_all(bytes)?;
        Ok(())
    }

    pub fn append_sample(&mut self, s: &VitalsSample) -> Result<(), StoreError> {
        self.guard()?;
        self.samples.write_all(format_line(&serde_json::to_string(s)?).as_bytes())?;
        Ok(())
    }

    pub fn append_record(&mut self, r: &EventRecord) -> Result<(), StoreError> {
        self.guard()?;
        self.events.write_all(format_line(&serde_json::to_string(r)?).as_bytes())?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), StoreError> {
        self.frames.flush()?;
        self.samples.flush()?;
        self.events.flush()?;
        Ok(())
    }

    /// Flushes the logs and writes `final.json`. Further appends fail.
    pub fn finalize(&mut self, fin: &FinalRecord) -> Result<(), StoreError> {
        self.guard()?;
        self.flush()?;
        for f in [&self.frames, &self.samples, &self.events] {
            f.get_ref().sync_all()?;
        }
        let tmp = self.dir.join("final.json.tmp");
        fs::write(&tmp, serde_json::to_string_pretty(fin)? + "\n")?;
        fs::rename(tmp, self.dir.join(FINAL_FILE))?;
        self.finalized = true;
        Ok(())
    }
}

impl Recorder for SessionWriter {
    fn frame_bytes(&mut self, bytes: &[u8]) -> Result<(), StoreError> {
        self.append_frame_bytes(bytes)
    }
    fn sample(&mut self, s: &VitalsSample) -> Result<(), StoreError> {
        self.append_sample(s)
    }
    fn record(&mut self, r: &EventRecord) -> Result<(), StoreError> {
        self.append_record(r)
    }
    fn flush(&mut self) -> Result<(), StoreError> {
        SessionWriter::flush(self)
    }
    fn finalize(&mut self, fin: &FinalRecord) -> Result<(), StoreError> {
        SessionWriter::finalize(self, fin)
    }
}

/// A corrupt log line found by [`SessionReader::check_logs`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorruptLine {
    pub file: String,
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LogCheck {
    pub samples: usize,
    pub records: usize,
    pub corrupt: Vec<CorruptLine>,
}

/// Read access to a stored session. Any number may coexist.
#[derive(Debug, Clone)]
pub struct SessionReader {
    dir: PathBuf,
    manifest: Manifest,
}

impl SessionReader {
    pub fn open(dir: &Path) -> Result<Self, StoreError> {
        let path = dir.join(MANIFEST_FILE);
        if !path.is_file() {
            return Err(StoreError::Missing(dir.to_path_buf()));
        }
        let manifest = serde_json::from_str(fs::read_to_string(path)?.trim_end())?;
        Ok(Self { dir: dir.to_path_buf(), manifest })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn config(&self) -> Result<Config, StoreError> {
        let text = fs::read_to_string(self.dir.join(CONFIG_FILE))?;
        Config::from_toml_str(&text).map_err(|e| StoreError::Corrupt {
            file: CONFIG_FILE,
            line: 0,
            reason: e.to_string(),
        })
    }

    pub fn is_finalized(&self) -> bool {
        self.dir.join(FINAL_FILE).is_file()
    }

    pub fn final_record(&self) -> Result<FinalRecord, StoreError> {
        let path = self.dir.join(FINAL_FILE);
        if !path.is_file() {
            return Err(StoreError::NotFinalized(self.manifest.session_id.clone()));
        }
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn frames_reader(&self) -> Result<BufReader<File>, StoreError> {
        Ok(BufReader::new(File::open(self.dir.join(FRAMES_FILE))?))
    }

    pub fn frame_bytes(&self) -> Result<Vec<u8>, StoreError> {
        let mut out = Vec::new();
        self.frames_reader()?.read_to_end(&mut out)?;
        Ok(out)
    }

    /// Every sample; the first corrupt line is an error.
    pub fn samples(&self) -> Result<Vec<VitalsSample>, StoreError> {
        read_log(&self.dir.join(SAMPLES_FILE), SAMPLES_FILE)
    }

    /// Every event and alert; the first corrupt line is an error.
    pub fn records(&self) -> Result<Vec<EventRecord>, StoreError> {
        read_log(&self.dir.join(EVENTS_FILE), EVENTS_FILE)
    }

    /// Raw lines of a log file, for byte-level comparison.
    pub fn log_lines(&self, file: &str) -> Result<impl Iterator<Item = std::io::Result<String>>, StoreError> {
        Ok(BufReader::new(File::open(self.dir.join(file))?).lines())
    }

    /// Scans both logs and lists every corrupt line instead of stopping.
    pub fn check_logs(&self) -> Result<LogCheck, StoreError> {
        let mut check = LogCheck::default();
        check.samples = scan_log::<VitalsSample>(&self.dir.join(SAMPLES_FILE), SAMPLES_FILE, &mut check.corrupt)?;
        check.records = scan_log::<EventRecord>(&self.dir.join(EVENTS_FILE), EVENTS_FILE, &mut check.corrupt)?;
        Ok(check)
    }
}

/// Recorder that checks a rerun against a stored session line by line.
pub struct LogComparer {
    samples: std::io::Lines<BufReader<File>>,
    events: std::io::Lines<BufReader<File>>,
    pub sample_lines: usize,
    pub record_lines: usize,
    mismatch: Option<String>,
}

impl LogComparer {
    pub fn new(stored: &SessionReader) -> Result<Self, StoreError> {
        let open = |name: &str| -> Result<_, StoreError> { Ok(BufReader::new(File::open(stored.dir.join(name))?).lines()) };
        Ok(Self {
            samples: open(SAMPLES_FILE)?,
            events: open(EVENTS_FILE)?,
            sample_lines: 0,
            record_lines: 0,
            mismatch: None,
        })
    }

    pub fn identical(&self) -> bool {
        self.mismatch.is_none()
    }

    /// First difference found, if any.
    pub fn mismatch(&self) -> Option<&str> {
        self.mismatch.as_deref()
    }

    fn compare(
        lines: &mut std::io::Lines<BufReader<File>>,
        file: &str,
        n: usize,
        fresh: &str,
        mismatch: &mut Option<String>,
    ) -> Result<(), StoreError> {
        if mismatch.is_some() {
            return Ok(());
        }
        match lines.next().transpose()? {
            Some(stored) if stored == fresh.trim_end_matches('\n') => {}
            Some(_) => *mismatch = Some(format!("{file} line {n} differs")),
            None => *mismatch = Some(format!("{file} has only {} lines", n - 1)),
        }
        Ok(())
    }
}

impl Recorder for LogComparer {
    fn frame_bytes(&mut self, _: &[u8]) -> Result<(), StoreError> {
        Ok(())
    }

    fn sample(&mut self, s: &VitalsSample) -> Result<(), StoreError> {
        self.sample_lines += 1;
        let line = format_line(&serde_json::to_string(s)?);
        Self::compare(&mut self.samples, SAMPLES_FILE, self.sample_lines, &line, &mut self.mismatch)
    }

    fn record(&mut self, r: &EventRecord) -> Result<(), StoreError> {
        self.record_lines += 1;
        let line = format_line(&serde_json::to_string(r)?);
        Self::compare(&mut self.events, EVENTS_FILE, self.record_lines, &line, &mut self.mismatch)
    }

    fn flush(&mut self) -> Result<(), StoreError> {
        Ok(())
    }

    fn finalize(&mut self, _: &FinalRecord) -> Result<(), StoreError> {
        if self.mismatch.is_none() {
            if self.samples.next().is_some() {
                self.mismatch = Some(format!("{SAMPLES_FILE} has more than {} lines", self.sample_lines));
            } else if self.events.next().is_some() {
                self.mismatch = Some(format!("{EVENTS_FILE} has more than {} lines", self.record_lines));
            }
        }
        Ok(())
    }
}

fn decode_line<T: DeserializeOwned>(line: &str) -> Result<T, String> {
    let json = parse_line(line)?;
    serde_json::from_str(json).map_err(|e| e.to_string())
}

fn read_log<T: DeserializeOwned>(path: &Path, file: &'static str) -> Result<Vec<T>, StoreError> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        let v = decode_line(&line).map_err(|reason| StoreError::Corrupt { file, line: i + 1, reason })?;
        out.push(v);
    }
    Ok(out)
}

fn scan_log<T: DeserializeOwned>(path: &Path, file: &str, corrupt: &mut Vec<CorruptLine>) -> Result<usize, StoreError> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let mut ok = 0;
    let text = String::from_utf8_lossy(&bytes);
    let ends_clean = text.is_empty() || text.ends_with('\n');
    let lines: Vec<&str> = text.lines().collect();
    for (i, line) in lines.iter().enumerate() {
        let unterminated = i + 1 == lines.len() && !ends_clean;
        match decode_line::<T>(line) {
            Ok(_) if !unterminated => ok += 1,
            Ok(_) => corrupt.push(CorruptLine { file: file.into(), line: i + 1, reason: "missing newline".into() }),
            Err(reason) => corrupt.push(CorruptLine { file: file.into(), line: i + 1, reason }),
        }
    }
    Ok(ok)
}
