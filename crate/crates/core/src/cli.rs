//! The `sleepwatch` command line: simulate, monitor, replay, report.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 runtime failure.

use std::ffi::OsString;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc};
use std::thread;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use crate::config::Config;
use crate::engine::VitalsSample;
use crate::error::{ConfigError, ProfileError, StoreError, TransportError};
use crate::pipeline::{Pipeline, SessionOutcome};
use crate::protocol::encode_frame;
use crate::simulator::{generate_frames, resolve_profile};
use crate::store::{
    assessment_text, render_report, LogComparer, Manifest, Pacer, ReportFormat, SessionReader, SessionWriter,
};
use crate::transport::{open_feed, open_source, AlertSink, Endpoint};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

const READ_CHUNK: usize = 4096;
const QUEUE_DEPTH: usize = 256;

#[derive(Debug, Parser)]
#[command(name = "sleepwatch", version, about = "Streaming sleep-apnea monitor")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a subject's night, score it and store the session.
    Simulate(SimulateArgs),
    /// Score a live byte stream from a file or socket.
    Monitor(MonitorArgs),
    /// Re-run a stored session and check its logs are reproduced.
    Replay(ReplayArgs),
    /// Print the hourly table, events and assessment of a session.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Builtin name (person-1 .. person-5) or a profile TOML file.
    #[arg(value_name = "PROFILE")]
    pub profile_pos: Option<String>,
    /// Length such as 6h, 90m, 45s or plain seconds.
    #[arg(value_name = "DURATION")]
    pub duration_pos: Option<String>,
    #[arg(long)]
    pub profile: Option<String>,
    /// Defaults to the profile's hour count.
    #[arg(long)]
    pub duration: Option<String>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Defaults to sessions/<profile>-seed<seed>.
    #[arg(long)]
    pub session_dir: Option<PathBuf>,
    /// Also send the raw frames to a file or serve them on tcp://host:port.
    #[arg(long)]
    pub transport: Option<String>,
    /// Pacing of the --transport feed as a multiple of real time.
    #[arg(long, default_value = "inf")]
    pub speed: f64,
}

#[derive(Debug, Args)]
pub struct MonitorArgs {
    /// File path, tcp://host:port, or - for standard input.
    #[arg(long)]
    pub transport: String,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Defaults to sessions/monitor-<unix ms>.
    #[arg(long)]
    pub session_dir: Option<PathBuf>,
    /// stdout, a file path, or tcp://host:port.
    #[arg(long, default_value = "stdout")]
    pub alert_sink: String,
    /// Suppress the per-second status lines.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(value_name = "SESSION_DIR")]
    pub session_pos: Option<PathBuf>,
    #[arg(long)]
    pub session_dir: Option<PathBuf>,
    #[arg(long, default_value = "inf")]
    pub speed: f64,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(value_name = "SESSION_DIR")]
    pub session_pos: Option<PathBuf>,
    #[arg(long)]
    pub session_dir: Option<PathBuf>,
    /// table-text or csv.
    #[arg(long, default_value = "table-text")]
    pub format: ReportFormat,
}

/// A failure carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(message: impl ToString) -> Self {
        Self { code: EXIT_INPUT, message: message.to_string() }
    }

    fn runtime(message: impl ToString) -> Self {
        Self { code: EXIT_RUNTIME, message: message.to_string() }
    }
}

impl From<ProfileError> for CliError {
    fn from(e: ProfileError) -> Self {
        Self::input(e)
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::input(e)
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Missing(_)
            | StoreError::Exists(_)
            | StoreError::NotFinalized(_)
            | StoreError::BadSpeed(_)
            | StoreError::Corrupt { .. } => Self::input(e),
            _ => Self::runtime(e),
        }
    }
}

impl From<TransportError> for CliError {
    fn from(e: TransportError) -> Self {
        match e {
            TransportError::BadAddress(_) => Self::input(e),
            _ => Self::runtime(e),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::runtime(e)
    }
}

/// Parses `6h`, `90m`, `45s`, `1.5h` or plain seconds.
pub fn parse_duration(text: &str) -> Result<f64, String> {
    let t = text.trim();
    let (num, scale) = match t.chars().last() {
        Some('h') => (&t[..t.len() - 1], 3600.0),
        Some('m') => (&t[..t.len() - 1], 60.0),
        Some('s') => (&t[..t.len() - 1], 1.0),
        _ => (t, 1.0),
    };
    match num.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v * scale),
        _ => Err(format!("bad duration {text:?}; use e.g. 6h, 90m, 45s")),
    }
}

fn load_config(path: Option<&Path>) -> Result<Config, CliError> {
    match path {
        Some(p) => Ok(Config::load(p)?),
        None => Ok(Config::default()),
    }
}

fn unix_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

fn either<T>(a: Option<T>, b: Option<T>, what: &str) -> Result<T, CliError> {
    a.or(b).ok_or_else(|| CliError::input(format!("missing {what}")))
}

fn print_outcome(out: &mut dyn Write, dir: &Path, o: &SessionOutcome) -> io::Result<()> {
    writeln!(out, "session {}", dir.display())?;
    writeln!(
        out,
        "samples {}, events {}, alerts {}",
        o.stats.sample_count,
        o.events.len(),
        o.alert_count
    )?;
    if let Some(note) = &o.truncated {
        writeln!(out, "truncated: {note}")?;
    }
    match &o.assessment {
        Some(a) => write!(out, "{}", assessment_text(a)),
        None => writeln!(out, "verdict: none (empty session)"),
    }
}

fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let spec = either(a.profile, a.profile_pos, "profile")?;
    let profile = resolve_profile(&spec)?;
    let duration_s = match a.duration.or(a.duration_pos) {
        Some(d) => parse_duration(&d).map_err(CliError::input)?,
        None => profile.hours() as f64 * 3600.0,
    };
    let cfg = load_config(a.config.as_deref())?;
    let frames = generate_frames(&profile, duration_s, cfg.engine.rate_hz, a.seed, &cfg.engine)?;
    let dir = a
        .session_dir
        .unwrap_or_else(|| PathBuf::from("sessions").join(format!("{}-seed{}", profile.label, a.seed)));
    let mut feed = match &a.transport {
        Some(t) => Some((open_feed(t)?, Pacer::new(a.speed)?)),
        None => None,
    };

    let manifest = Manifest {
        profile_label: Some(profile.label.clone()),
        seed: Some(a.seed),
        ..Manifest::new("simulate", &cfg)
    };
    let writer = SessionWriter::create(&dir, &manifest, &cfg)?;
    let mut pipeline = Pipeline::with_recorder(cfg, writer);
    for f in frames {
        if let Some((out, pacer)) = &mut feed {
            pacer.wait(f.timestamp_ms);
            let bytes = encode_frame(&f).map_err(|e| CliError::runtime(e))?;
            out.write_all(&bytes)?;
        }
        pipeline.push_frame(&f)?;
    }
    if let Some((mut out, _)) = feed {
        out.flush()?;
    }
    let (outcome, _, _) = pipeline.finish(None)?;
    if a.transport.as_deref().is_some_and(|t| matches!(Endpoint::parse(t), Ok(Endpoint::Stdio))) {
        print_outcome(&mut io::stderr().lock(), &dir, &outcome)?;
    } else {
        print_outcome(&mut io::stdout().lock(), &dir, &outcome)?;
    }
    Ok(())
}

fn status_line(s: &VitalsSample) -> String {
    let f = |v: Option<f64>, p: usize| v.map(|x| format!("{x:.p$}")).unwrap_or_else(|| "-".into());
    let flags: Vec<String> = s
        .ecg_flags
        .iter()
        .map(|f| serde_json::to_value(f).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default())
        .collect();
    format!(
        "t={}s bpm={} spo2={} gsr={} sound={}dB snore={}{}",
        s.t_s,
        f(s.bpm, 1),
        f(s.spo2_pct, 1),
        f(s.gsr_us, 1),
        f(s.sound_db, 1),
        if s.snore_active { "yes" } else { "no" },
        if flags.is_empty() { String::new() } else { format!(" ecg={}", flags.join(",")) }
    )
}

enum Chunk {
    Data(Vec<u8>),
    End,
    Failed(io::Error),
}

fn monitor(a: MonitorArgs) -> Result<(), CliError> {
    let cfg = load_config(a.config.as_deref())?;
    let mut source = open_source(&a.transport)?;
    let mut sink = AlertSink::open(&a.alert_sink)?;
    let dir = a
        .session_dir
        .unwrap_or_else(|| PathBuf::from("sessions").join(format!("monitor-{}", unix_ms())));
    let manifest = Manifest::new(format!("monitor {}", a.transport), &cfg);
    let writer = SessionWriter::create(&dir, &manifest, &cfg)?;

    let stop = Arc::new(AtomicBool::new(false));
    {
        let stop = stop.clone();
        // a second handler in the same process is refused; monitoring still works
        let _ = ctrlc::set_handler(move || stop.store(true, Ordering::SeqCst));
    }

    let (tx, rx) = mpsc::sync_channel::<Chunk>(QUEUE_DEPTH);
    thread::spawn(move || {
        let mut buf = vec![0u8; READ_CHUNK];
        loop {
            let msg = match source.read(&mut buf) {
                Ok(0) => Chunk::End,
                Ok(n) => Chunk::Data(buf[..n].to_vec()),
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) => Chunk::Failed(e),
            };
            let last = !matches!(msg, Chunk::Data(_));
            if tx.send(msg).is_err() || last {
                return;
            }
        }
    });

    let mut pipeline = Pipeline::with_recorder(cfg, writer);
    let mut err = io::stderr().lock();
    let truncated = loop {
        if stop.load(Ordering::SeqCst) {
            break Some("interrupted".to_string());
        }
        match rx.recv_timeout(Duration::from_millis(200)) {
            Ok(Chunk::Data(bytes)) => {
                let step = pipeline.push_bytes(&bytes)?;
                for al in &step.alerts {
                    sink.send(al)?;
                }
                if !a.quiet {
                    for s in &step.samples {
                        writeln!(err, "{}", status_line(s))?;
                    }
                }
                if !step.samples.is_empty() {
                    pipeline.flush()?;
                }
            }
            Ok(Chunk::End) => {
                let pending = pipeline.pending_bytes();
                break (pending > 0).then(|| format!("stream ended inside a frame ({pending} bytes pending)"));
            }
            Ok(Chunk::Failed(e)) => break Some(format!("disconnected: {e}")),
            Err(mpsc::RecvTimeoutError::Timeout) => {}
            Err(mpsc::RecvTimeoutError::Disconnected) => break Some("reader stopped".into()),
        }
    };
    let (outcome, tail, _) = pipeline.finish(truncated)?;
    if !a.quiet {
        for s in &tail.samples {
            writeln!(err, "{}", status_line(s))?;
        }
    }
    print_outcome(&mut err, &dir, &outcome)?;
    Ok(())
}

fn replay(a: ReplayArgs) -> Result<(), CliError> {
    let dir = either(a.session_dir, a.session_pos, "session directory")?;
    let session = SessionReader::open(&dir)?;
    let cfg = session.config()?;
    let comparer = LogComparer::new(&session)?;
    let mut pipeline = Pipeline::with_recorder(cfg, comparer);
    pipeline.set_pacer(Pacer::new(a.speed)?);
    let mut reader = session.frames_reader()?;
    let mut buf = vec![0u8; 64 * 1024];
    loop {
        let n = reader.read(&mut buf)?;
        if n == 0 {
            break;
        }
        pipeline.push_bytes(&buf[..n])?;
    }
    let stored_note = session.final_record().ok().and_then(|f| f.truncated);
    let (outcome, _, comparer) = pipeline.finish(stored_note)?;
    let mut out = io::stdout().lock();
    print_outcome(&mut out, &dir, &outcome)?;
    match comparer.mismatch() {
        None => {
            writeln!(
                out,
                "replay identical: {} sample lines, {} event lines",
                comparer.sample_lines, comparer.record_lines
            )?;
            Ok(())
        }
        Some(m) => Err(CliError::runtime(format!("replay differs from stored logs: {m}"))),
    }
}

fn report(a: ReportArgs) -> Result<(), CliError> {
    let dir = either(a.session_dir, a.session_pos, "session directory")?;
    let session = SessionReader::open(&dir)?;
    let doc = render_report(&session, a.format)?;
    doc.write_files(&dir.join("report"))?;
    io::stdout().lock().write_all(doc.main.as_bytes())?;
    Ok(())
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Monitor(a) => monitor(a),
        Command::Replay(a) => replay(a),
        Command::Report(a) => report(a),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
