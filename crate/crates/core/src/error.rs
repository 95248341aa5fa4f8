use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error("{0} out of range")]
    OutOfRange(&'static str),
}

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("unknown profile {name:?}; valid names: {}", valid.join(", "))]
    UnknownProfile { name: String, valid: Vec<String> },
    #[error("invalid profile {label}: {reason}")]
    Invalid { label: String, reason: String },
    #[error("profile file {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("cannot read profile file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("invalid generation request: {0}")]
    Request(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("raw value {value} exceeds ADC range 0..=1023")]
    RawOutOfRange { value: u16 },
    #[error("window length mismatch: red={red}, ir={ir}")]
    WindowMismatch { red: usize, ir: usize },
    #[error("non-monotonic frame timestamp {got} ms after {last} ms")]
    NonMonotonic { last: u32, got: u32 },
}

#[derive(Debug, Error, PartialEq)]
pub enum DetectorError {
    #[error("out-of-order sample at t={got}s after t={last}s")]
    OutOfOrder { last: u64, got: u64 },
    #[error("session duration must be positive")]
    ZeroDuration,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("config {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("session {0} is finalized; appends are not allowed")]
    Finalized(String),
    #[error("session {0} is not finalized")]
    NotFinalized(String),
    #[error("session directory {0} does not exist")]
    Missing(PathBuf),
    #[error("session directory {0} already contains a session")]
    Exists(PathBuf),
    #[error("{file} line {line}: corrupt record ({reason})")]
    Corrupt {
        file: &'static str,
        line: usize,
        reason: String,
    },
    #[error("replay speed must be positive, got {0}")]
    BadSpeed(f64),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("bad socket address {0:?}; expected tcp://host:port")]
    BadAddress(String),
    #[error("cannot connect to {addr}: {source}")]
    Connect {
        addr: String,
        #[source]
        source: io::Error,
    },
    #[error("cannot listen on {addr}: {source}")]
    Listen {
        addr: String,
        #[source]
        source: io::Error,
    },
    #[error("cannot open {path}: {source}")]
    Open {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}
