//! Byte transports and the alert sink.
//!
//! A transport is named by a string: `tcp://host:port` for a stream socket,
//! `-` for standard input/output, anything else is a file path.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;

use crate::detector::Alert;
use crate::error::TransportError;

const TCP_SCHEME: &str = "tcp://";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    Tcp(String),
    Stdio,
    File(PathBuf),
}

impl Endpoint {
    pub fn parse(spec: &str) -> Result<Self, TransportError> {
        if let Some(addr) = spec.strip_prefix(TCP_SCHEME) {
            let ok = addr
                .rsplit_once(':')
                .is_some_and(|(host, port)| !host.is_empty() && port.parse::<u16>().is_ok());
            if !ok {
                return Err(TransportError::BadAddress(spec.to_string()));
            }
            Ok(Endpoint::Tcp(addr.to_string()))
        } else if spec == "-" || spec == "stdout" || spec == "stdin" {
            Ok(Endpoint::Stdio)
        } else {
            Ok(Endpoint::File(PathBuf::from(spec)))
        }
    }
}

/// Opens a byte source for monitoring: connects to a socket or opens a file.
pub fn open_source(spec: &str) -> Result<Box<dyn Read + Send>, TransportError> {
    match Endpoint::parse(spec)? {
        Endpoint::Tcp(addr) => {
            let s = TcpStream::connect(&addr).map_err(|source| TransportError::Connect { addr, source })?;
            Ok(Box::new(s))
        }
        Endpoint::Stdio => Ok(Box::new(io::stdin())),
        Endpoint::File(path) => {
            let f = File::open(&path).map_err(|source| TransportError::Open { path, source })?;
            Ok(Box::new(f))
        }
    }
}

/// Opens a byte destination for a simulated feed. A `tcp://` address is
/// bound and the first client to connect receives the stream.
pub fn open_feed(spec: &str) -> Result<Box<dyn Write + Send>, TransportError> {
    match Endpoint::parse(spec)? {
        Endpoint::Tcp(addr) => {
            let listener =
                TcpListener::bind(&addr).map_err(|source| TransportError::Listen { addr: addr.clone(), source })?;
            let (stream, _) = listener.accept()?;
            stream.set_nodelay(true)?;
            Ok(Box::new(BufWriter::new(stream)))
        }
        Endpoint::Stdio => Ok(Box::new(BufWriter::new(io::stdout()))),
        Endpoint::File(path) => {
            let f = File::create(&path).map_err(|source| TransportError::Open { path, source })?;
            Ok(Box::new(BufWriter::new(f)))
        }
    }
}

/// Line-delimited JSON alert stream.
pub struct AlertSink {
    out: Box<dyn Write + Send>,
}

impl AlertSink {
    pub fn open(spec: &str) -> Result<Self, TransportError> {
        let out: Box<dyn Write + Send> = match Endpoint::parse(spec)? {
            Endpoint::Tcp(addr) => {
                let s = TcpStream::connect(&addr).map_err(|source| TransportError::Connect { addr, source })?;
                s.set_nodelay(true)?;
                Box::new(s)
            }
            Endpoint::Stdio => Box::new(io::stdout()),
            Endpoint::File(path) => {
                Box::new(File::create(&path).map_err(|source| TransportError::Open { path, source })?)
            }
        };
        Ok(Self { out })
    }

    pub fn from_writer(out: Box<dyn Write + Send>) -> Self {
        Self { out }
    }

    /// Writes and flushes one alert line.
    pub fn send(&mut self, alert: &Alert) -> Result<(), TransportError> {
        let line = serde_json::to_string(alert).map_err(io::Error::from)?;
        writeln!(self.out, "{line}")?;
        self.out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::AlertSeverity;
    use std::sync::{Arc, Mutex};

    #[test]
    fn endpoint_parsing() {
        assert_eq!(Endpoint::parse("tcp://127.0.0.1:9000").unwrap(), Endpoint::Tcp("127.0.0.1:9000".into()));
        assert_eq!(Endpoint::parse("-").unwrap(), Endpoint::Stdio);
        assert_eq!(Endpoint::parse("a/b.bin").unwrap(), Endpoint::File("a/b.bin".into()));
        assert!(Endpoint::parse("tcp://nohost").is_err());
        assert!(Endpoint::parse("tcp://:12").is_err());
    }

    #[test]
    fn unreachable_source_fails() {
        assert!(matches!(open_source("/definitely/not/here.bin"), Err(TransportError::Open { .. })));
    }

    #[derive(Clone, Default)]
    struct Shared(Arc<Mutex<Vec<u8>>>);

    impl Write for Shared {
        fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
            self.0.lock().unwrap().extend_from_slice(buf);
            Ok(buf.len())
        }
        fn flush(&mut self) -> io::Result<()> {
            Ok(())
        }
    }

    #[test]
    fn alert_lines_are_json() {
        let buf = Shared::default();
        let mut sink = AlertSink::from_writer(Box::new(buf.clone()));
        let a = Alert {
            t_s: 9,
            severity: AlertSeverity::Critical,
            code: "spo2_critical".into(),
            message: "SpO2 below 90 for 10 s".into(),
            value: 88.5,
        };
        sink.send(&a).unwrap();
        let text = String::from_utf8(buf.0.lock().unwrap().clone()).unwrap();
        let back: Alert = serde_json::from_str(text.trim_end()).unwrap();
        assert_eq!(back, a);
        assert!(text.contains(r#""severity":"critical""#));
    }
}
