//! Streaming sleep-apnea monitoring.
//!
//! The crate is organized along the data path:
//!
//! - [`protocol`]: 27-byte sensor frame codec with CRC and resync.
//! - [`simulator`]: scripted subject profiles rendered into frame streams.
//! - [`engine`]: frames to 1 Hz [`VitalsSample`]s (BPM, SpO2, GSR, sound
//!   level, snore rhythm, R-wave annotations).
//! - [`detector`]: apnea events, alerts, hourly summaries, AHI and the
//!   end-of-session assessment.
//! - [`store`]: session directories, replay and reports.
//! - [`pipeline`] and [`transport`]: the glue used by the command line tool.

pub mod cli;
pub mod config;
pub mod detector;
pub mod engine;
pub mod error;
pub mod pipeline;
pub mod protocol;
pub mod simulator;
pub mod stats;
pub mod store;
pub mod transport;

pub use config::Config;
pub use engine::{SignalEngine, VitalsSample};
pub use protocol::{FrameDecoder, ParserDiagnostics, SensorFrame};
