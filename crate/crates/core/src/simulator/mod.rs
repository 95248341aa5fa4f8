//! Device simulator: scripted subjects rendered as sensor frame streams.

mod builtin;
mod generator;
mod profile;

pub use builtin::{
    builtin_profile, BUILTIN_NAMES, GSR_MEAN_ROW, GSR_TABLE, HR_MEAN_ROW, HR_TABLE, SPO2_MEAN_ROW,
    SPO2_TABLE,
};
pub use generator::{generate_frames, FrameGenerator};
pub use profile::{ApneaEpisodeScript, EcgAnomaly, HrEffect, SnoreScript, SubjectProfile};

use std::path::Path;

use crate::error::ProfileError;

/// Resolves a builtin name, or loads a TOML profile when `spec` names a file.
pub fn resolve_profile(spec: &str) -> Result<SubjectProfile, ProfileError> {
    let path = Path::new(spec);
    if path.extension().is_some_and(|e| e == "toml") || path.is_file() {
        SubjectProfile::load(path)
    } else {
        builtin_profile(spec)
    }
}
