use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ProfileError;

/// Heart-rate response scripted for an apnea episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HrEffect {
    /// Rate falls to the given bpm during the episode.
    Bradycardia(f64),
    /// Rate overshoots to the given bpm for 20 s after the episode ends.
    TachyRebound(f64),
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApneaEpisodeScript {
    pub start_s: f64,
    pub duration_s: f64,
    pub spo2_nadir_pct: f64,
    #[serde(default = "no_effect")]
    pub hr_effect: HrEffect,
    #[serde(default)]
    pub snore_suppressed: bool,
}

fn no_effect() -> HrEffect {
    HrEffect::None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnoreScript {
    pub cycle_period_s: f64,
    /// Each cycle's period is drawn uniformly from `period ± jitter`.
    #[serde(default)]
    pub cycle_jitter_s: f64,
    pub burst_fraction: f64,
    pub peak_db: f64,
    pub room_floor_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcgAnomaly {
    pub beat_index: u64,
    pub amplitude_scale: f64,
}

/// A scripted subject: per-hour targets plus optional snoring, apnea
/// episodes and R-wave anomalies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectProfile {
    pub label: String,
    #[serde(default)]
    pub age_group: String,
    #[serde(default)]
    pub gender: String,
    #[serde(default)]
    pub body_status: String,
    pub hr_baseline_bpm: Vec<f64>,
    pub spo2_baseline_pct: Vec<f64>,
    pub gsr_baseline_us: Vec<f64>,
    /// Room level when there is no snore script.
    #[serde(default = "default_ambient")]
    pub ambient_db: f64,
    #[serde(default)]
    pub snore: Option<SnoreScript>,
    #[serde(default)]
    pub episodes: Vec<ApneaEpisodeScript>,
    #[serde(default)]
    pub ecg_anomalies: Vec<EcgAnomaly>,
}

fn default_ambient() -> f64 {
    37.5
}

impl SubjectProfile {
    pub fn hours(&self) -> usize {
        self.hr_baseline_bpm.len()
    }

    pub fn room_floor_db(&self) -> f64 {
        self.snore.as_ref().map_or(self.ambient_db, |s| s.room_floor_db)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("profile is always serializable")
    }

    pub fn load(path: &Path) -> Result<Self, ProfileError> {
        let text = fs::read_to_string(path).map_err(|source| ProfileError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let p = Self::from_toml_str(&text).map_err(|source| ProfileError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        let fail = |reason: String| {
            Err(ProfileError::Invalid { label: self.label.clone(), reason })
        };
        let n = self.hr_baseline_bpm.len();
        if n == 0 {
            return fail("per-hour lists are empty".into());
        }
        if self.spo2_baseline_pct.len() != n || self.gsr_baseline_us.len() != n {
            return fail(format!(
                "per-hour lists differ in length: hr={}, spo2={}, gsr={}",
                n,
                self.spo2_baseline_pct.len(),
                self.gsr_baseline_us.len()
            ));
        }
        if let Some(v) = self.hr_baseline_bpm.iter().find(|v| !(30.0..=220.0).contains(*v)) {
            return fail(format!("heart-rate target {v} outside 30..=220"));
        }
        if let Some(v) = self.spo2_baseline_pct.iter().find(|v| !(70.0..=100.0).contains(*v)) {
            return fail(format!("SpO2 target {v} outside 70..=100"));
        }
        if let Some(v) = self.gsr_baseline_us.iter().find(|v| !(**v > 0.0)) {
            return fail(format!("GSR target {v} must be positive"));
        }
        if let Some(s) = &self.snore {
            if !(2.0..=10.0).contains(&s.cycle_period_s) {
                return fail(format!("snore period {} outside 2..=10 s", s.cycle_period_s));
            }
            if s.cycle_jitter_s < 0.0 || s.cycle_period_s - s.cycle_jitter_s < 1.0 {
                return fail(format!("snore jitter {} out of range", s.cycle_jitter_s));
            }
            if !(s.burst_fraction > 0.0 && s.burst_fraction < 1.0) {
                return fail(format!("burst fraction {} outside (0, 1)", s.burst_fraction));
            }
            if s.room_floor_db >= s.peak_db {
                return fail("room floor must be below snore peak".into());
            }
        }
        for e in &self.episodes {
            if e.duration_s < 10.0 {
                return fail(format!("episode at {} s lasts {} s (< 10 s)", e.start_s, e.duration_s));
            }
            if e.start_s < 0.0 {
                return fail(format!("episode start {} is negative", e.start_s));
            }
            let hour = ((e.start_s / 3600.0) as usize).min(n - 1);
            let baseline = self.spo2_baseline_pct[hour];
            if !(e.spo2_nadir_pct < baseline) || e.spo2_nadir_pct < 70.0 {
                return fail(format!(
                    "episode at {} s: nadir {} must be below baseline {} and at least 70",
                    e.start_s, e.spo2_nadir_pct, baseline
                ));
            }
            match e.hr_effect {
                HrEffect::Bradycardia(b) | HrEffect::TachyRebound(b) if !(30.0..=220.0).contains(&b) => {
                    return fail(format!("episode heart-rate target {b} outside 30..=220"));
                }
                _ => {}
            }
        }
        if let Some(a) = self.ecg_anomalies.iter().find(|a| !(a.amplitude_scale > 0.0)) {
            return fail(format!("R amplitude scale {} must be positive", a.amplitude_scale));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> SubjectProfile {
        SubjectProfile {
            label: "t".into(),
            age_group: String::new(),
            gender: String::new(),
            body_status: String::new(),
            hr_baseline_bpm: vec![70.0, 72.0],
            spo2_baseline_pct: vec![96.0, 96.0],
            gsr_baseline_us: vec![200.0, 210.0],
            ambient_db: 37.5,
            snore: None,
            episodes: vec![],
            ecg_anomalies: vec![],
        }
    }

    #[test]
    fn mismatched_lists_rejected() {
        let mut p = minimal();
        p.gsr_baseline_us.push(1.0);
        assert!(p.validate().is_err());
    }

    #[test]
    fn short_episode_rejected() {
        let mut p = minimal();
        p.episodes.push(ApneaEpisodeScript {
            start_s: 100.0,
            duration_s: 8.0,
            spo2_nadir_pct: 88.0,
            hr_effect: HrEffect::None,
            snore_suppressed: false,
        });
        let err = p.validate().unwrap_err().to_string();
        assert!(err.contains("< 10 s"), "{err}");
    }

    #[test]
    fn nadir_above_baseline_rejected() {
        let mut p = minimal();
        p.episodes.push(ApneaEpisodeScript {
            start_s: 100.0,
            duration_s: 20.0,
            spo2_nadir_pct: 97.0,
            hr_effect: HrEffect::None,
            snore_suppressed: false,
        });
        assert!(p.validate().is_err());
    }

    #[test]
    fn toml_text_parses() {
        let text = r#"
label = "custom"
hr_baseline_bpm = [60.0, 62.5]
spo2_baseline_pct = [97.0, 96.5]
gsr_baseline_us = [250.0, 240.0]

[snore]
cycle_period_s = 4.0
burst_fraction = 0.4
peak_db = 58.0
room_floor_db = 37.0

[[episodes]]
start_s = 600.0
duration_s = 20.0
spo2_nadir_pct = 89.0
hr_effect = { bradycardia = 45.0 }
snore_suppressed = true

[[ecg_anomalies]]
beat_index = 40
amplitude_scale = 0.3
"#;
        let p = SubjectProfile::from_toml_str(text).unwrap();
        p.validate().unwrap();
        assert_eq!(p.episodes[0].hr_effect, HrEffect::Bradycardia(45.0));
        assert_eq!(p.snore.as_ref().unwrap().cycle_jitter_s, 0.0);
        assert_eq!(p.ambient_db, 37.5);
        let back = SubjectProfile::from_toml_str(&p.to_toml_string()).unwrap();
        assert_eq!(back, p);
    }
}
