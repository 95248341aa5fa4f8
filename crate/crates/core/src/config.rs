//! Runtime configuration shared by the engine, the detector and the CLI.
//!
//! A config file is TOML with optional `[engine]`, `[detector]` and
//! `[assessment]` tables; every key has a default.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ConfigError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    /// Nominal frame rate the engine resamples onto.
    pub rate_hz: u32,
    /// dB = db_offset + 20*log10(rms counts).
    pub db_offset: f64,
    pub db_floor: f64,
    pub burst_threshold_db: f64,
    /// DC level (counts) below which the oximeter reports no finger.
    pub no_finger_floor: f64,
    /// Series resistor of the GSR divider, ohms.
    pub divider_k: f64,
    /// SpO2 = spo2_a - spo2_b * R.
    pub spo2_a: f64,
    pub spo2_b: f64,
    pub bpm_window_s: u32,
    pub ppg_peak_fraction: f64,
    pub ppg_refractory_ms: f64,
    pub ecg_refractory_ms: f64,
    pub r_loss_ratio: f64,
    pub r_gain_ratio: f64,
    pub r_median_beats: usize,
    pub snore_window_s: u32,
    pub snore_min_bursts: usize,
    pub snore_max_cv: f64,
    /// Frame timestamp gaps longer than this reset detector warm-up.
    pub gap_reset_s: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            rate_hz: 100,
            db_offset: 36.0,
            db_floor: 30.0,
            burst_threshold_db: 50.0,
            no_finger_floor: 1000.0,
            divider_k: 1000.0,
            spo2_a: 110.0,
            spo2_b: 25.0,
            bpm_window_s: 10,
            ppg_peak_fraction: 0.6,
            ppg_refractory_ms: 250.0,
            ecg_refractory_ms: 200.0,
            r_loss_ratio: 0.5,
            r_gain_ratio: 1.5,
            r_median_beats: 8,
            snore_window_s: 30,
            snore_min_bursts: 3,
            snore_max_cv: 0.4,
            gap_reset_s: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub baseline_window_s: u64,
    pub baseline_min_samples: usize,
    pub desat_drop_pct: f64,
    pub min_event_s: u64,
    pub brady_bpm: f64,
    pub burst_threshold_db: f64,
    pub snore_gap_max_s: u64,
    /// Half-width of the snore co-occurrence window used for OSA/CSA.
    pub class_context_s: u64,
    pub alert_warn_spo2: f64,
    pub alert_crit_spo2: f64,
    pub alert_crit_bpm: f64,
    pub alert_sustain_s: u64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            baseline_window_s: 120,
            baseline_min_samples: 10,
            desat_drop_pct: 3.0,
            min_event_s: 10,
            brady_bpm: 50.0,
            burst_threshold_db: 50.0,
            snore_gap_max_s: 60,
            class_context_s: 60,
            alert_warn_spo2: 92.0,
            alert_crit_spo2: 90.0,
            alert_crit_bpm: 40.0,
            alert_sustain_s: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssessmentConfig {
    pub low_spo2_with_snoring: bool,
    pub low_spo2_mean_pct: f64,
    pub bradycardia_with_snoring: bool,
    pub desaturation_without_snoring: bool,
    pub ahi_rule: bool,
    pub ahi_threshold: f64,
}

impl Default for AssessmentConfig {
    fn default() -> Self {
        Self {
            low_spo2_with_snoring: true,
            low_spo2_mean_pct: 94.0,
            bradycardia_with_snoring: true,
            desaturation_without_snoring: true,
            ahi_rule: true,
            ahi_threshold: 5.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub engine: EngineConfig,
    pub detector: DetectorConfig,
    pub assessment: AssessmentConfig,
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg = Self::from_toml_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// Hex SHA-256 of the canonical TOML rendering.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let e = &self.engine;
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if e.rate_hz < 50 {
            return bad("engine.rate_hz must be at least 50");
        }
        if e.divider_k <= 0.0 {
            return bad("engine.divider_k must be positive");
        }
        if e.spo2_b <= 0.0 {
            return bad("engine.spo2_b must be positive");
        }
        if e.bpm_window_s == 0 || e.snore_window_s == 0 {
            return bad("window lengths must be positive");
        }
        if !(0.0..1.0).contains(&e.ppg_peak_fraction) {
            return bad("engine.ppg_peak_fraction must be in [0, 1)");
        }
        if e.r_loss_ratio >= 1.0 || e.r_gain_ratio <= 1.0 {
            return bad("r_loss_ratio must be < 1 and r_gain_ratio > 1");
        }
        if self.detector.baseline_window_s == 0 || self.detector.min_event_s == 0 {
            return bad("detector windows must be positive");
        }
        Ok(())
    }
}
