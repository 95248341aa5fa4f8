//! Sensor calibrations and their inverses.
//!
//! The forward maps turn raw counts into physiological units; the inverses
//! are what the simulator uses to synthesize raw channels that the engine
//! maps back onto a target value.

use crate::config::EngineConfig;
use crate::error::SignalError;
use crate::protocol::ADC_MAX;
use crate::stats;

/// Open-divider point of the GSR model: resistance diverges at this count.
pub const GSR_OPEN_RAW: f64 = 512.0;

/// Ratio of relative pulse amplitude below which the IR channel is treated
/// as carrying no pulse.
pub const MIN_PERFUSION: f64 = 5e-4;

pub const MIN_SPO2_SAMPLES: usize = 50;

/// Conductance in micro-Siemens of a resistance in ohms (G = 1/R).
pub fn conductance_us(resistance_ohms: f64) -> f64 {
    1e6 / resistance_ohms
}

/// Resistance seen by a series divider at a (possibly fractional) reading.
pub fn divider_resistance(raw: f64, divider_k: f64) -> Option<f64> {
    if raw >= GSR_OPEN_RAW {
        return None;
    }
    Some(divider_k * (1024.0 + 2.0 * raw) / (GSR_OPEN_RAW - raw))
}

/// Skin conductance for one GSR reading; `None` when the divider is open.
pub fn gsr_conductance(gsr_raw: u16, divider_k: f64) -> Result<Option<f64>, SignalError> {
    if gsr_raw > ADC_MAX {
        return Err(SignalError::RawOutOfRange { value: gsr_raw });
    }
    Ok(divider_resistance(f64::from(gsr_raw), divider_k).map(conductance_us))
}

/// Fractional reading that maps to `conductance_us`, clamped to the
/// reachable span `[0, 512)`.
pub fn gsr_raw_for_conductance(conductance_us: f64, divider_k: f64) -> f64 {
    let r = 1e6 / conductance_us;
    let raw = (GSR_OPEN_RAW * r - 1024.0 * divider_k) / (r + 2.0 * divider_k);
    raw.clamp(0.0, GSR_OPEN_RAW - 1.0)
}

/// Calibration line from ratio-of-ratios to SpO2, clamped to [70, 100].
pub fn spo2_from_ratio(ratio: f64, cfg: &EngineConfig) -> f64 {
    (cfg.spo2_a - cfg.spo2_b * ratio).clamp(70.0, 100.0)
}

pub fn ratio_for_spo2(spo2_pct: f64, cfg: &EngineConfig) -> f64 {
    (cfg.spo2_a - spo2_pct) / cfg.spo2_b
}

/// (AC_red/DC_red) / (AC_ir/DC_ir) over aligned windows, or `None` when the
/// window is too short, no finger is present or the IR channel has no pulse.
pub fn ratio_of_ratios(red: &[f64], ir: &[f64], cfg: &EngineConfig) -> Result<Option<f64>, SignalError> {
    if red.len() != ir.len() {
        return Err(SignalError::WindowMismatch { red: red.len(), ir: ir.len() });
    }
    if red.len() < MIN_SPO2_SAMPLES {
        return Ok(None);
    }
    let (Some(dc_red), Some(dc_ir)) = (stats::mean(red), stats::mean(ir)) else {
        return Ok(None);
    };
    if dc_red < cfg.no_finger_floor || dc_ir < cfg.no_finger_floor {
        return Ok(None);
    }
    let ac_red = stats::ac_rms(red).unwrap_or(0.0);
    let ac_ir = stats::ac_rms(ir).unwrap_or(0.0);
    if ac_ir < MIN_PERFUSION * dc_ir {
        return Ok(None);
    }
    Ok(Some((ac_red / dc_red) / (ac_ir / dc_ir)))
}

/// SpO2 percent from one window of red and IR counts.
pub fn compute_spo2(red: &[f64], ir: &[f64], cfg: &EngineConfig) -> Result<Option<f64>, SignalError> {
    Ok(ratio_of_ratios(red, ir, cfg)?.map(|r| spo2_from_ratio(r, cfg)))
}

/// Sound level of one window of microphone counts, floor-clamped.
pub fn sound_db(window: &[f64], cfg: &EngineConfig) -> f64 {
    let rms = stats::ac_rms(window).unwrap_or(0.0);
    let db = cfg.db_offset + 20.0 * rms.max(1e-6).log10();
    db.max(cfg.db_floor)
}

/// AC rms (counts) that [`sound_db`] maps to `db`.
pub fn rms_for_db(db: f64, cfg: &EngineConfig) -> f64 {
    10f64.powf((db - cfg.db_offset) / 20.0)
}
