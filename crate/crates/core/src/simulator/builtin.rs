//! The five reference subjects.
//!
//! Per-hour targets are the published hourly means for heart rate, SpO2 and
//! skin conductance over a six-hour night. Snoring, apnea episodes and R-wave
//! anomalies are scripted to match the reported observations for each
//! subject.

use super::profile::{ApneaEpisodeScript, EcgAnomaly, HrEffect, SnoreScript, SubjectProfile};
use crate::error::ProfileError;

pub const BUILTIN_NAMES: [&str; 5] = ["person-1", "person-2", "person-3", "person-4", "person-5"];

pub const HR_TABLE: [[f64; 6]; 5] = [
    [73.01, 76.39, 67.33, 72.82, 78.38, 78.87],
    [88.67, 88.63, 62.73, 83.21, 91.04, 85.34],
    [69.37, 68.17, 67.29, 75.87, 67.5, 73.68],
    [100.24, 98.48, 97.12, 79.54, 82.96, 90.02],
    [74.32, 82.67, 87.23, 89.56, 76.98, 73.57],
];

pub const SPO2_TABLE: [[f64; 6]; 5] = [
    [95.56, 95.97, 95.68, 95.83, 96.04, 95.81],
    [95.90, 95.79, 95.96, 96.12, 96.00, 95.94],
    [97.12, 98.11, 97.70, 97.22, 98.37, 98.36],
    [95.71, 96.45, 96.73, 96.46, 97.49, 96.07],
    [95.87, 94.15, 93.78, 93.63, 94.12, 95.73],
];

pub const GSR_TABLE: [[f64; 6]; 5] = [
    [231.03, 235.47, 264.67, 221.74, 193.13, 207.18],
    [181.81, 254.87, 134.34, 154.95, 123.82, 125.21],
    [348.2, 269.35, 265.41, 217.13, 253.77, 298.82],
    [188.88, 150.03, 74.22, 123.25, 119.51, 118.08],
    [190.54, 216.47, 142.79, 135.38, 147.90, 164.27],
];

/// Printed "Mean" rows of the three tables, as published.
pub const HR_MEAN_ROW: [f64; 5] = [74.47, 83.27, 70.31, 91.39, 80.72];
pub const SPO2_MEAN_ROW: [f64; 5] = [95.82, 95.95, 97.81, 96.49, 94.55];
pub const GSR_MEAN_ROW: [f64; 5] = [225.54, 162.5, 275.45, 128.95, 166.23];

const META: [(&str, &str, &str); 5] = [
    ("5-17", "male", "normal"),
    ("18-35", "male", "overweight, excessive sweating"),
    ("18-35", "male", "physically fit (athlete)"),
    ("36-50", "female", "major heart issue, obese"),
    ("50+", "male", "lung issue"),
];

/// Looks up one of [`BUILTIN_NAMES`].
pub fn builtin_profile(name: &str) -> Result<SubjectProfile, ProfileError> {
    let idx = BUILTIN_NAMES
        .iter()
        .position(|n| *n == name)
        .ok_or_else(|| ProfileError::UnknownProfile {
            name: name.to_string(),
            valid: BUILTIN_NAMES.iter().map(|s| s.to_string()).collect(),
        })?;
    let (age_group, gender, body_status) = META[idx];
    let mut p = SubjectProfile {
        label: name.to_string(),
        age_group: age_group.into(),
        gender: gender.into(),
        body_status: body_status.into(),
        hr_baseline_bpm: HR_TABLE[idx].to_vec(),
        spo2_baseline_pct: SPO2_TABLE[idx].to_vec(),
        gsr_baseline_us: GSR_TABLE[idx].to_vec(),
        ambient_db: 37.5,
        snore: None,
        episodes: Vec::new(),
        ecg_anomalies: Vec::new(),
    };
    match idx {
        1 => person_2(&mut p),
        3 => person_4(&mut p),
        4 => person_5(&mut p),
        _ => {}
    }
    Ok(p)
}

/// Light snorer whose heart rate sags in the third hour.
fn person_2(p: &mut SubjectProfile) {
    p.snore = Some(SnoreScript {
        cycle_period_s: 4.0,
        cycle_jitter_s: 0.5,
        burst_fraction: 0.4,
        peak_db: 55.0,
        room_floor_db: 37.5,
    });
    p.episodes = [600.0, 1500.0, 2400.0, 3000.0]
        .iter()
        .map(|off| ApneaEpisodeScript {
            start_s: 2.0 * 3600.0 + off,
            duration_s: 45.0,
            spo2_nadir_pct: 94.5,
            hr_effect: HrEffect::Bradycardia(44.0),
            snore_suppressed: false,
        })
        .collect();
}

/// Loud snorer with regular obstructive pauses and R-wave loss/gain strips.
fn person_4(p: &mut SubjectProfile) {
    p.snore = Some(SnoreScript {
        cycle_period_s: 4.0,
        cycle_jitter_s: 1.0,
        burst_fraction: 0.4,
        peak_db: 60.0,
        room_floor_db: 37.5,
    });
    p.episodes = (0..6)
        .flat_map(|h| [900.0, 2100.0, 3000.0].map(move |off| (h, off)))
        .map(|(h, off)| ApneaEpisodeScript {
            start_s: h as f64 * 3600.0 + off,
            duration_s: 20.0,
            spo2_nadir_pct: SPO2_TABLE[3][h] - 5.0,
            hr_effect: HrEffect::TachyRebound(HR_TABLE[3][h] + 12.0),
            snore_suppressed: true,
        })
        .collect();
    // strips of five beats: the first loses its R wave, the fifth gains one
    p.ecg_anomalies = (0..12u64)
        .flat_map(|j| {
            let k = 300 + 2700 * j;
            [
                EcgAnomaly { beat_index: k, amplitude_scale: 0.3 },
                EcgAnomaly { beat_index: k + 4, amplitude_scale: 1.8 },
            ]
        })
        .collect();
}

/// Snorer with desaturations concentrated in hours three and four.
fn person_5(p: &mut SubjectProfile) {
    p.snore = Some(SnoreScript {
        cycle_period_s: 5.0,
        cycle_jitter_s: 1.0,
        burst_fraction: 0.4,
        peak_db: 60.0,
        room_floor_db: 37.5,
    });
    p.episodes = (2..4)
        .flat_map(|h| [300.0, 900.0, 1500.0, 2100.0, 2700.0, 3300.0].map(move |off| (h, off)))
        .map(|(h, off)| ApneaEpisodeScript {
            start_s: h as f64 * 3600.0 + off,
            duration_s: 25.0,
            spo2_nadir_pct: 87.0,
            hr_effect: HrEffect::TachyRebound(100.0),
            snore_suppressed: true,
        })
        .collect();
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_rows() {
        let p1 = builtin_profile("person-1").unwrap();
        assert_eq!(p1.hr_baseline_bpm, vec![73.01, 76.39, 67.33, 72.82, 78.38, 78.87]);
        let p5 = builtin_profile("person-5").unwrap();
        assert_eq!(p5.spo2_baseline_pct, vec![95.87, 94.15, 93.78, 93.63, 94.12, 95.73]);
        let p4 = builtin_profile("person-4").unwrap();
        assert_eq!(p4.gsr_baseline_us, vec![188.88, 150.03, 74.22, 123.25, 119.51, 118.08]);
    }

    #[test]
    fn all_builtins_validate() {
        for name in BUILTIN_NAMES {
            builtin_profile(name).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn snore_assignments() {
        assert!(builtin_profile("person-3").unwrap().snore.is_none());
        for name in ["person-4", "person-5"] {
            let s = builtin_profile(name).unwrap().snore.unwrap();
            assert_eq!(s.peak_db, 60.0);
        }
        let s4 = builtin_profile("person-4").unwrap().snore.unwrap();
        assert_eq!((s4.cycle_period_s - s4.cycle_jitter_s, s4.cycle_period_s + s4.cycle_jitter_s), (3.0, 5.0));
        let s5 = builtin_profile("person-5").unwrap().snore.unwrap();
        assert_eq!((s5.cycle_period_s - s5.cycle_jitter_s, s5.cycle_period_s + s5.cycle_jitter_s), (4.0, 6.0));
    }

    #[test]
    fn person_5_episodes_in_hours_3_and_4() {
        let p = builtin_profile("person-5").unwrap();
        assert!(!p.episodes.is_empty());
        assert!(p.episodes.iter().all(|e| (7200.0..14400.0).contains(&e.start_s)));
    }

    #[test]
    fn unknown_name_lists_valid_ones() {
        let err = builtin_profile("bogus-name").unwrap_err().to_string();
        for n in BUILTIN_NAMES {
            assert!(err.contains(n), "{err}");
        }
    }

    #[test]
    fn person_4_mean_row_discrepancy_is_preserved() {
        let recomputed: f64 = GSR_TABLE[3].iter().sum::<f64>() / 6.0;
        assert!((recomputed - 128.995).abs() < 1e-9);
        assert_eq!(GSR_MEAN_ROW[3], 128.95);
    }
}
