//! Hourly means and whole-session running statistics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::{EcgFlag, VitalsSample};

const SECONDS_PER_HOUR: u64 = 3600;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourlySummary {
    /// 1-based.
    pub hour_index: u64,
    pub mean_bpm: Option<f64>,
    pub mean_spo2: Option<f64>,
    pub mean_gsr: Option<f64>,
    pub sample_count: u64,
}

impl HourlySummary {
    pub fn empty(hour_index: u64) -> Self {
        Self {
            hour_index,
            mean_bpm: None,
            mean_spo2: None,
            mean_gsr: None,
            sample_count: 0,
        }
    }
}

/// Mean of the hourly means, the bottom row of an hourly table.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanRow {
    pub bpm: Option<f64>,
    pub spo2: Option<f64>,
    pub gsr: Option<f64>,
}

impl MeanRow {
    pub fn of(summaries: &[HourlySummary]) -> Self {
        let col = |f: fn(&HourlySummary) -> Option<f64>| {
            let v: Vec<f64> = summaries.iter().filter_map(f).collect();
            crate::stats::mean(&v)
        };
        Self {
            bpm: col(|h| h.mean_bpm),
            spo2: col(|h| h.mean_spo2),
            gsr: col(|h| h.mean_gsr),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    sum: f64,
    n: u64,
}

impl Acc {
    fn add(&mut self, v: Option<f64>) {
        if let Some(v) = v {
            self.sum += v;
            self.n += 1;
        }
    }

    fn mean(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct HourAcc {
    bpm: Acc,
    spo2: Acc,
    gsr: Acc,
    count: u64,
}

impl HourAcc {
    fn add(&mut self, s: &VitalsSample) {
        self.bpm.add(s.bpm);
        self.spo2.add(s.spo2_pct);
        self.gsr.add(s.gsr_us);
        self.count += 1;
    }

    fn summary(&self, hour_index: u64) -> HourlySummary {
        HourlySummary {
            hour_index,
            mean_bpm: self.bpm.mean(),
            mean_spo2: self.spo2.mean(),
            mean_gsr: self.gsr.mean(),
            sample_count: self.count,
        }
    }
}

/// Summarizes samples belonging to hour `hour_index` (1-based). Samples from
/// other hours are ignored.
pub fn hourly_summary(hour_index: u64, samples: &[VitalsSample]) -> HourlySummary {
    let mut acc = HourAcc::default();
    for s in samples.iter().filter(|s| s.hour() == hour_index) {
        acc.add(s);
    }
    acc.summary(hour_index)
}

/// Streaming hourly summaries. Hours skipped entirely are reported with a
/// zero sample count.
#[derive(Debug, Clone, Default)]
pub struct HourlyAggregator {
    hour: Option<u64>,
    acc: HourAcc,
}

impl HourlyAggregator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the summaries of every hour completed before `s`.
    pub fn push(&mut self, s: &VitalsSample) -> Vec<HourlySummary> {
        let h = s.hour();
        let mut out = Vec::new();
        match self.hour {
            None => self.hour = Some(h),
            Some(cur) if h > cur => {
                out.push(self.acc.summary(cur));
                out.extend((cur + 1..h).map(HourlySummary::empty));
                self.acc = HourAcc::default();
                self.hour = Some(h);
            }
            Some(_) => {}
        }
        self.acc.add(s);
        out
    }

    /// Summary of the hour in progress, if any sample was seen.
    pub fn finish(&mut self) -> Option<HourlySummary> {
        let h = self.hour.take()?;
        let out = self.acc.summary(h);
        self.acc = HourAcc::default();
        Some(out)
    }
}

/// Whole-session measurements used by the assessment.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SessionStats {
    pub first_t_s: Option<u64>,
    pub last_t_s: Option<u64>,
    pub sample_count: u64,
    pub snore_active_s: u64,
    /// Median of the per-second snore periods while active.
    pub snore_period_median_s: Option<f64>,
    pub sound_min_db: Option<f64>,
    pub sound_max_db: Option<f64>,
    pub r_loss_s: u64,
    pub r_gain_s: u64,
}

impl SessionStats {
    /// Seconds from the first to the last sample, inclusive.
    pub fn duration_s(&self) -> u64 {
        match (self.first_t_s, self.last_t_s) {
            (Some(a), Some(b)) => b - a + 1,
            _ => 0,
        }
    }

    pub fn snore_detected(&self) -> bool {
        self.snore_active_s > 0
    }
}

/// Running [`SessionStats`] in constant memory: snore periods are kept as a
/// histogram at 0.1 s resolution.
#[derive(Debug, Clone, Default)]
pub struct StatsAccumulator {
    stats: SessionStats,
    periods: BTreeMap<u64, u64>,
}

impl StatsAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, s: &VitalsSample) {
        let st = &mut self.stats;
        st.first_t_s.get_or_insert(s.t_s);
        st.last_t_s = Some(s.t_s);
        st.sample_count += 1;
        if s.snore_active {
            st.snore_active_s += 1;
        }
        if let Some(p) = s.snore_period_s.filter(|_| s.snore_active) {
            *self.periods.entry((p * 10.0).round() as u64).or_default() += 1;
        }
        if let Some(db) = s.sound_db {
            st.sound_min_db = Some(st.sound_min_db.map_or(db, |m| m.min(db)));
            st.sound_max_db = Some(st.sound_max_db.map_or(db, |m| m.max(db)));
        }
        for f in &s.ecg_flags {
            match f {
                EcgFlag::RLoss => st.r_loss_s += 1,
                EcgFlag::RGain => st.r_gain_s += 1,
            }
        }
    }

    pub fn stats(&self) -> SessionStats {
        let mut out = self.stats.clone();
        out.snore_period_median_s = self.period_median();
        out
    }

    fn period_median(&self) -> Option<f64> {
        let n: u64 = self.periods.values().sum();
        if n == 0 {
            return None;
        }
        // lower and upper middle ranks, averaged like stats::median
        let (lo_rank, hi_rank) = ((n - 1) / 2, n / 2);
        let mut seen = 0;
        let mut lo = None;
        for (&bin, &c) in &self.periods {
            if lo.is_none() && seen + c > lo_rank {
                lo = Some(bin);
            }
            if seen + c > hi_rank {
                return Some((lo.unwrap() + bin) as f64 / 20.0);
            }
            seen += c;
        }
        None
    }
}

/// One-shot statistics over a sample slice.
pub fn session_stats(samples: &[VitalsSample]) -> SessionStats {
    let mut acc = StatsAccumulator::new();
    samples.iter().for_each(|s| acc.push(s));
    acc.stats()
}

/// Hour index helper used by reports.
pub fn hours_spanned(stats: &SessionStats) -> u64 {
    stats.last_t_s.map_or(0, |t| t / SECONDS_PER_HOUR + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(t: u64, bpm: Option<f64>) -> VitalsSample {
        VitalsSample {
            bpm,
            spo2_pct: Some(96.0),
            gsr_us: Some(200.0),
            ..VitalsSample::empty(t)
        }
    }

    #[test]
    fn constant_hour() {
        let s: Vec<_> = (0..3600).map(|t| sample(t, Some(80.0))).collect();
        let h = hourly_summary(1, &s);
        assert_eq!(h.mean_bpm, Some(80.0));
        assert_eq!(h.sample_count, 3600);
    }

    #[test]
    fn absent_only_channel_is_absent() {
        let s: Vec<_> = (0..10).map(|t| sample(t, None)).collect();
        let h = hourly_summary(1, &s);
        assert_eq!(h.mean_bpm, None);
        assert_eq!(h.mean_spo2, Some(96.0));
    }

    #[test]
    fn empty_hour() {
        assert_eq!(hourly_summary(3, &[]), HourlySummary::empty(3));
    }

    #[test]
    fn aggregator_matches_batch_and_fills_skipped_hours() {
        let s: Vec<_> = (0..3600)
            .chain(7200..7300)
            .map(|t| sample(t, Some(60.0 + (t % 7) as f64)))
            .collect();
        let mut agg = HourlyAggregator::new();
        let mut out: Vec<_> = s.iter().flat_map(|x| agg.push(x)).collect();
        out.extend(agg.finish());
        assert_eq!(out.len(), 3);
        assert_eq!(out[0], hourly_summary(1, &s));
        assert_eq!(out[1], HourlySummary::empty(2));
        assert_eq!(out[2], hourly_summary(3, &s));
    }

    #[test]
    fn mean_row_averages_hours() {
        let hs = [
            HourlySummary { mean_bpm: Some(70.0), ..HourlySummary::empty(1) },
            HourlySummary { mean_bpm: Some(80.0), ..HourlySummary::empty(2) },
        ];
        assert_eq!(MeanRow::of(&hs).bpm, Some(75.0));
        assert_eq!(MeanRow::of(&hs).spo2, None);
    }

    #[test]
    fn period_histogram_median() {
        let mut acc = StatsAccumulator::new();
        for (t, p) in [3.0, 4.0, 4.5, 5.0].iter().enumerate() {
            acc.push(&VitalsSample {
                snore_active: true,
                snore_period_s: Some(*p),
                ..VitalsSample::empty(t as u64)
            });
        }
        let st = acc.stats();
        assert_eq!(st.snore_period_median_s, Some(4.25));
        assert_eq!(st.duration_s(), 4);
        assert!(st.snore_detected());
    }
}
