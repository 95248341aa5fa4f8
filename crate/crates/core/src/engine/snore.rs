//! Snore rhythm tracking on the 1 Hz sound-level series.

use std::collections::VecDeque;

use crate::stats;

#[derive(Debug, Clone, Copy)]
pub struct SnoreParams {
    pub window_s: u64,
    pub burst_threshold_db: f64,
    pub min_bursts: usize,
    pub max_cv: f64,
}

impl Default for SnoreParams {
    fn default() -> Self {
        Self { window_s: 30, burst_threshold_db: 50.0, min_bursts: 3, max_cv: 0.4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnoreStatus {
    pub active: bool,
    pub period_s: Option<f64>,
}

/// A burst is a run of consecutive seconds at or above the threshold; its
/// time is the first second of the run. The rhythm is active when the
/// trailing window holds enough bursts with regular spacing and the last
/// burst is no older than two periods.
#[derive(Debug, Clone)]
pub struct SnoreTracker {
    p: SnoreParams,
    starts: VecDeque<u64>,
    in_burst: bool,
}

impl SnoreTracker {
    pub fn new(p: SnoreParams) -> Self {
        Self { p, starts: VecDeque::new(), in_burst: false }
    }

    pub fn update(&mut self, t_s: u64, db: Option<f64>) -> SnoreStatus {
        let loud = db.is_some_and(|d| d >= self.p.burst_threshold_db);
        if loud && !self.in_burst {
            self.starts.push_back(t_s);
        }
        self.in_burst = loud;
        while self.starts.front().is_some_and(|&s| s + self.p.window_s <= t_s) {
            self.starts.pop_front();
        }
        self.status(t_s)
    }

    fn status(&self, t_s: u64) -> SnoreStatus {
        let inactive = SnoreStatus { active: false, period_s: None };
        if self.starts.len() < self.p.min_bursts.max(2) {
            return inactive;
        }
        let starts: Vec<f64> = self.starts.iter().map(|&s| s as f64).collect();
        let intervals: Vec<f64> = starts.windows(2).map(|w| w[1] - w[0]).collect();
        let (Some(cv), Some(period)) = (stats::coeff_of_variation(&intervals), stats::median(&intervals)) else {
            return inactive;
        };
        let since_last = t_s as f64 - starts[starts.len() - 1];
        if cv < self.p.max_cv && since_last <= 2.0 * period {
            SnoreStatus { active: true, period_s: Some(period) }
        } else {
            inactive
        }
    }
}

/// Runs a fresh tracker over a per-second series starting at t = 0 and
/// returns the status after the last second.
pub fn detect_snore_cycles(series: &[f64], p: SnoreParams) -> SnoreStatus {
    let mut tr = SnoreTracker::new(p);
    let mut status = SnoreStatus { active: false, period_s: None };
    for (t, &db) in series.iter().enumerate() {
        status = tr.update(t as u64, Some(db));
    }
    status
}
