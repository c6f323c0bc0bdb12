use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use super::UniformSeries;
use crate::time::{SLOT_MINUTES, Timestamp};
use crate::{Error, Result};

pub const CHANNELS: [&str; 3] = ["glucose", "cho", "insulin"];

/// History length and prediction horizon, both in 5-minute steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowConfig {
    pub history: usize,
    pub horizon: usize,
}

impl Default for WindowConfig {
    /// Three hours of history, thirty minutes ahead.
    fn default() -> Self {
        Self {
            history: 36,
            horizon: 6,
        }
    }
}

impl WindowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.history < 2 || self.horizon < 2 {
            return Err(Error::InvalidArgument(alloc::format!(
                "history ({}) and horizon ({}) must both be >= 2",
                self.history,
                self.horizon
            )));
        }
        Ok(())
    }

    pub fn horizon_minutes(&self) -> i64 {
        self.horizon as i64 * SLOT_MINUTES
    }
}

/// One sample: `history x 3` standardized features (row-major, one row per
/// step, oldest first) and the glucose targets at `t + PH - 1` and `t + PH`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleWindow {
    pub features: Vec<f64>,
    pub history: usize,
    pub target_prev: f64,
    pub target_final: f64,
    /// Time of the last history step `t`.
    pub timestamp: Timestamp,
    pub day_index: i64,
    /// Windows with consecutive `t` share a segment.
    pub segment_id: u64,
}

impl SampleWindow {
    pub fn step(&self, k: usize) -> &[f64] {
        &self.features[k * 3..k * 3 + 3]
    }

    /// Standardized glucose at `t`.
    pub fn last_glucose(&self) -> f64 {
        self.features[(self.history - 1) * 3]
    }
}

/// Cuts one window per time index whose history and both targets lie in one
/// contiguous run of a single day, in `days`, with glucose present.
pub fn build_windows(series: &UniformSeries, config: &WindowConfig, days: &[i64]) -> Vec<SampleWindow> {
    let days: BTreeSet<i64> = days.iter().copied().collect();
    let h = config.history;
    let ph = config.horizon;
    let span = (h + ph - 1) as i64;
    let mut out: Vec<SampleWindow> = Vec::new();
    let mut segment: u64 = 0;
    let mut last_slot: Option<i64> = None;

    for (day, range) in series.day_ranges() {
        if !days.contains(&day) {
            continue;
        }
        if range.len() < h + ph {
            continue;
        }
        for t in range.start + h - 1..range.end - ph {
            let first = t + 1 - h;
            if series.slots[t + ph] - series.slots[first] != span {
                continue;
            }
            let (Some(target_prev), Some(target_final)) =
                (series.glucose[t + ph - 1], series.glucose[t + ph])
            else {
                continue;
            };
            let mut features = Vec::with_capacity(h * 3);
            let mut complete = true;
            for k in first..=t {
                match series.glucose[k] {
                    Some(g) => features.extend_from_slice(&[g, series.cho[k], series.insulin[k]]),
                    None => {
                        complete = false;
                        break;
                    }
                }
            }
            if !complete || features.iter().any(|v| !v.is_finite()) {
                continue;
            }
            let slot = series.slots[t];
            if last_slot.is_some_and(|s| s + 1 != slot) {
                segment += 1;
            }
            last_slot = Some(slot);
            out.push(SampleWindow {
                features,
                history: h,
                target_prev,
                target_final,
                timestamp: Timestamp::from_slot(slot),
                day_index: day,
                segment_id: segment,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::SLOTS_PER_DAY;
    use alloc::vec;

    fn days(n: i64) -> UniformSeries {
        let len = (n * SLOTS_PER_DAY) as usize;
        UniformSeries {
            slots: (0..n * SLOTS_PER_DAY).collect(),
            glucose: (0..len).map(|i| Some(i as f64)).collect(),
            cho: vec![0.0; len],
            insulin: vec![0.0; len],
            interpolated: vec![false; len],
        }
    }

    #[test]
    fn full_day_yields_247_windows() {
        let w = build_windows(&days(1), &WindowConfig::default(), &[0]);
        assert_eq!(w.len(), 288 - 36 - 6 + 1);
        assert!(w.iter().all(|x| x.segment_id == 0));
        let first = &w[0];
        assert_eq!(first.last_glucose(), 35.0);
        assert_eq!(first.target_prev, 40.0);
        assert_eq!(first.target_final, 41.0);
        assert_eq!(first.step(0), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn windows_never_straddle_days() {
        let s = days(2);
        let w = build_windows(&s, &WindowConfig::default(), &[0, 1]);
        assert_eq!(w.len(), 2 * 247);
        assert_eq!(w[246].segment_id, 0);
        assert_eq!(w[247].segment_id, 1);
        assert!(w.iter().all(|x| x.day_index == x.timestamp.day()));
    }

    #[test]
    fn gap_breaks_segment_and_excludes_windows() {
        let mut s = days(1);
        s.glucose[150] = None;
        let w = build_windows(&s, &WindowConfig::default(), &[0]);
        // t with 150 in [t-35, t] or t+5 == 150 or t+6 == 150 are dropped.
        assert_eq!(w.len(), 247 - 36 - 2);
        let segments: BTreeSet<u64> = w.iter().map(|x| x.segment_id).collect();
        // t in 35..=143, 146..=149 and 186..=281
        assert_eq!(segments.len(), 3);
    }

    #[test]
    fn days_outside_the_set_are_skipped() {
        let w = build_windows(&days(3), &WindowConfig::default(), &[1]);
        assert_eq!(w.len(), 247);
        assert!(w.iter().all(|x| x.day_index == 1));
    }
}
