use alloc::vec::Vec;

use super::UniformSeries;
use crate::time::{self, SLOTS_PER_DAY};
use crate::{Error, Result};

/// Longest tolerated hole in a day's raw glucose coverage, in slots (30 min).
pub const MAX_GAP_SLOTS: i64 = 6;
/// A complete day has a reading within its first and within its last hour.
const EDGE_SLOTS: i64 = 12;

/// Spike detection threshold, mg/dL per 5-minute step.
pub const DEFAULT_SPIKE_THRESHOLD: f64 = 40.0;

/// Drops every calendar day whose raw glucose coverage has a gap longer than
/// 30 minutes, or that has no reading in its first or last hour.
///
/// Slots of the day absent from the series count as missing, so partial
/// first/last days of a recording are dropped too.
pub fn remove_incomplete_days(series: &UniformSeries) -> Result<UniformSeries> {
    let mut keep_days = Vec::new();
    for (day, range) in series.day_ranges() {
        let present: Vec<i64> = range
            .filter(|&i| series.glucose[i].is_some() && !series.interpolated[i])
            .map(|i| time::slot_of_day(series.slots[i]))
            .collect();
        let (Some(&first), Some(&last)) = (present.first(), present.last()) else {
            continue;
        };
        let edges_ok = first < EDGE_SLOTS && last >= SLOTS_PER_DAY - EDGE_SLOTS;
        let gaps_ok = present.windows(2).all(|w| w[1] - w[0] <= MAX_GAP_SLOTS);
        if edges_ok && gaps_ok {
            keep_days.push(day);
        }
    }
    if keep_days.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(series.select(|i| keep_days.binary_search(&series.day_index(i)).is_ok()))
}

/// Marks isolated high-amplitude readings as missing.
///
/// A reading is a spike when it departs from both its nearest present
/// same-day neighbours by more than `threshold` per 5-minute step of
/// separation, in the same direction (a jump up then down, or down then up).
/// Detection uses the original values, so adjacent spikes do not mask each
/// other. First and last readings of a day are never removed.
pub fn remove_spikes(series: &UniformSeries, threshold: f64) -> UniformSeries {
    let mut out = series.clone();
    for (_, range) in series.day_ranges() {
        let present: Vec<usize> = range.filter(|&i| series.glucose[i].is_some()).collect();
        for w in present.windows(3) {
            let (p, i, n) = (w[0], w[1], w[2]);
            let g = series.glucose[i].unwrap_or_default();
            let gp = series.glucose[p].unwrap_or_default();
            let gn = series.glucose[n].unwrap_or_default();
            let tol_prev = threshold * (series.slots[i] - series.slots[p]) as f64;
            let tol_next = threshold * (series.slots[n] - series.slots[i]) as f64;
            let up = g - gp > tol_prev && g - gn > tol_next;
            let down = gp - g > tol_prev && gn - g > tol_next;
            if up || down {
                out.glucose[i] = None;
            }
        }
    }
    out
}
