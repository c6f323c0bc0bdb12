//! Glucose preprocessing: resample to a 5-minute grid, drop incomplete days,
//! remove sensor spikes, fill gaps with PCHIP, split whole days
//! chronologically, standardize on training days and cut sample windows.

mod clean;
mod pchip;
mod resample;
mod scale;
mod split;
mod window;

use alloc::vec::Vec;

pub use clean::{remove_incomplete_days, remove_spikes, DEFAULT_SPIKE_THRESHOLD, MAX_GAP_SLOTS};
pub use pchip::{pchip_interpolate, pchip_slopes, Pchip};
pub use resample::resample_5min;
pub use scale::{apply_scaler, fit_scaler, invert_glucose, Scaler};
pub use split::{split_days, DaySplit, SplitSpec};
pub use window::{build_windows, SampleWindow, WindowConfig, CHANNELS};

use crate::time::{self, Timestamp};

/// Multichannel series on the 5-minute grid.
///
/// Slots are absolute slot numbers (see [`Timestamp::slot`]), strictly
/// increasing. They are contiguous right after resampling; day cleaning cuts
/// holes where whole days were dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformSeries {
    pub slots: Vec<i64>,
    pub glucose: Vec<Option<f64>>,
    pub cho: Vec<f64>,
    pub insulin: Vec<f64>,
    pub interpolated: Vec<bool>,
}

impl UniformSeries {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn start(&self) -> Option<Timestamp> {
        self.slots.first().map(|&s| Timestamp::from_slot(s))
    }

    pub fn timestamp(&self, i: usize) -> Timestamp {
        Timestamp::from_slot(self.slots[i])
    }

    pub fn day_index(&self, i: usize) -> i64 {
        time::slot_day(self.slots[i])
    }

    /// Distinct calendar days, in order.
    pub fn days(&self) -> Vec<i64> {
        let mut days: Vec<i64> = Vec::new();
        for &s in &self.slots {
            let d = time::slot_day(s);
            if days.last() != Some(&d) {
                days.push(d);
            }
        }
        days
    }

    /// Index range of each day's slots, in day order.
    pub(crate) fn day_ranges(&self) -> Vec<(i64, core::ops::Range<usize>)> {
        let mut out: Vec<(i64, core::ops::Range<usize>)> = Vec::new();
        for (i, &s) in self.slots.iter().enumerate() {
            let d = time::slot_day(s);
            match out.last_mut() {
                Some((day, range)) if *day == d => range.end = i + 1,
                _ => out.push((d, i..i + 1)),
            }
        }
        out
    }

    pub(crate) fn select(&self, keep: impl Fn(usize) -> bool) -> UniformSeries {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(i)).collect();
        UniformSeries {
            slots: idx.iter().map(|&i| self.slots[i]).collect(),
            glucose: idx.iter().map(|&i| self.glucose[i]).collect(),
            cho: idx.iter().map(|&i| self.cho[i]).collect(),
            insulin: idx.iter().map(|&i| self.insulin[i]).collect(),
            interpolated: idx.iter().map(|&i| self.interpolated[i]).collect(),
        }
    }
}
