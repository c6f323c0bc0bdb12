use alloc::vec::Vec;

use super::window::CHANNELS;
use super::UniformSeries;
use crate::math;
use crate::{Error, Result};

/// Per-channel standardization (glucose, CHO, insulin), fitted on training
/// days with the population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaler {
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

impl Scaler {
    pub fn scale(&self, channel: usize, v: f64) -> f64 {
        (v - self.mean[channel]) / self.std[channel]
    }

    pub fn unscale(&self, channel: usize, v: f64) -> f64 {
        v * self.std[channel] + self.mean[channel]
    }

    pub fn glucose_to_mgdl(&self, v: f64) -> f64 {
        self.unscale(0, v)
    }
}

fn moments(values: impl Iterator<Item = f64> + Clone) -> Option<(f64, f64)> {
    let n = values.clone().count();
    if n == 0 {
        return None;
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    Some((mean, math::sqrt(var)))
}

pub fn fit_scaler(series: &UniformSeries, train_days: &[i64]) -> Result<Scaler> {
    if train_days.is_empty() {
        return Err(Error::EmptyInput("training days"));
    }
    let idx: Vec<usize> = (0..series.len())
        .filter(|&i| train_days.contains(&series.day_index(i)))
        .collect();
    let glucose = idx.iter().filter_map(|&i| series.glucose[i]);
    let cho = idx.iter().map(|&i| series.cho[i]);
    let insulin = idx.iter().map(|&i| series.insulin[i]);

    let mut scaler = Scaler {
        mean: [0.0; 3],
        std: [1.0; 3],
    };
    let stats = [moments(glucose), moments(cho), moments(insulin)];
    for (c, stat) in stats.into_iter().enumerate() {
        let (mean, std) = stat.ok_or(Error::EmptyInput("training slots"))?;
        if !(std > 0.0) {
            return Err(Error::DegenerateScale(CHANNELS[c]));
        }
        scaler.mean[c] = mean;
        scaler.std[c] = std;
    }
    Ok(scaler)
}

pub fn apply_scaler(series: &UniformSeries, scaler: &Scaler) -> UniformSeries {
    UniformSeries {
        slots: series.slots.clone(),
        glucose: series.glucose.iter().map(|g| g.map(|v| scaler.scale(0, v))).collect(),
        cho: series.cho.iter().map(|&v| scaler.scale(1, v)).collect(),
        insulin: series.insulin.iter().map(|&v| scaler.scale(2, v)).collect(),
        interpolated: series.interpolated.clone(),
    }
}

/// Maps standardized glucose values back to mg/dL.
pub fn invert_glucose(values: &[f64], scaler: &Scaler) -> Vec<f64> {
    values.iter().map(|&v| scaler.glucose_to_mgdl(v)).collect()
}
