use alloc::format;
use alloc::vec::Vec;

use super::UniformSeries;
use crate::math;
use crate::{Error, Result};

/// Whole-day train/validation/test proportions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub valid_fraction: f64,
    pub test_fraction: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.50,
            valid_fraction: 0.25,
            test_fraction: 0.25,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let f = [self.train_fraction, self.valid_fraction, self.test_fraction];
        if f.iter().any(|v| !(*v > 0.0)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "split fractions {f:?} must be positive and sum to 1"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DaySplit {
    pub train: Vec<i64>,
    pub valid: Vec<i64>,
    pub test: Vec<i64>,
}

impl DaySplit {
    /// `"train"`, `"valid"`, `"test"`, or `None` for a day outside the split.
    pub fn label(&self, day: i64) -> Option<&'static str> {
        if self.train.binary_search(&day).is_ok() {
            Some("train")
        } else if self.valid.binary_search(&day).is_ok() {
            Some("valid")
        } else if self.test.binary_search(&day).is_ok() {
            Some("test")
        } else {
            None
        }
    }
}

/// Assigns retained days chronologically: the first `floor(train * n)` days
/// train, the next `floor(valid * n)` validate, the remainder test.
pub fn split_days(series: &UniformSeries, spec: &SplitSpec) -> Result<DaySplit> {
    spec.validate()?;
    let days = series.days();
    let n = days.len();
    if n < 4 {
        return Err(Error::InsufficientDays { days: n });
    }
    let n_train = (math::floor(spec.train_fraction * n as f64) as usize).max(1);
    let n_valid = (math::floor(spec.valid_fraction * n as f64) as usize).max(1);
    Ok(DaySplit {
        train: days[..n_train].to_vec(),
        valid: days[n_train..n_train + n_valid].to_vec(),
        test: days[n_train + n_valid..].to_vec(),
    })
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
            glucose: vec![Some(100.0); len],
            cho: vec![0.0; len],
            insulin: vec![0.0; len],
            interpolated: vec![false; len],
        }
    }

    fn sizes(n: i64) -> (usize, usize, usize) {
        let s = split_days(&days(n), &SplitSpec::default()).unwrap();
        (s.train.len(), s.valid.len(), s.test.len())
    }

    #[test]
    fn split_sizes_follow_floor_rule() {
        assert_eq!(sizes(40), (20, 10, 10));
        assert_eq!(sizes(31), (15, 7, 9));
        assert_eq!(sizes(4), (2, 1, 1));
    }

    #[test]
    fn split_is_chronological_partition() {
        let s = split_days(&days(9), &SplitSpec::default()).unwrap();
        let all: Vec<i64> = s.train.iter().chain(&s.valid).chain(&s.test).copied().collect();
        assert_eq!(all, (0..9).collect::<Vec<_>>());
        assert_eq!(s.label(0), Some("train"));
        assert_eq!(s.label(8), Some("test"));
        assert_eq!(s.label(99), None);
    }

    #[test]
    fn too_few_days_is_an_error() {
        assert_eq!(
            split_days(&days(3), &SplitSpec::default()),
            Err(Error::InsufficientDays { days: 3 })
        );
    }
}
