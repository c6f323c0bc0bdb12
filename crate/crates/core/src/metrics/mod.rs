//! Point accuracy (RMSE), variation accuracy (dRMSE) and the continuous
//! glucose error grid (CG-EGA) over prediction traces in mg/dL.

mod ega;
mod report;

use alloc::vec::Vec;

pub use ega::{cg_ega_classify, p_ega, r_ega, CgEgaLabel, EgaZone, GlycemicRegion, HYPER_THRESHOLD, HYPO_THRESHOLD};
pub use report::{cg_ega_points, cg_ega_report, CgEgaReport, EgaPoint, RegionCounts};

use crate::math;
use crate::time::{Timestamp, SLOT_MINUTES};
use crate::{Error, Result};

/// One evaluated prediction, in mg/dL.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    /// Time the prediction refers to.
    pub timestamp: Timestamp,
    pub y_true: f64,
    pub y_pred: f64,
    pub segment_id: u64,
}

/// Time-ordered predictions; within a segment points are 5 minutes apart.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PredictionTrace {
    pub points: Vec<TracePoint>,
}

impl PredictionTrace {
    pub fn new(points: Vec<TracePoint>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index pairs `(i - 1, i)` of same-segment points one step apart.
    pub fn consecutive_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..self.points.len()).filter_map(move |i| {
            let (a, b) = (&self.points[i - 1], &self.points[i]);
            let one_step = b.timestamp.secs() - a.timestamp.secs() == SLOT_MINUTES * 60;
            (a.segment_id == b.segment_id && one_step).then_some((i - 1, i))
        })
    }
}

/// Rates of change in mg/dL/min for a point with a same-segment predecessor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub index: usize,
    pub true_rate: f64,
    pub pred_rate: f64,
}

pub fn rmse(trace: &PredictionTrace) -> Result<f64> {
    if trace.is_empty() {
        return Err(Error::EmptyInput("rmse of an empty trace"));
    }
    let sum: f64 = trace.points.iter().map(|p| (p.y_true - p.y_pred) * (p.y_true - p.y_pred)).sum();
    Ok(math::sqrt(sum / trace.len() as f64))
}

/// RMSE of predicted vs true one-step variations, in mg/dL per 5-minute step.
pub fn drmse(trace: &PredictionTrace) -> Result<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (a, b) in trace.consecutive_pairs() {
        let (pa, pb) = (&trace.points[a], &trace.points[b]);
        let e = (pb.y_true - pa.y_true) - (pb.y_pred - pa.y_pred);
        sum += e * e;
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyInput("drmse needs a same-segment consecutive pair"));
    }
    Ok(math::sqrt(sum / n as f64))
}

/// [`drmse`] expressed per minute.
pub fn drmse_per_minute(trace: &PredictionTrace) -> Result<f64> {
    Ok(drmse(trace)? / SLOT_MINUTES as f64)
}

pub fn rate_of_change(trace: &PredictionTrace) -> Vec<RatePoint> {
    let step = SLOT_MINUTES as f64;
    trace
        .consecutive_pairs()
        .map(|(a, b)| {
            let (pa, pb) = (&trace.points[a], &trace.points[b]);
            RatePoint {
                index: b,
                true_rate: (pb.y_true - pa.y_true) / step,
                pred_rate: (pb.y_pred - pa.y_pred) / step,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    pub(crate) fn trace(y_true: &[f64], y_pred: &[f64], segments: &[u64]) -> PredictionTrace {
        PredictionTrace::new(
            y_true
                .iter()
                .zip(y_pred)
                .zip(segments)
                .enumerate()
                .map(|(i, ((&t, &p), &s))| TracePoint {
                    timestamp: Timestamp::from_secs(i as i64 * 300),
                    y_true: t,
                    y_pred: p,
                    segment_id: s,
                })
                .collect(),
        )
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&trace(&[100.0, 120.0], &[100.0, 120.0], &[0, 0])).unwrap(), 0.0);
        assert_eq!(rmse(&trace(&[100.0, 120.0], &[110.0, 110.0], &[0, 0])).unwrap(), 10.0);
        assert_eq!(rmse(&trace(&[100.0], &[105.0], &[0])).unwrap(), 5.0);
        assert!(rmse(&PredictionTrace::default()).is_err());
    }

    #[test]
    fn drmse_examples() {
        assert_eq!(drmse(&trace(&[100.0, 120.0], &[100.0, 120.0], &[0, 0])).unwrap(), 0.0);
        assert_eq!(drmse(&trace(&[100.0, 120.0], &[110.0, 110.0], &[0, 0])).unwrap(), 20.0);
        assert!(drmse(&trace(&[100.0, 120.0], &[110.0, 110.0], &[0, 1])).is_err());
        let t = trace(&[100.0, 120.0, 120.0, 130.0], &[100.0, 100.0, 0.0, 10.0], &[0, 0, 1, 1]);
        assert_eq!(drmse(&t).unwrap(), math::sqrt(200.0));
        assert_eq!(drmse_per_minute(&t).unwrap(), math::sqrt(200.0) / 5.0);
    }

    #[test]
    fn time_gap_inside_segment_breaks_pair() {
        let mut t = trace(&[100.0, 120.0], &[110.0, 110.0], &[0, 0]);
        t.points[1].timestamp = Timestamp::from_secs(600);
        assert!(drmse(&t).is_err());
    }

    #[test]
    fn rates_in_mgdl_per_minute() {
        let r = rate_of_change(&trace(&[100.0, 110.0, 110.0], &[100.0, 100.0, 100.0], &[0, 0, 0]));
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].index, 1);
        assert_eq!(r[0].true_rate, 2.0);
        assert_eq!(r[1].true_rate, 0.0);
        let flat = rate_of_change(&trace(&[90.0; 4], &[90.0; 4], &[0, 0, 0, 0]));
        assert!(flat.iter().all(|p| p.true_rate == 0.0 && p.pred_rate == 0.0));
        assert_eq!(rate_of_change(&trace(&[1.0], &[1.0], &[0])), vec![]);
    }
}
