//! Causal smoothing of prediction traces.

use alloc::vec::Vec;

use crate::metrics::PredictionTrace;
use crate::time::SLOT_MINUTES;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Smoothing {
    /// Mean of the last `window` predictions, ramping up at segment starts.
    MovingAverage { window: usize },
    /// `s_t = alpha * y_t + (1 - alpha) * s_{t-1}`, restarted per segment.
    Exponential { alpha: f64 },
}

impl Default for Smoothing {
    fn default() -> Self {
        Smoothing::MovingAverage { window: 3 }
    }
}

impl Smoothing {
    pub fn apply(&self, trace: &PredictionTrace) -> PredictionTrace {
        match *self {
            Smoothing::MovingAverage { window } => moving_average(trace, window),
            Smoothing::Exponential { alpha } => exponential(trace, alpha),
        }
    }
}

/// Start index of the run each point belongs to. A run breaks at a segment
/// change or a time gap.
fn run_starts(trace: &PredictionTrace) -> Vec<usize> {
    let mut starts = Vec::with_capacity(trace.len());
    for (i, p) in trace.points.iter().enumerate() {
        let continues = i > 0 && {
            let q = &trace.points[i - 1];
            q.segment_id == p.segment_id && p.timestamp.secs() - q.timestamp.secs() == SLOT_MINUTES * 60
        };
        starts.push(if continues { starts[i - 1] } else { i });
    }
    starts
}

/// Replaces each prediction with the mean of the last `min(window, k)`
/// predictions of its segment, `k` being its 1-based position there.
/// `window` 0 is treated as 1.
pub fn moving_average(trace: &PredictionTrace, window: usize) -> PredictionTrace {
    let window = window.max(1);
    let starts = run_starts(trace);
    let mut out = trace.clone();
    for i in 0..trace.len() {
        let from = starts[i].max((i + 1).saturating_sub(window));
        let slice = &trace.points[from..=i];
        out.points[i].y_pred = slice.iter().map(|p| p.y_pred).sum::<f64>() / slice.len() as f64;
    }
    out
}

pub fn exponential(trace: &PredictionTrace, alpha: f64) -> PredictionTrace {
    let starts = run_starts(trace);
    let mut out = trace.clone();
    for i in 0..trace.len() {
        if starts[i] != i {
            let prev = out.points[i - 1].y_pred;
            out.points[i].y_pred = alpha * trace.points[i].y_pred + (1.0 - alpha) * prev;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::TracePoint;
    use crate::time::Timestamp;
    use alloc::vec;

    fn trace(preds: &[f64], segments: &[u64]) -> PredictionTrace {
        PredictionTrace::new(
            preds
                .iter()
                .zip(segments)
                .enumerate()
                .map(|(i, (&p, &s))| TracePoint {
                    timestamp: Timestamp::from_secs(i as i64 * 300),
                    y_true: 100.0,
                    y_pred: p,
                    segment_id: s,
                })
                .collect(),
        )
    }

    fn preds(t: &PredictionTrace) -> Vec<f64> {
        t.points.iter().map(|p| p.y_pred).collect()
    }

    #[test]
    fn window_one_is_identity() {
        let t = trace(&[100.0, 130.0, 90.0], &[0, 0, 0]);
        assert_eq!(moving_average(&t, 1), t);
    }

    #[test]
    fn ramp_up_rule() {
        let t = trace(&[100.0, 110.0, 120.0, 130.0], &[0; 4]);
        assert_eq!(preds(&moving_average(&t, 3)), vec![100.0, 105.0, 110.0, 120.0]);
    }

    #[test]
    fn constant_predictions_unchanged() {
        let t = trace(&[120.0; 6], &[0, 0, 0, 1, 1, 1]);
        assert_eq!(moving_average(&t, 3), t);
        assert_eq!(exponential(&t, 0.5), t);
    }

    #[test]
    fn segments_never_mix() {
        let t = trace(&[100.0, 200.0, 50.0, 60.0], &[0, 0, 1, 1]);
        assert_eq!(preds(&moving_average(&t, 3)), vec![100.0, 150.0, 50.0, 55.0]);
        assert_eq!(preds(&exponential(&t, 0.5)), vec![100.0, 150.0, 50.0, 55.0]);
    }

    #[test]
    fn structure_is_preserved() {
        let t = trace(&[1.0, 5.0, 2.0, 8.0, 3.0], &[0, 0, 1, 1, 1]);
        let s = moving_average(&t, 3);
        assert_eq!(s.len(), t.len());
        for (a, b) in s.points.iter().zip(&t.points) {
            assert_eq!((a.timestamp, a.segment_id, a.y_true), (b.timestamp, b.segment_id, b.y_true));
        }
    }
}
