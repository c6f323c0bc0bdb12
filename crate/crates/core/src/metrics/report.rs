use alloc::vec::Vec;

use super::{cg_ega_classify, drmse, p_ega, r_ega, rate_of_change, rmse};
use super::{CgEgaLabel, EgaZone, GlycemicRegion, PredictionTrace};
use crate::time::Timestamp;
use crate::Result;

/// A prediction scored on both grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgaPoint {
    pub timestamp: Timestamp,
    pub y_true: f64,
    pub y_pred: f64,
    pub true_rate: f64,
    pub pred_rate: f64,
    pub p_zone: EgaZone,
    pub r_zone: EgaZone,
    pub region: GlycemicRegion,
    pub label: CgEgaLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RegionCounts {
    pub ap: usize,
    pub be: usize,
    pub ep: usize,
}

impl RegionCounts {
    pub fn total(&self) -> usize {
        self.ap + self.be + self.ep
    }

    fn add(&mut self, label: CgEgaLabel) {
        match label {
            CgEgaLabel::Ap => self.ap += 1,
            CgEgaLabel::Be => self.be += 1,
            CgEgaLabel::Ep => self.ep += 1,
        }
    }

    /// `(AP, BE, EP)` in percent, `None` when no point fell in the region.
    pub fn percentages(&self) -> Option<(f64, f64, f64)> {
        let n = self.total();
        (n > 0).then(|| {
            let pct = |k: usize| 100.0 * k as f64 / n as f64;
            (pct(self.ap), pct(self.be), pct(self.ep))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgEgaReport {
    pub rmse: f64,
    pub drmse: f64,
    pub overall: RegionCounts,
    pub hypo: RegionCounts,
    pub eu: RegionCounts,
    pub hyper: RegionCounts,
}

impl CgEgaReport {
    pub fn region(&self, region: GlycemicRegion) -> &RegionCounts {
        match region {
            GlycemicRegion::Hypo => &self.hypo,
            GlycemicRegion::Eu => &self.eu,
            GlycemicRegion::Hyper => &self.hyper,
        }
    }

    /// Overall AP rate in percent (0 when nothing was scored).
    pub fn ap_rate(&self) -> f64 {
        self.overall.percentages().map_or(0.0, |p| p.0)
    }
}

/// Scores every point that has a same-segment predecessor.
pub fn cg_ega_points(trace: &PredictionTrace) -> Vec<EgaPoint> {
    rate_of_change(trace)
        .into_iter()
        .map(|rp| {
            let pt = &trace.points[rp.index];
            let p_zone = p_ega(pt.y_true, pt.y_pred, rp.true_rate);
            let r_zone = r_ega(rp.true_rate, rp.pred_rate);
            let region = GlycemicRegion::of(pt.y_true);
            EgaPoint {
                timestamp: pt.timestamp,
                y_true: pt.y_true,
                y_pred: pt.y_pred,
                true_rate: rp.true_rate,
                pred_rate: rp.pred_rate,
                p_zone,
                r_zone,
                region,
                label: cg_ega_classify(p_zone, r_zone, region),
            }
        })
        .collect()
}

pub fn cg_ega_report(trace: &PredictionTrace) -> Result<CgEgaReport> {
    let rmse = rmse(trace)?;
    let drmse = drmse(trace)?;
    let mut report = CgEgaReport {
        rmse,
        drmse,
        overall: RegionCounts::default(),
        hypo: RegionCounts::default(),
        eu: RegionCounts::default(),
        hyper: RegionCounts::default(),
    };
    for p in cg_ega_points(trace) {
        report.overall.add(p.label);
        match p.region {
            GlycemicRegion::Hypo => report.hypo.add(p.label),
            GlycemicRegion::Eu => report.eu.add(p.label),
            GlycemicRegion::Hyper => report.hyper.add(p.label),
        }
    }
    Ok(report)
}
