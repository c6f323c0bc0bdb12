//! Point and rate error grids and their per-region combination.
//!
//! The point grid is the Clarke grid (x = reference, y = prediction, mg/dL):
//!
//! | zone | region |
//! |------|--------|
//! | uE   | x ≤ 70 and y ≥ 180 |
//! | lE   | x ≥ 180 and y ≤ 70 |
//! | uD   | x ≤ 70 and y > max(70, 1.2x) |
//! | lD   | x ≥ 240 and 70 < y < 180 |
//! | uC   | 70 < x ≤ 290 and y ≥ x + 110 |
//! | lC   | 130 ≤ x ≤ 180 and y ≤ 1.4x − 182 |
//! | A    | (x ≤ 70 and y ≤ 70) or 0.8x ≤ y ≤ 1.2x |
//! | B    | everything else |
//!
//! For the continuous version the A/B limits widen with the reference rate of
//! change `r`: by 10 mg/dL when 1 ≤ |r| ≤ 2 mg/dL/min and by 20 mg/dL when
//! |r| > 2. Falling glucose widens the upper limits (the A upper bounds and
//! the B/uC, B/uD borders), rising glucose the lower ones (the A lower bound
//! and the B/lC, B/lD borders). E borders never move.
//!
//! The rate grid (x = reference rate, y = predicted rate, mg/dL/min):
//!
//! | zone | region |
//! |------|--------|
//! | A    | \|y − x\| ≤ 1 |
//! | uC   | −1 ≤ x ≤ 1 and y > x + 2 |
//! | lC   | −1 ≤ x ≤ 1 and y < x − 2 |
//! | uD   | −1 ≤ y ≤ 1 and y > x + 2 |
//! | lD   | −1 ≤ y ≤ 1 and y < x − 2 |
//! | uE   | x < −1 and y > 1 |
//! | lE   | x > 1 and y < −1 |
//! | B    | everything else |

/// Hypoglycemia: reference glucose at or below this, mg/dL.
pub const HYPO_THRESHOLD: f64 = 70.0;
/// Hyperglycemia: reference glucose at or above this, mg/dL.
pub const HYPER_THRESHOLD: f64 = 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EgaZone {
    A,
    B,
    UpperC,
    LowerC,
    UpperD,
    LowerD,
    UpperE,
    LowerE,
}

impl EgaZone {
    pub const ALL: [EgaZone; 8] = [
        EgaZone::A,
        EgaZone::B,
        EgaZone::UpperC,
        EgaZone::LowerC,
        EgaZone::UpperD,
        EgaZone::LowerD,
        EgaZone::UpperE,
        EgaZone::LowerE,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EgaZone::A => "A",
            EgaZone::B => "B",
            EgaZone::UpperC => "uC",
            EgaZone::LowerC => "lC",
            EgaZone::UpperD => "uD",
            EgaZone::LowerD => "lD",
            EgaZone::UpperE => "uE",
            EgaZone::LowerE => "lE",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|z| z.as_str() == s)
    }

    pub fn is_accurate(self) -> bool {
        matches!(self, EgaZone::A | EgaZone::B)
    }

    fn is_c_or_d(self) -> bool {
        matches!(
            self,
            EgaZone::UpperC | EgaZone::LowerC | EgaZone::UpperD | EgaZone::LowerD
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GlycemicRegion {
    Hypo,
    Eu,
    Hyper,
}

impl GlycemicRegion {
    pub const ALL: [GlycemicRegion; 3] = [GlycemicRegion::Hypo, GlycemicRegion::Eu, GlycemicRegion::Hyper];

    pub fn of(y_true: f64) -> Self {
        if y_true <= HYPO_THRESHOLD {
            GlycemicRegion::Hypo
        } else if y_true >= HYPER_THRESHOLD {
            GlycemicRegion::Hyper
        } else {
            GlycemicRegion::Eu
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GlycemicRegion::Hypo => "hypo",
            GlycemicRegion::Eu => "eu",
            GlycemicRegion::Hyper => "hyper",
        }
    }
}

/// Accurate prediction, benign error, erroneous prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CgEgaLabel {
    Ap,
    Be,
    Ep,
}

impl CgEgaLabel {
    pub const ALL: [CgEgaLabel; 3] = [CgEgaLabel::Ap, CgEgaLabel::Be, CgEgaLabel::Ep];

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.as_str() == s)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CgEgaLabel::Ap => "AP",
            CgEgaLabel::Be => "BE",
            CgEgaLabel::Ep => "EP",
        }
    }
}

/// Widening of the A/B limits for a reference rate of change.
fn rate_allowance(rate: f64) -> f64 {
    let r = rate.abs();
    if r > 2.0 {
        20.0
    } else if r >= 1.0 {
        10.0
    } else {
        0.0
    }
}

/// Point-error zone of a prediction given the reference rate (mg/dL/min).
pub fn p_ega(y_true: f64, y_pred: f64, true_rate: f64) -> EgaZone {
    let (x, y) = (y_true, y_pred);
    let allowance = rate_allowance(true_rate);
    let up = if true_rate < 0.0 { allowance } else { 0.0 };
    let lo = if true_rate > 0.0 { allowance } else { 0.0 };

    if x <= 70.0 && y >= 180.0 {
        EgaZone::UpperE
    } else if x >= 180.0 && y <= 70.0 {
        EgaZone::LowerE
    } else if x <= 70.0 && y > (1.2 * x).max(70.0) + up {
        EgaZone::UpperD
    } else if x >= 240.0 && y > 70.0 && y < 180.0 - lo {
        EgaZone::LowerD
    } else if x > 70.0 && x <= 290.0 && y >= x + 110.0 + up {
        EgaZone::UpperC
    } else if (130.0..=180.0).contains(&x) && y <= 1.4 * x - 182.0 - lo {
        EgaZone::LowerC
    } else if (x <= 70.0 && y <= 70.0 + up) || (y >= 0.8 * x - lo && y <= 1.2 * x + up) {
        EgaZone::A
    } else {
        EgaZone::B
    }
}

/// Rate-error zone of a predicted rate against the reference rate.
pub fn r_ega(true_rate: f64, pred_rate: f64) -> EgaZone {
    let (x, y) = (true_rate, pred_rate);
    let flat = |v: f64| (-1.0..=1.0).contains(&v);
    if (y - x).abs() <= 1.0 {
        EgaZone::A
    } else if x < -1.0 && y > 1.0 {
        EgaZone::UpperE
    } else if x > 1.0 && y < -1.0 {
        EgaZone::LowerE
    } else if flat(x) && y > x + 2.0 {
        EgaZone::UpperC
    } else if flat(x) && y < x - 2.0 {
        EgaZone::LowerC
    } else if flat(y) && y > x + 2.0 {
        EgaZone::UpperD
    } else if flat(y) && y < x - 2.0 {
        EgaZone::LowerD
    } else {
        EgaZone::B
    }
}

/// Combines point and rate zones for the reference's glycemic region.
///
/// Accurate in both grids is AP everywhere. A point-accurate prediction with
/// a C/D rate error is benign, except in hypoglycemia where only C rate
/// errors stay benign (missing a fast fall there is dangerous). Every other
/// combination, including any point error beyond B, is erroneous.
pub fn cg_ega_classify(p: EgaZone, r: EgaZone, region: GlycemicRegion) -> CgEgaLabel {
    if p.is_accurate() && r.is_accurate() {
        return CgEgaLabel::Ap;
    }
    if !p.is_accurate() {
        return CgEgaLabel::Ep;
    }
    let benign = match region {
        GlycemicRegion::Hypo => matches!(r, EgaZone::UpperC | EgaZone::LowerC),
        GlycemicRegion::Eu | GlycemicRegion::Hyper => r.is_c_or_d(),
    };
    if benign {
        CgEgaLabel::Be
    } else {
        CgEgaLabel::Ep
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use EgaZone::*;

    #[test]
    fn point_grid_examples() {
        assert_eq!(p_ega(100.0, 100.0, 0.0), A);
        assert_eq!(p_ega(200.0, 70.0, 0.0), LowerE);
        assert_eq!(p_ega(100.0, 115.0, 0.0), A);
        assert_eq!(p_ega(50.0, 200.0, 0.0), UpperE);
        assert_eq!(p_ega(50.0, 100.0, 0.0), UpperD);
        assert_eq!(p_ega(300.0, 150.0, 0.0), LowerD);
        assert_eq!(p_ega(100.0, 220.0, 0.0), UpperC);
        assert_eq!(p_ega(170.0, 50.0, 0.0), LowerC);
        assert_eq!(p_ega(100.0, 130.0, 0.0), B);
        assert_eq!(p_ega(60.0, 65.0, 0.0), A);
    }

    #[test]
    fn falling_reference_widens_upper_limits() {
        // 125 is 25% above 100: B when flat, A when falling fast.
        assert_eq!(p_ega(100.0, 125.0, 0.0), B);
        assert_eq!(p_ega(100.0, 125.0, -1.5), A);
        assert_eq!(p_ega(100.0, 125.0, 1.5), B);
        // uD border moves up by 20 for a fast fall.
        assert_eq!(p_ega(50.0, 85.0, 0.0), UpperD);
        assert_eq!(p_ega(50.0, 85.0, -3.0), A);
    }

    #[test]
    fn rising_reference_widens_lower_limits() {
        assert_eq!(p_ega(100.0, 75.0, 0.0), B);
        assert_eq!(p_ega(100.0, 75.0, 1.0), A);
        assert_eq!(p_ega(300.0, 170.0, 0.0), LowerD);
        assert_eq!(p_ega(300.0, 170.0, 2.5), B);
    }

    #[test]
    fn rate_grid_examples() {
        assert_eq!(r_ega(0.0, 0.0), A);
        assert_eq!(r_ega(1.0, 1.0), A);
        assert_eq!(r_ega(-2.0, 2.0), UpperE);
        assert_eq!(r_ega(2.0, -2.0), LowerE);
        assert_eq!(r_ega(0.0, 2.5), UpperC);
        assert_eq!(r_ega(0.0, -2.5), LowerC);
        assert_eq!(r_ega(-3.0, 0.0), UpperD);
        assert_eq!(r_ega(3.0, 0.0), LowerD);
        assert_eq!(r_ega(1.0, 2.5), B);
    }

    #[test]
    fn combination_rules() {
        use CgEgaLabel::*;
        use GlycemicRegion::*;
        assert_eq!(cg_ega_classify(A, A, Eu), Ap);
        assert_eq!(cg_ega_classify(A, B, Hypo), Ap);
        assert_eq!(cg_ega_classify(B, UpperE, Eu), Ep);
        assert_eq!(cg_ega_classify(B, UpperC, Eu), Be);
        assert_eq!(cg_ega_classify(A, UpperD, Hyper), Be);
        assert_eq!(cg_ega_classify(A, LowerC, Hypo), Be);
        assert_eq!(cg_ega_classify(A, UpperD, Hypo), Ep);
        assert_eq!(cg_ega_classify(UpperC, A, Eu), Ep);
    }

    #[test]
    fn region_thresholds_are_inclusive() {
        assert_eq!(GlycemicRegion::of(70.0), GlycemicRegion::Hypo);
        assert_eq!(GlycemicRegion::of(70.1), GlycemicRegion::Eu);
        assert_eq!(GlycemicRegion::of(180.0), GlycemicRegion::Hyper);
    }
}
