use super::TwoStepPrediction;
use crate::{Error, Result};

/// Mean squared error.
pub fn loss_mse(preds: &[f64], targets: &[f64]) -> Result<f64> {
    check_lengths(preds.len(), targets.len())?;
    let mut sum = 0.0;
    for (p, y) in preds.iter().zip(targets) {
        let e = y - p;
        sum += e * e;
    }
    Ok(sum / preds.len() as f64)
}

/// Coherence-penalized MSE with `targets[i] = (y_prev, y_final)`.
///
/// `(1/n) Σ (y_final - ŷ_final)² + c (Δy - Δŷ)²` where `Δ = final - prev`.
/// With `c = 0` the result is bit-identical to [`loss_mse`] on the final
/// components.
pub fn loss_cmse(preds: &[TwoStepPrediction], targets: &[(f64, f64)], coherence: f64) -> Result<f64> {
    CmseLoss::new(coherence).value(preds, targets)
}

/// The cMSE objective. `both_steps` also penalizes the point error at
/// `t + PH - 1`; it is off by default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CmseLoss {
    pub coherence: f64,
    pub both_steps: bool,
}

impl CmseLoss {
    pub fn new(coherence: f64) -> Self {
        Self {
            coherence,
            both_steps: false,
        }
    }

    pub fn value(&self, preds: &[TwoStepPrediction], targets: &[(f64, f64)]) -> Result<f64> {
        check_lengths(preds.len(), targets.len())?;
        if !(self.coherence >= 0.0) {
            return Err(Error::InvalidArgument(alloc::format!(
                "coherence factor {} must be >= 0",
                self.coherence
            )));
        }
        let mut sum = 0.0;
        for (p, t) in preds.iter().zip(targets) {
            sum += self.term(p, *t);
        }
        Ok(sum / preds.len() as f64)
    }

    #[inline]
    pub(crate) fn term(&self, p: &TwoStepPrediction, (y_prev, y_final): (f64, f64)) -> f64 {
        let e = y_final - p.horizon;
        let d = (y_final - y_prev) - (p.horizon - p.prev);
        let mut term = e * e + self.coherence * d * d;
        if self.both_steps {
            let e_prev = y_prev - p.prev;
            term += e_prev * e_prev;
        }
        term
    }

    /// `(∂/∂ŷ_prev, ∂/∂ŷ_final)` of one sample's term, scaled by `scale`.
    #[inline]
    pub(crate) fn term_gradient(
        &self,
        p: &TwoStepPrediction,
        (y_prev, y_final): (f64, f64),
        scale: f64,
    ) -> (f64, f64) {
        let e = y_final - p.horizon;
        let d = (y_final - y_prev) - (p.horizon - p.prev);
        let mut d_prev = 2.0 * self.coherence * d;
        let d_final = -2.0 * e - 2.0 * self.coherence * d;
        if self.both_steps {
            d_prev -= 2.0 * (y_prev - p.prev);
        }
        (d_prev * scale, d_final * scale)
    }
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch {
            what: "predictions vs targets",
            left: a,
            right: b,
        });
    }
    if a == 0 {
        return Err(Error::EmptyInput("loss over zero samples"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn tsp(prev: f64, horizon: f64) -> TwoStepPrediction {
        TwoStepPrediction { prev, horizon }
    }

    #[test]
    fn mse_examples() {
        assert_eq!(loss_mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(loss_mse(&[1.0, 4.0], &[1.0, 2.0]).unwrap(), 2.0);
        assert_eq!(loss_mse(&[0.0], &[3.0]).unwrap(), 9.0);
        assert!(matches!(
            loss_mse(&[1.0], &[1.0, 2.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn cmse_hand_computed() {
        let v = loss_cmse(&[tsp(105.0, 105.0)], &[(100.0, 110.0)], 2.0).unwrap();
        assert_eq!(v, 225.0);
    }

    #[test]
    fn cmse_perfect_is_zero() {
        let p = vec![tsp(1.0, 2.0), tsp(-3.0, 0.5)];
        let t = vec![(1.0, 2.0), (-3.0, 0.5)];
        for c in [0.0, 1.0, 2.0, 10.0] {
            assert_eq!(loss_cmse(&p, &t, c).unwrap(), 0.0);
        }
    }

    #[test]
    fn cmse_rejects_negative_coherence_and_mismatch() {
        assert!(loss_cmse(&[tsp(0.0, 0.0)], &[(0.0, 0.0)], -1.0).is_err());
        assert!(loss_cmse(&[tsp(0.0, 0.0)], &[], 1.0).is_err());
    }

    #[test]
    fn both_steps_variant_adds_previous_error() {
        let loss = CmseLoss {
            coherence: 0.0,
            both_steps: true,
        };
        let v = loss.value(&[tsp(1.0, 2.0)], &[(0.0, 2.0)]).unwrap();
        assert_eq!(v, 1.0);
    }
}
