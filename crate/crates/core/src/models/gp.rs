//! Gaussian process regression with an inhomogeneous dot-product kernel.
//!
//! `k(x, x') = sigma0^2 + x . x'`. Because the kernel is linear in `x'`, the
//! posterior mean collapses to a linear predictor `w . x + b` with
//! `w = X' alpha` and `b = sigma0^2 * sum(alpha)`, which is what is stored.

use alloc::vec::Vec;

use super::{design_matrix, targets};
use crate::linalg::{Cholesky, Matrix};
use crate::math::dot;
use crate::preprocess::SampleWindow;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpConfig {
    /// Kernel inhomogeneity `sigma0^2`.
    pub sigma0_sq: f64,
    /// White-noise variance added to the diagonal.
    pub noise: f64,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            sigma0_sq: 1e-8,
            noise: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gp {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl GpConfig {
    pub fn kernel_matrix(&self, x: &Matrix) -> Matrix {
        let mut k = x.gram_rows();
        for v in k.as_mut_slice() {
            *v += self.sigma0_sq;
        }
        k
    }

    /// Solves `(K + noise I) alpha = y`.
    pub fn dual_coefficients(&self, x: &Matrix, y: &[f64]) -> Result<Vec<f64>> {
        if !(self.noise > 0.0) || !(self.sigma0_sq >= 0.0) {
            return Err(Error::InvalidArgument(alloc::format!(
                "gp needs noise > 0 and sigma0^2 >= 0, got {} and {}",
                self.noise,
                self.sigma0_sq
            )));
        }
        let mut k = self.kernel_matrix(x);
        k.add_diagonal(self.noise);
        Ok(Cholesky::factor(&k)?.solve(y))
    }

    pub fn fit(&self, train: &[SampleWindow]) -> Result<Gp> {
        let x = design_matrix(train)?;
        let alpha = self.dual_coefficients(&x, &targets(train))?;
        Ok(Gp {
            weights: x.tr_matvec(&alpha),
            bias: self.sigma0_sq * alpha.iter().sum::<f64>(),
        })
    }
}

impl Gp {
    pub fn predict_features(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::Timestamp;
    use alloc::vec;

    fn w(x: [f64; 3], y: f64) -> SampleWindow {
        SampleWindow {
            features: x.to_vec(),
            history: 1,
            target_prev: y,
            target_final: y,
            timestamp: Timestamp::from_secs(0),
            day_index: 0,
            segment_id: 0,
        }
    }

    #[test]
    fn linear_form_matches_kernel_form() {
        let cfg = GpConfig {
            sigma0_sq: 0.5,
            noise: 0.1,
        };
        let train = vec![
            w([1.0, 0.0, 2.0], 1.0),
            w([0.5, -1.0, 0.0], 0.2),
            w([-0.3, 0.4, 1.0], -0.7),
        ];
        let x = design_matrix(&train).unwrap();
        let alpha = cfg.dual_coefficients(&x, &targets(&train)).unwrap();
        let gp = cfg.fit(&train).unwrap();
        let q = [0.2, 0.9, -1.1];
        let kernel: f64 = (0..3).map(|i| alpha[i] * (cfg.sigma0_sq + dot(x.row(i), &q))).sum();
        assert!((gp.predict_features(&q) - kernel).abs() < 1e-12);
    }

    #[test]
    fn small_noise_nearly_interpolates() {
        let cfg = GpConfig {
            sigma0_sq: 1.0,
            noise: 1e-9,
        };
        let train = vec![w([1.0, 0.0, 0.0], 2.0), w([0.0, 1.0, 0.0], -1.0)];
        let gp = cfg.fit(&train).unwrap();
        assert!((gp.predict_features(&[1.0, 0.0, 0.0]) - 2.0).abs() < 1e-6);
        assert!((gp.predict_features(&[0.0, 1.0, 0.0]) + 1.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_non_positive_noise() {
        let cfg = GpConfig {
            sigma0_sq: 0.0,
            noise: 0.0,
        };
        assert!(cfg.fit(&[w([1.0, 0.0, 0.0], 1.0)]).is_err());
    }
}
