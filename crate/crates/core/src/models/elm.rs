//! Extreme learning machine: a fixed random sigmoid layer and a ridge readout.

use alloc::vec::Vec;

use super::{design_matrix, targets};
use crate::linalg::{solve_spd, Matrix};
use crate::math::{dot, sigmoid, sqrt};
use crate::preprocess::SampleWindow;
use crate::rng::SplitMix64;
use crate::{Error, Result};

/// How the ridge readout is solved. Both forms give the same weights; the
/// dual form is cheaper when there are more neurons than samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ElmSolve {
    #[default]
    Auto,
    /// `(H'H + l2 I) beta = H'y`
    Primal,
    /// `beta = H' (HH' + l2 I)^-1 y`
    Dual,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElmConfig {
    pub neurons: usize,
    pub l2: f64,
    pub seed: u64,
    pub solve: ElmSolve,
}

impl Default for ElmConfig {
    fn default() -> Self {
        Self {
            neurons: 100_000,
            l2: 500.0,
            seed: 0,
            solve: ElmSolve::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Elm {
    /// `neurons x inputs`
    pub input_weights: Matrix,
    pub biases: Vec<f64>,
    pub output_weights: Vec<f64>,
}

impl ElmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.neurons == 0 || !(self.l2 > 0.0) {
            return Err(Error::InvalidArgument(alloc::format!(
                "elm needs neurons > 0 and l2 > 0, got {} and {}",
                self.neurons,
                self.l2
            )));
        }
        Ok(())
    }

    /// Draws the random layer: weights `N(0, 1/d)`, biases `N(0, 1)`.
    pub fn random_layer(&self, inputs: usize) -> (Matrix, Vec<f64>) {
        let mut rng = SplitMix64::derive(self.seed, 0x0045_4c4d);
        let scale = 1.0 / sqrt(inputs as f64);
        let mut w = Matrix::zeros(self.neurons, inputs);
        for v in w.as_mut_slice() {
            *v = rng.normal() * scale;
        }
        let b = (0..self.neurons).map(|_| rng.normal()).collect();
        (w, b)
    }

    pub fn fit(&self, train: &[SampleWindow]) -> Result<Elm> {
        self.validate()?;
        let x = design_matrix(train)?;
        let y = targets(train);
        let (input_weights, biases) = self.random_layer(x.cols());
        let primal = match self.solve {
            ElmSolve::Primal => true,
            ElmSolve::Dual => false,
            ElmSolve::Auto => self.neurons <= x.rows(),
        };
        let output_weights = if primal {
            let h = hidden_matrix(&input_weights, &biases, &x);
            ridge_readout(&h, &y, self.l2, ElmSolve::Primal)?
        } else {
            streamed_dual(&input_weights, &biases, &x, &y, self.l2)?
        };
        Ok(Elm {
            input_weights,
            biases,
            output_weights,
        })
    }
}

/// Hidden activations, `samples x neurons`.
pub fn hidden_matrix(weights: &Matrix, biases: &[f64], x: &Matrix) -> Matrix {
    let mut h = Matrix::zeros(x.rows(), weights.rows());
    for i in 0..x.rows() {
        let xi = x.row(i);
        let hi = h.row_mut(i);
        for (k, out) in hi.iter_mut().enumerate() {
            *out = sigmoid(dot(weights.row(k), xi) + biases[k]);
        }
    }
    h
}

/// Dual ridge solve that never holds the full hidden matrix: `HH'` and
/// `H' alpha` are accumulated over blocks of neurons.
fn streamed_dual(weights: &Matrix, biases: &[f64], x: &Matrix, y: &[f64], l2: f64) -> Result<Vec<f64>> {
    const BLOCK: usize = 512;
    let n = x.rows();
    let neurons = weights.rows();
    let block_of = |start: usize| -> Result<Matrix> {
        let end = (start + BLOCK).min(neurons);
        let rows: Vec<f64> = weights.as_slice()[start * weights.cols()..end * weights.cols()].to_vec();
        let w = Matrix::from_vec(end - start, weights.cols(), rows)?;
        Ok(hidden_matrix(&w, &biases[start..end], x))
    };
    let mut gram = Matrix::zeros(n, n);
    for start in (0..neurons).step_by(BLOCK) {
        let g = block_of(start)?.gram_rows();
        for (a, b) in gram.as_mut_slice().iter_mut().zip(g.as_slice()) {
            *a += b;
        }
    }
    gram.add_diagonal(l2);
    let alpha = solve_spd(&gram, y)?;
    let mut beta = Vec::with_capacity(neurons);
    for start in (0..neurons).step_by(BLOCK) {
        beta.extend(block_of(start)?.tr_matvec(&alpha));
    }
    Ok(beta)
}

pub fn ridge_readout(h: &Matrix, y: &[f64], l2: f64, solve: ElmSolve) -> Result<Vec<f64>> {
    if h.rows() != y.len() {
        return Err(Error::LengthMismatch {
            what: "hidden rows vs targets",
            left: h.rows(),
            right: y.len(),
        });
    }
    let primal = match solve {
        ElmSolve::Primal => true,
        ElmSolve::Dual => false,
        ElmSolve::Auto => h.cols() <= h.rows(),
    };
    if primal {
        let mut a = h.gram_cols();
        a.add_diagonal(l2);
        solve_spd(&a, &h.tr_matvec(y))
    } else {
        let mut a = h.gram_rows();
        a.add_diagonal(l2);
        let alpha = solve_spd(&a, y)?;
        Ok(h.tr_matvec(&alpha))
    }
}

impl Elm {
    pub fn neurons(&self) -> usize {
        self.biases.len()
    }

    pub fn predict_features(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.neurons() {
            acc += self.output_weights[k] * sigmoid(dot(self.input_weights.row(k), x) + self.biases[k]);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn toy_h() -> (Matrix, Vec<f64>) {
        let h = Matrix::from_rows(&[
            vec![0.2, 0.7, 0.1],
            vec![0.9, 0.3, 0.4],
            vec![0.5, 0.5, 0.8],
            vec![0.1, 0.6, 0.3],
        ])
        .unwrap();
        (h, vec![1.0, -0.5, 0.3, 0.8])
    }

    #[test]
    fn primal_and_dual_agree() {
        let (h, y) = toy_h();
        let p = ridge_readout(&h, &y, 0.7, ElmSolve::Primal).unwrap();
        let d = ridge_readout(&h, &y, 0.7, ElmSolve::Dual).unwrap();
        for (a, b) in p.iter().zip(&d) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn readout_satisfies_normal_equations() {
        let (h, y) = toy_h();
        let beta = ridge_readout(&h, &y, 0.3, ElmSolve::Auto).unwrap();
        let resid: Vec<f64> = h.matvec(&beta).iter().zip(&y).map(|(p, t)| p - t).collect();
        let g = h.tr_matvec(&resid);
        for (gk, bk) in g.iter().zip(&beta) {
            assert!((gk + 0.3 * bk).abs() < 1e-12);
        }
    }

    #[test]
    fn larger_penalty_shrinks_weights() {
        let (h, y) = toy_h();
        let n = |l2| crate::linalg::norm(&ridge_readout(&h, &y, l2, ElmSolve::Auto).unwrap());
        assert!(n(10.0) < n(0.1));
    }

    #[test]
    fn streamed_dual_matches_dense_readout() {
        let c = ElmConfig {
            neurons: 700,
            l2: 2.0,
            seed: 3,
            solve: ElmSolve::Dual,
        };
        let mut rng = SplitMix64::new(9);
        let x = Matrix::from_vec(6, 4, (0..24).map(|_| rng.normal()).collect()).unwrap();
        let y: Vec<f64> = (0..6).map(|_| rng.normal()).collect();
        let (w, b) = c.random_layer(4);
        let dense = ridge_readout(&hidden_matrix(&w, &b, &x), &y, 2.0, ElmSolve::Primal).unwrap();
        let streamed = streamed_dual(&w, &b, &x, &y, 2.0).unwrap();
        for (a, b) in dense.iter().zip(&streamed) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn random_layer_is_seeded() {
        let c = ElmConfig {
            neurons: 8,
            ..ElmConfig::default()
        };
        assert_eq!(c.random_layer(3), c.random_layer(3));
        let other = ElmConfig { seed: 1, ..c };
        assert_ne!(c.random_layer(3), other.random_layer(3));
    }
}
