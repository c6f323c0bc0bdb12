//! Epsilon-insensitive support vector regression with an RBF kernel, solved
//! by SMO with second-order working-set selection.
//!
//! The dual is written over `2n` variables `a = [alpha; alpha*]` with signs
//! `s = [+1; -1]`:
//!
//! ```text
//! min 1/2 a'Qa + p'a   s.t.  s'a = 0,  0 <= a <= C
//! Q_ij = s_i s_j K(i mod n, j mod n),  p = [eps - y; eps + y]
//! ```

use alloc::vec;
use alloc::vec::Vec;

use super::{design_matrix, targets};
use crate::linalg::Matrix;
use crate::math::{exp, squared_distance};
use crate::preprocess::SampleWindow;
use crate::{Error, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvrConfig {
    pub gamma: f64,
    pub epsilon: f64,
    pub c: f64,
    /// Stopping tolerance on the maximal KKT violation.
    pub tolerance: f64,
    /// Iteration cap; `None` means `max(10^7, 100 * 2n)`.
    pub max_iterations: Option<usize>,
}

impl Default for SvrConfig {
    fn default() -> Self {
        Self {
            gamma: 5e-4,
            epsilon: 0.1,
            c: 50.0,
            tolerance: 1e-3,
            max_iterations: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvrSolution {
    pub alpha: Vec<f64>,
    pub alpha_star: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    /// Dual objective `1/2 a'Qa + p'a` at the solution.
    pub objective: f64,
}

impl SvrSolution {
    /// `alpha_i - alpha*_i`.
    pub fn coefficients(&self) -> Vec<f64> {
        self.alpha.iter().zip(&self.alpha_star).map(|(a, b)| a - b).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Svr {
    pub gamma: f64,
    /// Support vectors, one per row.
    pub support: Matrix,
    pub coefficients: Vec<f64>,
    pub bias: f64,
}

pub fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    exp(-gamma * squared_distance(a, b))
}

pub fn rbf_kernel_matrix(gamma: f64, x: &Matrix) -> Matrix {
    let n = x.rows();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = rbf(gamma, x.row(i), x.row(j));
            k.row_mut(i)[j] = v;
            k.row_mut(j)[i] = v;
        }
    }
    k
}

impl SvrConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !(self.epsilon >= 0.0) || !(self.c > 0.0) || !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument(alloc::format!(
                "invalid svr config: gamma {}, epsilon {}, C {}, tol {}",
                self.gamma,
                self.epsilon,
                self.c,
                self.tolerance
            )));
        }
        Ok(())
    }

    pub fn fit(&self, train: &[SampleWindow]) -> Result<Svr> {
        self.validate()?;
        let x = design_matrix(train)?;
        let k = rbf_kernel_matrix(self.gamma, &x);
        let sol = solve_svr_dual(&k, &targets(train), self)?;
        let coef = sol.coefficients();
        let keep: Vec<usize> = (0..coef.len()).filter(|&i| coef[i] != 0.0).collect();
        let mut support = Vec::with_capacity(keep.len() * x.cols());
        for &i in &keep {
            support.extend_from_slice(x.row(i));
        }
        Ok(Svr {
            gamma: self.gamma,
            support: Matrix::from_vec(keep.len(), x.cols(), support)?,
            coefficients: keep.iter().map(|&i| coef[i]).collect(),
            bias: sol.bias,
        })
    }
}

impl Svr {
    pub fn predict_features(&self, x: &[f64]) -> f64 {
        let mut acc = self.bias;
        for (i, c) in self.coefficients.iter().enumerate() {
            acc += c * rbf(self.gamma, self.support.row(i), x);
        }
        acc
    }
}

/// Solves the SVR dual for a precomputed kernel matrix.
pub fn solve_svr_dual(kernel: &Matrix, y: &[f64], config: &SvrConfig) -> Result<SvrSolution> {
    config.validate()?;
    let n = y.len();
    if n == 0 {
        return Err(Error::EmptyInput("svr targets"));
    }
    if kernel.rows() != n || kernel.cols() != n {
        return Err(Error::LengthMismatch {
            what: "kernel size vs targets",
            left: kernel.rows(),
            right: n,
        });
    }
    let l = 2 * n;
    let c = config.c;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let kij = |i: usize, j: usize| kernel.as_slice()[(i % n) * n + (j % n)];
    let p: Vec<f64> = (0..l)
        .map(|t| if t < n { config.epsilon - y[t] } else { config.epsilon + y[t - n] })
        .collect();
    let mut a = vec![0.0; l];
    let mut g = p.clone();
    let max_iter = config.max_iterations.unwrap_or_else(|| (100 * l).max(10_000_000));
    let upper = |v: f64| v >= c;
    let lower = |v: f64| v <= 0.0;

    let mut iterations = 0;
    loop {
        // Maximal violating pair with second-order selection of j.
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..l {
            let v = if sign(t) > 0.0 {
                if upper(a[t]) { continue } else { -g[t] }
            } else if lower(a[t]) {
                continue;
            } else {
                g[t]
            };
            if v >= gmax {
                gmax = v;
                i_sel = t;
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = usize::MAX;
        let mut best = f64::INFINITY;
        if i_sel != usize::MAX {
            let i = i_sel;
            for t in 0..l {
                let (admissible, v) = if sign(t) > 0.0 {
                    (!lower(a[t]), g[t])
                } else {
                    (!upper(a[t]), -g[t])
                };
                if !admissible {
                    continue;
                }
                gmax2 = gmax2.max(v);
                let grad_diff = gmax + v;
                if grad_diff > 0.0 {
                    let quad = kij(i, i) + kij(t, t) - 2.0 * kij(i, t);
                    let quad = if quad > 0.0 { quad } else { TAU };
                    let obj = -(grad_diff * grad_diff) / quad;
                    if obj <= best {
                        best = obj;
                        j_sel = t;
                    }
                }
            }
        }
        let violation = gmax + gmax2;
        if violation < config.tolerance || j_sel == usize::MAX {
            break;
        }
        if iterations >= max_iter {
            return Err(Error::NotConverged { iterations, violation });
        }
        iterations += 1;

        let (i, j) = (i_sel, j_sel);
        let (yi, yj) = (sign(i), sign(j));
        let qij = yi * yj * kij(i, j);
        let (old_i, old_j) = (a[i], a[j]);
        if yi != yj {
            let quad = kij(i, i) + kij(j, j) + 2.0 * qij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (-g[i] - g[j]) / quad;
            let diff = a[i] - a[j];
            a[i] += delta;
            a[j] += delta;
            if diff > 0.0 {
                if a[j] < 0.0 {
                    a[j] = 0.0;
                    a[i] = diff;
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = -diff;
            }
            if diff > 0.0 {
                if a[i] > c {
                    a[i] = c;
                    a[j] = c - diff;
                }
            } else if a[j] > c {
                a[j] = c;
                a[i] = c + diff;
            }
        } else {
            let quad = kij(i, i) + kij(j, j) - 2.0 * qij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (g[i] - g[j]) / quad;
            let sum = a[i] + a[j];
            a[i] -= delta;
            a[j] += delta;
            if sum > c {
                if a[i] > c {
                    a[i] = c;
                    a[j] = sum - c;
                }
            } else if a[j] < 0.0 {
                a[j] = 0.0;
                a[i] = sum;
            }
            if sum > c {
                if a[j] > c {
                    a[j] = c;
                    a[i] = sum - c;
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = sum;
            }
        }
        let (di, dj) = (a[i] - old_i, a[j] - old_j);
        for t in 0..l {
            let st = sign(t);
            g[t] += st * (yi * kij(t, i) * di + yj * kij(t, j) * dj);
        }
    }

    // Bias from the free variables, or the midpoint of the feasible range.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..l {
        let yg = sign(t) * g[t];
        if upper(a[t]) {
            if sign(t) < 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else if lower(a[t]) {
            if sign(t) > 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 { sum_free / free as f64 } else { (ub + lb) / 2.0 };
    let objective = (0..l).map(|t| a[t] * (g[t] + p[t])).sum::<f64>() / 2.0;

    let mut alpha = a[..n].to_vec();
    let mut alpha_star = a[n..].to_vec();
    // At an exact optimum at most one of each pair is non-zero; remove the
    // common part left by the finite tolerance (the coefficient is unchanged).
    for (x, y) in alpha.iter_mut().zip(alpha_star.iter_mut()) {
        let m = x.min(*y);
        *x -= m;
        *y -= m;
    }
    Ok(SvrSolution {
        alpha,
        alpha_star,
        bias: -rho,
        iterations,
        objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn problem(n: usize, seed: u64) -> (Matrix, Vec<f64>) {
        let mut rng = SplitMix64::new(seed);
        let x = Matrix::from_vec(n, 2, (0..2 * n).map(|_| rng.uniform(-2.0, 2.0)).collect()).unwrap();
        let y = (0..n).map(|i| crate::math::sin(x.row(i)[0]) + 0.3 * x.row(i)[1]).collect();
        (x, y)
    }

    #[test]
    fn solution_is_feasible_and_sparse_in_pairs() {
        let (x, y) = problem(40, 1);
        let cfg = SvrConfig {
            gamma: 0.5,
            epsilon: 0.1,
            c: 5.0,
            ..SvrConfig::default()
        };
        let sol = solve_svr_dual(&rbf_kernel_matrix(cfg.gamma, &x), &y, &cfg).unwrap();
        let sum: f64 = sol.coefficients().iter().sum();
        assert!(sum.abs() < 1e-9);
        for (a, b) in sol.alpha.iter().zip(&sol.alpha_star) {
            assert!((0.0..=cfg.c).contains(a) && (0.0..=cfg.c).contains(b));
            assert!(a * b == 0.0);
        }
    }

    #[test]
    fn free_support_vectors_sit_on_the_tube() {
        let (x, y) = problem(40, 2);
        let cfg = SvrConfig {
            gamma: 0.5,
            epsilon: 0.1,
            c: 5.0,
            tolerance: 1e-6,
            ..SvrConfig::default()
        };
        let k = rbf_kernel_matrix(cfg.gamma, &x);
        let sol = solve_svr_dual(&k, &y, &cfg).unwrap();
        let coef = sol.coefficients();
        for i in 0..y.len() {
            let f: f64 = (0..y.len()).map(|j| coef[j] * k[(i, j)]).sum::<f64>() + sol.bias;
            let r = y[i] - f;
            if sol.alpha[i] > 1e-9 && sol.alpha[i] < cfg.c - 1e-9 {
                assert!((r - cfg.epsilon).abs() < 1e-4, "residual {r}");
            }
            if coef[i] == 0.0 {
                assert!(r.abs() <= cfg.epsilon + 1e-4);
            }
        }
    }

    #[test]
    fn wide_tube_gives_constant_model() {
        let (x, y) = problem(10, 3);
        let cfg = SvrConfig {
            gamma: 0.5,
            epsilon: 100.0,
            ..SvrConfig::default()
        };
        let sol = solve_svr_dual(&rbf_kernel_matrix(cfg.gamma, &x), &y, &cfg).unwrap();
        assert!(sol.coefficients().iter().all(|c| *c == 0.0));
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let (x, y) = problem(30, 4);
        let cfg = SvrConfig {
            gamma: 0.5,
            epsilon: 0.01,
            c: 5.0,
            max_iterations: Some(1),
            ..SvrConfig::default()
        };
        let err = solve_svr_dual(&rbf_kernel_matrix(cfg.gamma, &x), &y, &cfg).unwrap_err();
        assert!(matches!(err, Error::NotConverged { iterations: 1, .. }));
    }
}
