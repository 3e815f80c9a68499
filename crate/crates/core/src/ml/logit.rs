use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::scaler::Scaler;
use crate::{Error, Matrix, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogitParams {
    /// L2 penalty on the weights (the intercept is not penalised).
    pub l2: f64,
    pub max_iter: usize,
    /// Converged when no coefficient moves by this much in one step.
    pub tol: f64,
}

impl Default for LogitParams {
    fn default() -> Self {
        LogitParams {
            l2: 1e-4,
            max_iter: 100,
            tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LogitTrace {
    /// Penalised negative log-likelihood before the first step and after
    /// every accepted step.
    pub objective: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Logistic regression fitted by iteratively reweighted least squares.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Logit {
    pub scaler: Scaler,
    /// `[intercept, w_1, ..., w_p]` on the standardized scale.
    pub beta: Vec<f64>,
    pub trace: LogitTrace,
}

pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^t) without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn eta(z: &[f64], beta: &[f64]) -> f64 {
    beta[0] + z.iter().zip(&beta[1..]).map(|(a, b)| a * b).sum::<f64>()
}

impl Logit {
    /// Penalised negative log-likelihood of `beta` on design `z` (no
    /// intercept column; `beta[0]` is the intercept).
    pub fn objective(z: &Matrix, y: &[f64], beta: &[f64], l2: f64) -> f64 {
        let nll: f64 = z
            .rows()
            .zip(y)
            .map(|(row, &yi)| {
                let t = eta(row, beta);
                softplus(t) - yi * t
            })
            .sum();
        nll + 0.5 * l2 * beta[1..].iter().map(|w| w * w).sum::<f64>()
    }

    pub fn gradient(z: &Matrix, y: &[f64], beta: &[f64], l2: f64) -> Vec<f64> {
        let mut g = vec![0.0; beta.len()];
        for (row, &yi) in z.rows().zip(y) {
            let r = sigmoid(eta(row, beta)) - yi;
            g[0] += r;
            for (gj, zj) in g[1..].iter_mut().zip(row) {
                *gj += r * zj;
            }
        }
        for j in 1..beta.len() {
            g[j] += l2 * beta[j];
        }
        g
    }

    fn hessian(z: &Matrix, beta: &[f64], l2: f64) -> DMatrix<f64> {
        let q = beta.len();
        let mut h = DMatrix::<f64>::zeros(q, q);
        let mut zt = vec![1.0; q];
        for row in z.rows() {
            zt[1..].copy_from_slice(row);
            let p = sigmoid(eta(row, beta));
            let w = p * (1.0 - p);
            for j in 0..q {
                let wj = w * zt[j];
                for k in 0..=j {
                    h[(j, k)] += wj * zt[k];
                }
            }
        }
        for j in 0..q {
            for k in 0..j {
                h[(k, j)] = h[(j, k)];
            }
            if j > 0 {
                h[(j, j)] += l2;
            }
        }
        h
    }

    pub fn fit(x: &Matrix, y: &[f64], h: &LogitParams) -> Result<Self> {
        let scaler = Scaler::fit(x);
        let z = scaler.transform(x);
        let q = x.ncols() + 1;
        let mut beta = vec![0.0; q];
        let mut f = Self::objective(&z, y, &beta, h.l2);
        let mut trace = LogitTrace {
            objective: vec![f],
            ..Default::default()
        };
        for _ in 0..h.max_iter {
            let g = Self::gradient(&z, y, &beta, h.l2);
            let mut hess = Self::hessian(&z, &beta, h.l2);
            let step = loop {
                if let Some(c) = hess.clone().cholesky() {
                    break c.solve(&DVector::from_vec(g.clone()));
                }
                // Saturated probabilities can leave the intercept direction
                // without curvature; a little jitter restores definiteness.
                let bump = 1e-10 * (1.0 + hess.diagonal().amax());
                for j in 0..q {
                    hess[(j, j)] += bump;
                }
                if !hess.iter().all(|v| v.is_finite()) {
                    return Err(Error::Degenerate("logit Hessian is not finite".into()));
                }
            };
            // Step halving keeps the objective monotone.
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..60 {
                let cand: Vec<f64> = beta.iter().zip(step.iter()).map(|(b, s)| b - t * s).collect();
                let fc = Self::objective(&z, y, &cand, h.l2);
                if fc <= f {
                    accepted = Some((cand, fc));
                    break;
                }
                t *= 0.5;
            }
            trace.iterations += 1;
            let Some((cand, fc)) = accepted else {
                // No descent left at machine precision.
                trace.converged = true;
                break;
            };
            let moved = cand.iter().zip(&beta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            beta = cand;
            f = fc;
            trace.objective.push(f);
            if moved < h.tol {
                trace.converged = true;
                break;
            }
        }
        Ok(Logit { scaler, beta, trace })
    }

    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        let mut z = vec![0.0; x.ncols()];
        x.rows()
            .map(|row| {
                self.scaler.transform_row(row, &mut z);
                sigmoid(eta(&z, &self.beta))
            })
            .collect()
    }

    pub fn importance(&self) -> Vec<f64> {
        self.beta[1..].iter().map(|w| w.abs()).collect()
    }
}
