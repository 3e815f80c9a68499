//! Support vector classification and ε-regression trained by sequential
//! minimal optimisation with second-order working-set selection.

use std::collections::{HashMap, VecDeque};
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use super::logit::sigmoid;
use super::scaler::Scaler;
use crate::{Error, Matrix, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    Linear,
    /// `exp(-γ‖a−b‖²)`; `None` resolves to 1/p at fit time.
    Rbf { gamma: Option<f64> },
}

impl Kernel {
    fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma.unwrap_or(1.0) * d).exp()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub c: f64,
    /// Stopping tolerance on the maximal KKT violation.
    pub tol: f64,
    /// Iteration cap, in multiples of the number of dual variables.
    pub max_passes: usize,
    pub kernel: Kernel,
    /// Width of the insensitive tube for regression.
    pub epsilon: f64,
    pub cache_mb: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            tol: 1e-3,
            max_passes: 200,
            kernel: Kernel::Linear,
            epsilon: 0.01,
            cache_mb: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmReport {
    pub iterations: usize,
    pub converged: bool,
    /// Maximal KKT violation `m(α) − M(α)` at exit, recomputed from a fresh
    /// gradient rather than the incrementally updated one.
    pub kkt_gap: f64,
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Svm {
    pub kernel: Kernel,
    pub classification: bool,
    pub scaler: Scaler,
    /// Standardized support vectors.
    pub support: Matrix,
    pub coef: Vec<f64>,
    pub rho: f64,
    pub report: SvmReport,
}

/// `Q_kl = s_k s_l K(x_{r(k)}, x_{r(l)})` where dual variable k refers to
/// sample r(k) = k mod n with sign s_k.
struct QMatrix<'a> {
    z: &'a Matrix,
    kernel: Kernel,
    sign: Vec<f64>,
    diag: Vec<f64>,
    cache: HashMap<usize, Rc<Vec<f64>>>,
    fifo: VecDeque<usize>,
    capacity: usize,
}

impl<'a> QMatrix<'a> {
    fn new(z: &'a Matrix, kernel: Kernel, sign: Vec<f64>, cache_mb: usize) -> Self {
        let n = z.nrows();
        let diag = (0..sign.len())
            .map(|k| {
                let r = z.row(k % n);
                kernel.eval(r, r)
            })
            .collect();
        let capacity = ((cache_mb << 20) / (8 * n.max(1))).max(2);
        QMatrix {
            z,
            kernel,
            sign,
            diag,
            cache: HashMap::new(),
            fifo: VecDeque::new(),
            capacity,
        }
    }

    /// Kernel row of sample `r` against every sample.
    fn kernel_row(&mut self, r: usize) -> Rc<Vec<f64>> {
        if let Some(row) = self.cache.get(&r) {
            return Rc::clone(row);
        }
        let a = self.z.row(r);
        let row: Rc<Vec<f64>> = Rc::new(self.z.rows().map(|b| self.kernel.eval(a, b)).collect());
        if self.fifo.len() >= self.capacity {
            if let Some(old) = self.fifo.pop_front() {
                self.cache.remove(&old);
            }
        }
        self.fifo.push_back(r);
        self.cache.insert(r, Rc::clone(&row));
        row
    }

    /// Row k of Q over all dual variables.
    fn row(&mut self, k: usize, out: &mut [f64]) {
        let n = self.z.nrows();
        let kr = self.kernel_row(k % n);
        let sk = self.sign[k];
        for (l, o) in out.iter_mut().enumerate() {
            *o = sk * self.sign[l] * kr[l % n];
        }
    }
}

struct Solution {
    alpha: Vec<f64>,
    rho: f64,
    iterations: usize,
    converged: bool,
    kkt_gap: f64,
}

const TAU: f64 = 1e-12;

/// Minimises `½αᵀQα + pᵀα` subject to `yᵀα = 0`, `0 ≤ α ≤ C`.
fn solve(q: &mut QMatrix, p: &[f64], c: f64, tol: f64, max_iter: usize) -> Solution {
    let l = p.len();
    let y = q.sign.clone();
    let mut alpha = vec![0.0; l];
    let mut g = p.to_vec();
    let mut qi = vec![0.0; l];
    let mut qj = vec![0.0; l];
    let is_upper = |a: f64| a >= c;
    let is_lower = |a: f64| a <= 0.0;

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        // Maximal violating pair, second-order choice of j.
        let mut gmax = f64::NEG_INFINITY;
        let mut gmax_idx = None;
        for t in 0..l {
            if y[t] > 0.0 {
                if !is_upper(alpha[t]) && -g[t] >= gmax {
                    gmax = -g[t];
                    gmax_idx = Some(t);
                }
            } else if !is_lower(alpha[t]) && g[t] >= gmax {
                gmax = g[t];
                gmax_idx = Some(t);
            }
        }
        let Some(i) = gmax_idx else {
            converged = true;
            break;
        };
        q.row(i, &mut qi);
        let mut gmax2 = f64::NEG_INFINITY;
        let mut gmin_idx = None;
        let mut obj_min = f64::INFINITY;
        for t in 0..l {
            let (grad_diff, quad) = if y[t] > 0.0 {
                if is_lower(alpha[t]) {
                    continue;
                }
                gmax2 = gmax2.max(g[t]);
                (gmax + g[t], q.diag[i] + q.diag[t] - 2.0 * y[i] * qi[t])
            } else {
                if is_upper(alpha[t]) {
                    continue;
                }
                gmax2 = gmax2.max(-g[t]);
                (gmax - g[t], q.diag[i] + q.diag[t] + 2.0 * y[i] * qi[t])
            };
            if grad_diff > 0.0 {
                let obj = -(grad_diff * grad_diff) / if quad > 0.0 { quad } else { TAU };
                if obj <= obj_min {
                    obj_min = obj;
                    gmin_idx = Some(t);
                }
            }
        }
        let Some(j) = gmin_idx.filter(|_| gmax + gmax2 >= tol) else {
            converged = true;
            break;
        };
        iterations += 1;
        q.row(j, &mut qj);

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (q.diag[i] + q.diag[j] + 2.0 * qi[j]).max(TAU);
            let delta = (-g[i] - g[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (q.diag[i] + q.diag[j] - 2.0 * qi[j]).max(TAU);
            let delta = (g[i] - g[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..l {
            g[t] += qi[t] * di + qj[t] * dj;
        }
    }

    // Fresh gradient for the exit report and the offset.
    let mut fresh = p.to_vec();
    for k in 0..l {
        if alpha[k] != 0.0 {
            q.row(k, &mut qi);
            for t in 0..l {
                fresh[t] += qi[t] * alpha[k];
            }
        }
    }
    let (mut up, mut low) = (f64::NEG_INFINITY, f64::INFINITY);
    for t in 0..l {
        let yg = -y[t] * fresh[t];
        let in_up = (y[t] > 0.0 && !is_upper(alpha[t])) || (y[t] < 0.0 && !is_lower(alpha[t]));
        let in_low = (y[t] > 0.0 && !is_lower(alpha[t])) || (y[t] < 0.0 && !is_upper(alpha[t]));
        if in_up {
            up = up.max(yg);
        }
        if in_low {
            low = low.min(yg);
        }
    }
    let kkt_gap = if up.is_finite() && low.is_finite() { (up - low).max(0.0) } else { 0.0 };

    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut n_free, mut sum_free) = (0usize, 0.0);
    for t in 0..l {
        let yg = y[t] * fresh[t];
        if is_upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if is_lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 { sum_free / n_free as f64 } else { 0.5 * (ub + lb) };
    Solution {
        alpha,
        rho,
        iterations,
        converged,
        kkt_gap,
    }
}

impl Svm {
    pub fn fit(x: &Matrix, y: &[f64], classification: bool, h: &SvmParams) -> Result<Self> {
        if !(h.c > 0.0) || !(h.tol > 0.0) || h.epsilon < 0.0 {
            return Err(Error::invalid("svm needs C > 0, tol > 0 and epsilon ≥ 0"));
        }
        let n = x.nrows();
        let scaler = Scaler::fit(x);
        let z = scaler.transform(x);
        let kernel = match h.kernel {
            Kernel::Rbf { gamma: None } => Kernel::Rbf {
                gamma: Some(1.0 / x.ncols() as f64),
            },
            k => k,
        };
        let (sign, p): (Vec<f64>, Vec<f64>) = if classification {
            (y.iter().map(|&v| if v == 1.0 { 1.0 } else { -1.0 }).collect(), vec![-1.0; n])
        } else {
            let mut sign = vec![1.0; n];
            sign.extend(std::iter::repeat_n(-1.0, n));
            let mut p: Vec<f64> = y.iter().map(|v| h.epsilon - v).collect();
            p.extend(y.iter().map(|v| h.epsilon + v));
            (sign, p)
        };
        let l = p.len();
        let max_iter = h.max_passes.saturating_mul(l).max(1);
        let mut q = QMatrix::new(&z, kernel, sign.clone(), h.cache_mb);
        let sol = solve(&mut q, &p, h.c, h.tol, max_iter);

        let coef_all: Vec<f64> = if classification {
            sol.alpha.iter().zip(&sign).map(|(a, s)| a * s).collect()
        } else {
            (0..n).map(|i| sol.alpha[i] - sol.alpha[i + n]).collect()
        };
        let keep: Vec<usize> = (0..n).filter(|&i| coef_all[i] != 0.0).collect();
        Ok(Svm {
            kernel,
            classification,
            support: z.select_rows(&keep),
            coef: keep.iter().map(|&i| coef_all[i]).collect(),
            rho: sol.rho,
            scaler,
            report: SvmReport {
                iterations: sol.iterations,
                converged: sol.converged,
                kkt_gap: sol.kkt_gap,
                tol: h.tol,
            },
        })
    }

    pub fn decision(&self, x: &Matrix) -> Vec<f64> {
        let mut z = vec![0.0; x.ncols()];
        x.rows()
            .map(|row| {
                self.scaler.transform_row(row, &mut z);
                self.support
                    .rows()
                    .zip(&self.coef)
                    .map(|(sv, c)| c * self.kernel.eval(sv, &z))
                    .sum::<f64>()
                    - self.rho
            })
            .collect()
    }

    /// Regression values, or a logistic squashing of the signed margin
    /// distance for classification.
    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        let d = self.decision(x);
        if self.classification {
            d.into_iter().map(sigmoid).collect()
        } else {
            d
        }
    }

    /// Primal weights on the standardized scale (linear kernel only).
    pub fn linear_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.support.ncols()];
        for (sv, c) in self.support.rows().zip(&self.coef) {
            for (wj, v) in w.iter_mut().zip(sv) {
                *wj += c * v;
            }
        }
        w
    }
}
