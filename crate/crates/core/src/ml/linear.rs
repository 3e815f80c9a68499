use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::scaler::Scaler;
use crate::{Error, Matrix, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinearParams {
    /// Diagonal jitter, scaled by the row count, added to the normal
    /// equations so rank-deficient designs still solve.
    pub ridge: f64,
}

impl Default for LinearParams {
    fn default() -> Self {
        LinearParams { ridge: 1e-10 }
    }
}

/// Ordinary least squares on standardized features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub scaler: Scaler,
    /// Coefficients on the standardized scale.
    pub coef: Vec<f64>,
    pub intercept: f64,
}

/// Z'Z and Z'y for standardized `z`, accumulated row by row.
pub(crate) fn gram(z: &Matrix, y: &[f64], weights: Option<&[f64]>) -> (DMatrix<f64>, DVector<f64>) {
    let p = z.ncols();
    let mut a = DMatrix::<f64>::zeros(p, p);
    let mut b = DVector::<f64>::zeros(p);
    for (i, row) in z.rows().enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        for j in 0..p {
            let rj = w * row[j];
            b[j] += rj * y[i];
            for k in 0..=j {
                a[(j, k)] += rj * row[k];
            }
        }
    }
    for j in 0..p {
        for k in 0..j {
            a[(k, j)] = a[(j, k)];
        }
    }
    (a, b)
}

impl Linear {
    pub fn fit(x: &Matrix, y: &[f64], h: &LinearParams) -> Result<Self> {
        let n = x.nrows() as f64;
        let scaler = Scaler::fit(x);
        let z = scaler.transform(x);
        let ybar = y.iter().sum::<f64>() / n;
        let yc: Vec<f64> = y.iter().map(|v| v - ybar).collect();
        let (mut a, b) = gram(&z, &yc, None);
        for j in 0..a.nrows() {
            a[(j, j)] += h.ridge * n;
        }
        let coef = a
            .cholesky()
            .ok_or_else(|| Error::Degenerate("normal equations are not positive definite".into()))?
            .solve(&b);
        Ok(Linear {
            scaler,
            coef: coef.iter().copied().collect(),
            intercept: ybar,
        })
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        let mut z = vec![0.0; x.ncols()];
        x.rows()
            .map(|row| {
                self.scaler.transform_row(row, &mut z);
                self.intercept + z.iter().zip(&self.coef).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }

    /// Weights and intercept on the original feature scale.
    pub fn coefficients(&self) -> (Vec<f64>, f64) {
        let w: Vec<f64> = self.coef.iter().zip(&self.scaler.sd).map(|(c, s)| c / s).collect();
        let b = self.intercept - w.iter().zip(&self.scaler.mean).map(|(w, m)| w * m).sum::<f64>();
        (w, b)
    }

    pub fn importance(&self) -> Vec<f64> {
        self.coef.iter().map(|c| c.abs()).collect()
    }
}
