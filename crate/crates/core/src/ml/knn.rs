use serde::{Deserialize, Serialize};

use super::scaler::Scaler;
use crate::{Error, Matrix, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams { k: 5 }
    }
}

/// Brute-force k-nearest neighbours on z-scored features. Equal distances
/// are broken toward the lower training row index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub classification: bool,
    pub scaler: Scaler,
    pub train: Matrix,
    pub y: Vec<f64>,
}

impl Knn {
    pub fn fit(x: &Matrix, y: &[f64], classification: bool, h: &KnnParams) -> Result<Self> {
        if h.k == 0 {
            return Err(Error::invalid("k must be positive"));
        }
        let scaler = Scaler::fit(x);
        Ok(Knn {
            k: h.k.min(x.nrows()),
            classification,
            train: scaler.transform(x),
            scaler,
            y: y.to_vec(),
        })
    }

    /// Indices of the k nearest training rows to `z` (already scaled).
    pub fn neighbours(&self, z: &[f64]) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = self
            .train
            .rows()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
            .collect();
        let k = self.k;
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < d.len() {
            d.select_nth_unstable_by(k - 1, cmp);
            d.truncate(k);
        }
        d.sort_unstable_by(cmp);
        d.into_iter().map(|(_, i)| i).collect()
    }

    /// Mean neighbour response; for 0/1 labels that is the funded vote share.
    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        let mut z = vec![0.0; x.ncols()];
        x.rows()
            .map(|row| {
                self.scaler.transform_row(row, &mut z);
                let nb = self.neighbours(&z);
                nb.iter().map(|&i| self.y[i]).sum::<f64>() / nb.len() as f64
            })
            .collect()
    }
}
