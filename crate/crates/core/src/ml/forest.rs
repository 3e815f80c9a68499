use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{Criterion, Tree, TreeParams};
use crate::{rng, Error, Matrix, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features tried per split; `None` means sqrt(p) for classification and
    /// max(1, p/3) for regression.
    pub max_features: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_features: None,
            min_samples_leaf: 1,
            max_depth: None,
            bootstrap: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
    pub classification: bool,
    /// Mean impurity decrease, normalised to sum to one within each tree.
    pub importances: Vec<f64>,
}

impl Forest {
    pub fn fit(x: &Matrix, y: &[f64], classification: bool, h: &ForestParams, seed: u64) -> Result<Self> {
        if h.n_trees == 0 {
            return Err(Error::invalid("forest needs at least one tree"));
        }
        let (n, p) = (x.nrows(), x.ncols());
        let mtry = h.max_features.unwrap_or(if classification {
            ((p as f64).sqrt().floor() as usize).max(1)
        } else {
            (p / 3).max(1)
        });
        let params = TreeParams {
            criterion: if classification { Criterion::Gini } else { Criterion::Mse },
            max_features: Some(mtry.min(p)),
            min_samples_leaf: h.min_samples_leaf,
            max_depth: h.max_depth,
        };
        let grown: Vec<(Tree, Vec<f64>)> = (0..h.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut r = rng::stream(seed, t as u64);
                let samples: Vec<usize> = if h.bootstrap {
                    (0..n).map(|_| r.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                Tree::fit(x, y, &samples, &params, &mut r)
            })
            .collect();
        let mut importances = vec![0.0; p];
        let mut trees = Vec::with_capacity(grown.len());
        for (tree, imp) in grown {
            let total: f64 = imp.iter().sum();
            if total > 0.0 {
                for (a, v) in importances.iter_mut().zip(&imp) {
                    *a += v / total;
                }
            }
            trees.push(tree);
        }
        for a in &mut importances {
            *a /= h.n_trees as f64;
        }
        Ok(Forest {
            trees,
            classification,
            importances,
        })
    }

    /// Mean of tree outputs (regression) or the share of trees voting for
    /// class 1 (classification; a leaf votes 1 only on a strict majority).
    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        let k = self.trees.len() as f64;
        x.rows()
            .map(|row| {
                let s: f64 = self
                    .trees
                    .iter()
                    .map(|t| {
                        let v = t.predict_row(row);
                        if self.classification {
                            f64::from(u8::from(v > 0.5))
                        } else {
                            v
                        }
                    })
                    .sum();
                s / k
            })
            .collect()
    }
}
