use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Variance reduction.
    Mse,
    Gini,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub criterion: Criterion,
    /// Features examined per split; `None` examines all of them.
    pub max_features: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_depth: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node {
    /// Mean response, or share of class 1.
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// A CART tree stored as a flat node list; node 0 is the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

struct Best {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Node impurity times node size: SSE for regression, n·Gini for 0/1 labels.
fn weighted_impurity(criterion: Criterion, n: f64, sum: f64, sum_sq: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    match criterion {
        Criterion::Mse => (sum_sq - sum * sum / n).max(0.0),
        Criterion::Gini => {
            let p1 = sum / n;
            n * (1.0 - p1 * p1 - (1.0 - p1) * (1.0 - p1))
        }
    }
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [f64],
    params: &'a TreeParams,
    rng: &'a mut ChaCha8Rng,
    nodes: Vec<Node>,
    importance: Vec<f64>,
    buf: Vec<(f64, f64)>,
    order: Vec<usize>,
}

impl Builder<'_> {
    fn leaf_value(&self, samples: &[usize]) -> f64 {
        samples.iter().map(|&i| self.y[i]).sum::<f64>() / samples.len() as f64
    }

    fn best_split(&mut self, samples: &[usize], parent: f64) -> Option<Best> {
        let p = self.x.ncols();
        let mtry = self.params.max_features.unwrap_or(p).clamp(1, p);
        let min_leaf = self.params.min_samples_leaf.max(1);
        // Partial Fisher-Yates: features are drawn lazily so the search can
        // continue past `mtry` when none of the first draws can split.
        self.order.clear();
        self.order.extend(0..p);
        let n = samples.len();
        let mut best: Option<Best> = None;
        for k in 0..p {
            if k >= mtry && best.is_some() {
                break;
            }
            let pick = self.rng.random_range(k..p);
            self.order.swap(k, pick);
            let f = self.order[k];

            self.buf.clear();
            self.buf.extend(samples.iter().map(|&i| (self.x.get(i, f), self.y[i])));
            self.buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            if self.buf[0].0 == self.buf[n - 1].0 {
                continue;
            }
            let total: f64 = self.buf.iter().map(|v| v.1).sum();
            let total_sq: f64 = self.buf.iter().map(|v| v.1 * v.1).sum();
            let (mut sl, mut sql) = (0.0, 0.0);
            for i in 0..n - 1 {
                let (xi, yi) = self.buf[i];
                sl += yi;
                sql += yi * yi;
                let nl = i + 1;
                let nr = n - nl;
                if nl < min_leaf || nr < min_leaf || xi == self.buf[i + 1].0 {
                    continue;
                }
                let left = weighted_impurity(self.params.criterion, nl as f64, sl, sql);
                let right = weighted_impurity(self.params.criterion, nr as f64, total - sl, total_sq - sql);
                let gain = parent - left - right;
                if best.as_ref().is_none_or(|b| gain > b.gain) {
                    let hi = self.buf[i + 1].0;
                    let mut threshold = 0.5 * (xi + hi);
                    if threshold >= hi {
                        threshold = xi;
                    }
                    best = Some(Best {
                        feature: f,
                        threshold,
                        gain,
                    });
                }
            }
        }
        best
    }

    fn build(&mut self, samples: &mut [usize], depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(self.leaf_value(samples)));
        let n = samples.len();
        let sum: f64 = samples.iter().map(|&i| self.y[i]).sum();
        let sum_sq: f64 = samples.iter().map(|&i| self.y[i] * self.y[i]).sum();
        let parent = weighted_impurity(self.params.criterion, n as f64, sum, sum_sq);
        let min_leaf = self.params.min_samples_leaf.max(1);
        let depth_ok = self.params.max_depth.is_none_or(|d| depth < d);
        if n < 2 * min_leaf || parent <= 1e-12 * n as f64 || !depth_ok {
            return id;
        }
        let Some(best) = self.best_split(samples, parent) else {
            return id;
        };
        self.importance[best.feature] += best.gain.max(0.0);

        let mut lo = 0;
        for k in 0..n {
            if self.x.get(samples[k], best.feature) <= best.threshold {
                samples.swap(lo, k);
                lo += 1;
            }
        }
        let (l, r) = samples.split_at_mut(lo);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }
}

impl Tree {
    /// Grows a tree on the rows listed in `samples` (repeats allowed, as in a
    /// bootstrap draw). Returns the tree and the total impurity decrease per
    /// feature.
    pub fn fit(
        x: &Matrix,
        y: &[f64],
        samples: &[usize],
        params: &TreeParams,
        rng: &mut ChaCha8Rng,
    ) -> (Tree, Vec<f64>) {
        let mut samples = samples.to_vec();
        let mut b = Builder {
            x,
            y,
            params,
            rng,
            nodes: Vec::new(),
            importance: vec![0.0; x.ncols()],
            buf: Vec::with_capacity(samples.len()),
            order: Vec::with_capacity(x.ncols()),
        };
        b.build(&mut samples, 0);
        (Tree { nodes: b.nodes }, b.importance)
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut k = 0;
        loop {
            match &self.nodes[k] {
                Node::Leaf(v) => return *v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => k = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }
}
